"""Monte-Carlo simulation of failure and healing on sampled two-layer networks.

Physical node ``k*a + j`` (``0 <= j < a``) is controlled by cyber node ``k``.
Both layers are configuration-model graphs.  Every iteration draws fresh
randomness for contagion and message losses, and the sub-steps run in the
same order as the density-evolution derivation, so that a large sparse
network tracks the recursion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import parallel
from .de_engine import SystemParams
from .degree_dist import DegreeDistribution, sample_degrees
from .errors import UnsupportedParams, ValidationError

MAX_REPAIR_ROUNDS = 100


@dataclass(frozen=True)
class CpsGraph:
    n_cyber: int
    a: int
    physical_edges: np.ndarray  # (m, 2), u < v
    cyber_edges: np.ndarray
    _phys_dir: tuple = field(init=False, repr=False, compare=False)
    _cyber_dir: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_phys_dir", _directed(self.physical_edges))
        object.__setattr__(self, "_cyber_dir", _directed(self.cyber_edges))

    @property
    def n_physical(self) -> int:
        return self.n_cyber * self.a

    @property
    def interlink(self) -> np.ndarray:
        """Cyber owner of every physical node."""
        return np.arange(self.n_physical) // self.a

    def physical_degrees(self) -> np.ndarray:
        return np.bincount(self.physical_edges.ravel(), minlength=self.n_physical)

    def cyber_degrees(self) -> np.ndarray:
        return np.bincount(self.cyber_edges.ravel(), minlength=self.n_cyber)

    def physical_adj(self) -> list[list[int]]:
        return _adjacency(self.physical_edges, self.n_physical)

    def cyber_adj(self) -> list[list[int]]:
        return _adjacency(self.cyber_edges, self.n_cyber)


def _directed(edges):
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]])


def _adjacency(edges, n):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(int(v))
        adj[v].append(int(u))
    return adj


def configuration_model(n: int, dist: DegreeDistribution, rng) -> np.ndarray:
    """Simple graph with degrees drawn from ``dist``.

    An odd stub total is fixed by giving one random node an extra stub.
    Self-loops and repeated pairs are rejected and their stubs re-paired
    together with an equal number of stubs from random accepted edges; after
    ``MAX_REPAIR_ROUNDS`` rounds any remaining bad pairs are dropped.
    """
    degs = sample_degrees(dist, rng.random(n))
    if degs.sum() % 2:
        degs[rng.integers(n)] += 1
    stubs = np.repeat(np.arange(n, dtype=np.int64), degs)
    rng.shuffle(stubs)
    pending = stubs.reshape(-1, 2)
    accepted = np.empty((0, 2), dtype=np.int64)
    for _ in range(MAX_REPAIR_ROUNDS + 1):
        lo = pending.min(axis=1)
        hi = pending.max(axis=1)
        keys = lo * n + hi
        ok = lo != hi
        _, first = np.unique(keys, return_index=True)
        uniq = np.zeros(len(keys), dtype=bool)
        uniq[first] = True
        ok &= uniq
        if len(accepted):
            ok &= ~np.isin(keys, accepted[:, 0] * n + accepted[:, 1])
        accepted = np.concatenate([accepted, np.stack([lo[ok], hi[ok]], axis=1)])
        bad = pending[~ok]
        if not len(bad):
            break
        # Break up as many random accepted edges as there are bad pairs.
        k = min(len(bad), len(accepted))
        take = rng.choice(len(accepted), size=k, replace=False)
        keep = np.ones(len(accepted), dtype=bool)
        keep[take] = False
        loose = np.concatenate([bad.ravel(), accepted[take].ravel()])
        accepted = accepted[keep]
        rng.shuffle(loose)
        pending = loose.reshape(-1, 2)
    return accepted[np.lexsort((accepted[:, 1], accepted[:, 0]))]


def build_cps(
    n_cyber: int,
    a: int,
    lam: DegreeDistribution,
    rho: DegreeDistribution,
    seed,
) -> CpsGraph:
    if n_cyber < 2:
        raise ValidationError("n_cyber must be at least 2")
    if a < 1:
        raise ValidationError("a must be at least 1")
    rng = np.random.default_rng(seed)
    phys = configuration_model(n_cyber * a, lam, rng)
    cyber = configuration_model(n_cyber, rho, rng)
    return CpsGraph(n_cyber, a, phys, cyber)


@dataclass(frozen=True)
class SimState:
    physical_failed: np.ndarray
    cyber_failed: np.ndarray
    slot: int = 0


def initial_state(graph: CpsGraph, epsilon: float, rng) -> SimState:
    failed = rng.random(graph.n_physical) < epsilon
    return SimState(failed, _blocks_all(failed, graph), 0)


def _blocks_all(flags, graph):
    return flags.reshape(graph.n_cyber, graph.a).all(axis=1)


def _contagion(graph, failed, p, rng, p_mp=0.0):
    src, dst = graph._phys_dir
    fire = failed[src]
    if p < 1:
        fire &= rng.random(len(src)) < p
    hit = np.zeros(graph.n_physical, dtype=bool)
    hit[dst[fire]] = True
    if p_mp > 0:
        hit &= rng.random(graph.n_physical) >= p_mp
    return hit


def _all_neighbours_failed(graph, cyber_failed, rng, p_mc=0.0):
    """Per cyber node: every cyber neighbour announces failure (lost
    announcements read as alive; an isolated node has no live neighbour)."""
    src, dst = graph._cyber_dir
    announce = cyber_failed[src]
    if p_mc > 0:
        announce &= rng.random(len(src)) >= p_mc
    n_failed = np.bincount(dst, weights=announce, minlength=graph.n_cyber)
    deg = np.bincount(dst, minlength=graph.n_cyber)
    return n_failed == deg


def _siblings_healthy(graph, confirmed_healthy):
    """Per physical node: every *other* node under the same cyber node is
    confirmed healthy."""
    per_block = confirmed_healthy.reshape(graph.n_cyber, graph.a).sum(axis=1)
    return per_block[graph.interlink] - confirmed_healthy == graph.a - 1


def run_iteration(
    graph: CpsGraph,
    state: SimState,
    params: SystemParams,
    rng,
    healing: bool = True,
    resample_interlinks: bool = False,
) -> SimState:
    """One synchronous delay-free iteration.

    1. contagion: each failed node defects each physical neighbour with
       probability ``p``; a node's incoming defection is lost with ``P_mp``;
    2. reports: each physical status report to the owner is lost with
       ``P_mi``; a cyber node is failed when it receives a failure report from
       all ``a`` physical nodes;
    3. healing decision: a cyber node can heal a physical node when all other
       physical nodes under it are confirmed healthy and not every cyber
       neighbour announces failure (announcements lost with ``P_mc``);
    4. resolution: a failed node stays failed unless healed, and a healing
       message is lost with ``P_mi``.

    With ``resample_interlinks`` the physical-to-cyber assignment is redrawn
    (a uniform permutation of the physical nodes) before step 2.  Fixed blocks
    let two failed siblings block each other's healing indefinitely;
    resampling removes that memory.
    """
    x = state.physical_failed
    y = x | _contagion(graph, x, params.p, rng, params.p_mp)
    perm = rng.permutation(graph.n_physical) if resample_interlinks else None
    yb = y[perm] if perm is not None else y
    if params.p_mi > 0:
        lost = rng.random(graph.n_physical) < params.p_mi
    else:
        lost = np.zeros(graph.n_physical, dtype=bool)
    cyber_failed = _blocks_all(yb & ~lost, graph)
    if not healing:
        return SimState(y, cyber_failed, state.slot + 1)
    isolated = _all_neighbours_failed(graph, cyber_failed, rng, params.p_mc)
    can_heal = _siblings_healthy(graph, ~yb & ~lost) & ~isolated[graph.interlink]
    if params.p_mi > 0:
        can_heal &= rng.random(graph.n_physical) >= params.p_mi
    if perm is not None:
        unperm = np.empty_like(can_heal)
        unperm[perm] = can_heal
        can_heal = unperm
    return SimState(y & ~can_heal, cyber_failed, state.slot + 1)


def run_delayed_iteration(
    graph: CpsGraph,
    state: SimState,
    params: SystemParams,
    delay_slots: int,
    rng,
    healing: bool = True,
    resample_interlinks: bool = False,
) -> list[SimState]:
    """``delay_slots`` contagion slots then the response slot; returns the
    state after every slot.

    The response uses sibling states from slot ``d-1`` and cyber-neighbour
    states derived from slot ``d-2`` (slot 0 when the index is negative).
    A node that can be healed is failed afterwards only if a neighbour in the
    slot-``d`` state defects it again.
    """
    if not params.lossless:
        raise UnsupportedParams("delayed simulation requires P_mp = P_mc = P_mi = 0")
    d = delay_slots
    ys = [state.physical_failed]
    out = []
    for _ in range(d):
        y = ys[-1] | _contagion(graph, ys[-1], params.p, rng)
        ys.append(y)
        out.append(SimState(y, _blocks_all(y, graph), state.slot + len(out) + 1))
    yd = ys[d]
    if not healing:
        nxt = yd
    else:
        sib = ys[d - 1]
        nbr = ys[d - 2] if d >= 2 else ys[0]
        if resample_interlinks:
            perm = rng.permutation(graph.n_physical)
            sib, nbr = sib[perm], nbr[perm]
        isolated = _all_neighbours_failed(graph, _blocks_all(nbr, graph), rng)
        can_heal = _siblings_healthy(graph, ~sib) & ~isolated[graph.interlink]
        if resample_interlinks:
            unperm = np.empty_like(can_heal)
            unperm[perm] = can_heal
            can_heal = unperm
        rehit = _contagion(graph, yd, params.p, rng)
        nxt = (yd & ~can_heal) | (can_heal & rehit)
    out.append(SimState(nxt, _blocks_all(nxt, graph), state.slot + d + 1))
    return out


@dataclass(frozen=True)
class TrialResult:
    physical: np.ndarray  # failure fraction per slot, slot 0 = initial
    cyber: np.ndarray
    slots_per_iteration: int

    def at_iterations(self) -> np.ndarray:
        return self.physical[:: self.slots_per_iteration]


def run_trial(
    graph: CpsGraph,
    epsilon: float,
    params: SystemParams,
    max_iters: int,
    delay_slots: int = 0,
    seed=None,
    healing: bool = True,
    resample_interlinks: bool = False,
) -> TrialResult:
    """Seed failures with probability ``epsilon`` and record every slot.

    ``delay_slots = 0`` uses the delay-free rules (one slot per iteration);
    ``d >= 1`` uses the delayed rules (``d + 1`` slots per iteration).
    Absorbing all-healthy / all-failed states are padded to full length.
    """
    if not 0 <= epsilon <= 1:
        raise ValidationError(f"epsilon {epsilon} outside [0, 1]")
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    if params.a != graph.a:
        raise ValidationError("params.a does not match the graph")
    rng = np.random.default_rng(seed)
    spi = delay_slots + 1 if delay_slots else 1
    n_slots = 1 + max_iters * spi
    phys = np.empty(n_slots)
    cyb = np.empty(n_slots)
    state = initial_state(graph, epsilon, rng)
    phys[0] = state.physical_failed.mean()
    cyb[0] = state.cyber_failed.mean()
    pos = 1
    absorbing_full = params.a >= 2 or not healing
    while pos < n_slots:
        if not state.physical_failed.any() or (
            absorbing_full and state.physical_failed.all()
        ):
            phys[pos:] = phys[pos - 1]
            cyb[pos:] = cyb[pos - 1]
            break
        if delay_slots:
            states = run_delayed_iteration(
                graph, state, params, delay_slots, rng, healing, resample_interlinks
            )
        else:
            states = [run_iteration(graph, state, params, rng, healing, resample_interlinks)]
        for s in states:
            phys[pos] = s.physical_failed.mean()
            cyb[pos] = _blocks_all(s.physical_failed, graph).mean()
            pos += 1
        state = states[-1]
    return TrialResult(phys, cyb, spi)


@dataclass(frozen=True)
class EnsembleConfig:
    n_cyber: int
    params: SystemParams
    epsilon: float
    max_iters: int = 50
    delay_slots: int = 0
    healing: bool = True
    resample_interlinks: bool = False
    graph_seed: int | None = None  # None: every trial samples its own graph


@dataclass(frozen=True)
class EnsembleResult:
    mean: np.ndarray
    std: np.ndarray
    trials: int
    seed: int
    slots_per_iteration: int = 1
    cyber_mean: np.ndarray | None = None
    runs: tuple = ()

    def at_iterations(self) -> np.ndarray:
        return self.mean[:: self.slots_per_iteration]


def trial_seeds(base_seed: int, index: int):
    """Graph and dynamics seeds for trial ``index`` (counter-based spawn)."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(index,))
    return ss.spawn(2)


def _trial_job(job) -> TrialResult:
    config, base_seed, i = job
    graph_ss, dyn_ss = trial_seeds(base_seed, i)
    gseed = graph_ss if config.graph_seed is None else config.graph_seed
    p = config.params
    graph = build_cps(config.n_cyber, p.a, p.lam, p.rho, gseed)
    return run_trial(
        graph,
        config.epsilon,
        p,
        config.max_iters,
        config.delay_slots,
        dyn_ss,
        config.healing,
        config.resample_interlinks,
    )


def run_ensemble(
    config: EnsembleConfig,
    trials: int,
    base_seed: int,
    workers: int | None = None,
) -> EnsembleResult:
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    jobs = [(config, base_seed, i) for i in range(trials)]
    runs = parallel.map_ordered(_trial_job, jobs, workers, chunksize=1)
    phys = np.stack([r.physical for r in runs])
    std = phys.std(axis=0, ddof=1) if trials > 1 else np.zeros(phys.shape[1])
    return EnsembleResult(
        phys.mean(axis=0),
        std,
        trials,
        base_seed,
        runs[0].slots_per_iteration,
        np.stack([r.cyber for r in runs]).mean(axis=0),
        tuple(runs),
    )


def empirical_threshold(
    config: EnsembleConfig,
    trials: int,
    base_seed: int,
    resolution: float = 0.01,
    lo: float = 0.0,
    hi: float = 1.0,
    workers: int | None = None,
) -> tuple[float, tuple[float, float]]:
    """Bisect the initial disturbance at which the ensemble-mean final
    failure fraction crosses one half.  Every probe reuses the same seeds."""

    def healed(eps):
        cfg = EnsembleConfig(**{**config.__dict__, "epsilon": eps})
        res = run_ensemble(cfg, trials, base_seed, workers)
        return res.mean[-1] < 0.5

    if not healed(lo):
        return lo, (lo, lo)
    if healed(hi):
        return hi, (hi, hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if healed(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi)


def write_edgelist(graph: CpsGraph, path) -> None:
    """Plain-text dump: one ``u v`` pair per line, one section per layer."""
    with open(path, "w") as fh:
        fh.write(f"# physical {graph.n_physical} a={graph.a}\n")
        for u, v in graph.physical_edges:
            fh.write(f"{u} {v}\n")
        fh.write(f"# cyber {graph.n_cyber}\n")
        for u, v in graph.cyber_edges:
            fh.write(f"{u} {v}\n")


def read_edgelist(path) -> CpsGraph:
    sections: dict[str, list] = {}
    header: dict[str, list[str]] = {}
    cur = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                cur = parts[0]
                header[cur] = parts[1:]
                sections[cur] = []
            else:
                u, v = line.split()
                sections[cur].append((int(u), int(v)))
    n_cyber = int(header["cyber"][0])
    a = int(header["physical"][1].split("=")[1])
    as_arr = lambda rows: np.array(rows, dtype=np.int64).reshape(-1, 2)  # noqa: E731
    return CpsGraph(n_cyber, a, as_arr(sections["physical"]), as_arr(sections["cyber"]))


def write_trace_csv(result: EnsembleResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "slot", "fraction_physical_failed", "fraction_cyber_failed"])
        for i, run in enumerate(result.runs):
            for s, (fp, fc) in enumerate(zip(run.physical, run.cyber)):
                w.writerow([i, s, f"{fp:.6g}", f"{fc:.6g}"])

