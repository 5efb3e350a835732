"""Healing thresholds, parameter sweeps and degree-distribution optimisation.

The threshold ``epsilon_max`` is the largest initial disturbance whose
density-evolution trajectory still heals.  It is located by bisection on the
Healed / not-Healed indicator after a 64-point pre-scan that guards the
single-transition assumption.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import parallel
from .de_engine import (
    DEFAULT_HEAL_TOL,
    DEFAULT_MAX_ITERS,
    SteadyState,
    SystemParams,
    epsilon_s,
    de_step,
    iterate,
)
from .degree_dist import DegreeDistribution, from_coefficients, parse_distribution
from .delay_de import DelayParams, delayed_step_fn
from .errors import CpsError, EmptyDegrees, NonMonotoneIndicator, ValidationError

PRESCAN_POINTS = 64
DEFAULT_RESOLUTION = 1e-3


@dataclass(frozen=True)
class ThresholdResult:
    epsilon_max: float
    bracket: tuple[float, float]
    verdict_lo: SteadyState
    verdict_hi: SteadyState


@dataclass(frozen=True)
class OptimizeResult:
    lambda_star: DegreeDistribution
    epsilon_max_star: float
    epsilon_s_star: float
    evaluations: int


@dataclass(frozen=True)
class SweepRow:
    value: object
    epsilon_s: float
    epsilon_max: float
    status: str = "ok"


def _healed_batch(step, eps: np.ndarray, max_iters: int, heal_tol: float) -> np.ndarray:
    """Vectorised Healed indicator for many initial densities at once."""
    x = np.asarray(eps, dtype=float).copy()
    healed = x < heal_tol
    live = ~healed & (x <= 1 - heal_tol)
    idx = np.flatnonzero(live)
    for _ in range(max_iters):
        if idx.size == 0:
            break
        xi = step(x[idx])
        x[idx] = xi
        done_heal = xi < heal_tol
        healed[idx[done_heal]] = True
        idx = idx[~done_heal & (xi <= 1 - heal_tol)]
    return healed


def threshold_for_step(
    step,
    resolution: float = DEFAULT_RESOLUTION,
    max_iters: int = DEFAULT_MAX_ITERS,
    heal_tol: float = DEFAULT_HEAL_TOL,
) -> ThresholdResult:
    """Bisect the healing threshold of an arbitrary array-capable map."""
    if not resolution > 0:
        raise ValidationError("resolution must be positive")

    def verdict(eps):
        return iterate(step, eps, max_iters, heal_tol).verdict

    grid = np.linspace(0.0, 1.0, PRESCAN_POINTS)
    healed = _healed_batch(step, grid, max_iters, heal_tol)
    flips = int(np.count_nonzero(healed[1:] != healed[:-1]))
    if flips > 1:
        raise NonMonotoneIndicator(
            f"healing indicator changes {flips} times over a {PRESCAN_POINTS}-point scan"
        )
    if flips == 0:
        # epsilon = 0 always heals, so no flip means everything heals.
        return ThresholdResult(1.0, (1.0, 1.0), SteadyState.HEALED, SteadyState.HEALED)
    k = int(np.flatnonzero(healed[1:] != healed[:-1])[0])
    lo, hi = float(grid[k]), float(grid[k + 1])
    v_lo, v_hi = SteadyState.HEALED, verdict(hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v is SteadyState.HEALED:
            lo = mid
        else:
            hi, v_hi = mid, v
    return ThresholdResult(0.5 * (lo + hi), (lo, hi), v_lo, v_hi)


def epsilon_max(
    params: SystemParams,
    resolution: float = DEFAULT_RESOLUTION,
    delay_slots: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    heal_tol: float = DEFAULT_HEAL_TOL,
) -> ThresholdResult:
    """Largest tolerable initial disturbance, optionally under processing delay."""
    if delay_slots:
        step = delayed_step_fn(DelayParams(params, delay_slots))
    else:

        def step(x):
            return de_step(x, params)

    return threshold_for_step(step, resolution, max_iters, heal_tol)


AXES = {
    "a": "a",
    "p": "p",
    "p_mp": "p_mp",
    "pmp": "p_mp",
    "p_mc": "p_mc",
    "pmc": "p_mc",
    "p_mi": "p_mi",
    "pmi": "p_mi",
    "lambda": "lam",
    "lam": "lam",
    "rho": "rho",
    "delay_slots": "delay_slots",
}


def normalize_axis(axis: str) -> str:
    try:
        return AXES[axis.lower()]
    except KeyError:
        raise ValidationError(
            f"unknown sweep axis {axis!r}; expected one of a, p, P_mp, P_mc, P_mi, "
            "lambda, rho, delay_slots"
        ) from None


def coerce_axis_value(axis: str, value):
    field = normalize_axis(axis)
    if field in ("lam", "rho"):
        return value if isinstance(value, DegreeDistribution) else parse_distribution(str(value))
    if field in ("a", "delay_slots"):
        v = float(value)
        if v != int(v):
            raise ValidationError(f"{axis} must be an integer, got {value}")
        return int(v)
    return float(value)


def _sweep_row(job):
    base, field, value, resolution, delay_slots = job
    try:
        if field == "delay_slots":
            params, d = base, value
        else:
            params, d = base.replace(**{field: value}), delay_slots
        eps_s = epsilon_s(params)
        res = epsilon_max(params, resolution, delay_slots=d)
        return SweepRow(value, eps_s, res.epsilon_max)
    except CpsError as exc:
        return SweepRow(value, math.nan, math.nan, f"failed: {exc}")


def sweep(
    base: SystemParams,
    axis: str,
    values,
    resolution: float = DEFAULT_RESOLUTION,
    delay_slots: int = 0,
    workers: int | None = None,
) -> list[SweepRow]:
    """One ``(value, epsilon_s, epsilon_max)`` row per axis value.

    ``epsilon_s`` is always the delay-free sufficient bound.  A row whose
    evaluation fails is kept with NaNs and a ``failed: ...`` status.
    """
    field = normalize_axis(axis)
    values = [coerce_axis_value(axis, v) for v in values]
    jobs = [(base, field, v, resolution, delay_slots) for v in values]
    return parallel.map_ordered(_sweep_row, jobs, workers)


def simplex_grid(n_coords: int, n_steps: int):
    """All nonnegative integer vectors of length ``n_coords`` summing to ``n_steps``."""
    for bars in itertools.combinations(range(n_steps + n_coords - 1), n_coords - 1):
        prev, parts = -1, []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(n_steps + n_coords - 2 - prev)
        yield tuple(parts)


def _lambda_from(degrees, weights) -> DegreeDistribution:
    return from_coefficients([(k, w) for k, w in zip(degrees, weights) if w > 0])


def _score(job) -> float:
    fixed, degrees, weights, resolution = job
    params = fixed.replace(lam=_lambda_from(degrees, weights))
    return epsilon_max(params, resolution).epsilon_max


def optimize_lambda(
    degrees,
    fixed: SystemParams,
    grid_step: float = 0.05,
    refine_step: float | None = None,
    resolution: float = DEFAULT_RESOLUTION,
    workers: int | None = None,
) -> OptimizeResult:
    """Maximise ``epsilon_max`` over physical degree distributions supported
    on ``degrees``; every other parameter comes from ``fixed`` (its ``lam``
    is ignored).

    Exhaustive simplex grid at ``grid_step`` followed by pairwise mass
    transfers of ``refine_step`` (default ``grid_step / 10``) until no move
    strictly improves the score.  Ties keep the earlier candidate.
    """
    degrees = sorted(set(int(k) for k in degrees))
    if not degrees:
        raise EmptyDegrees("optimize_lambda needs at least one degree")
    n_steps = round(1.0 / grid_step)
    if n_steps < 1 or abs(n_steps * grid_step - 1.0) > 1e-9:
        raise ValidationError(f"grid_step {grid_step} does not divide 1")
    if refine_step is None:
        refine_step = grid_step / 10
    n_fine = round(1.0 / refine_step)
    if abs(n_fine * refine_step - 1.0) > 1e-9:
        raise ValidationError(f"refine_step {refine_step} does not divide 1")

    grid = list(simplex_grid(len(degrees), n_steps))
    jobs = [(fixed, degrees, tuple(c / n_steps for c in g), resolution) for g in grid]
    scores = parallel.map_ordered(_score, jobs, workers)
    evaluations = len(jobs)
    best_i = max(range(len(scores)), key=lambda i: (scores[i], -i))
    scale = n_fine // n_steps if n_fine % n_steps == 0 else None
    if scale is None:
        raise ValidationError("refine_step must divide grid_step")
    best = [c * scale for c in grid[best_i]]
    best_score = scores[best_i]
    seen = {tuple(best)}

    improved = len(degrees) > 1
    while improved:
        improved = False
        moves = []
        for i, j in itertools.permutations(range(len(degrees)), 2):
            if best[i] == 0:
                continue
            cand = list(best)
            cand[i] -= 1
            cand[j] += 1
            if tuple(cand) not in seen:
                seen.add(tuple(cand))
                moves.append(cand)
        if not moves:
            break
        cand_jobs = [(fixed, degrees, tuple(c / n_fine for c in m), resolution) for m in moves]
        cand_scores = parallel.map_ordered(_score, cand_jobs, workers)
        evaluations += len(cand_jobs)
        for m, s in zip(moves, cand_scores):
            if s > best_score:
                best, best_score, improved = m, s, True

    lam_star = _lambda_from(degrees, [c / n_fine for c in best])
    params = fixed.replace(lam=lam_star)
    return OptimizeResult(lam_star, best_score, epsilon_s(params), evaluations)
