"""Command-line entry point.

Configs are line-oriented ``key = value`` text (``#`` starts a comment);
command-line flags override file values.  A config file may hold several
runs separated by lines of ``---``; each run needs its own ``out``.

    cpsres threshold --a 5 --p 0.2 --lambda z^2 --rho z^3
    cpsres --config recipes/table1.cfg --out-dir results/
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import mc_sim
from .de_engine import (
    DEFAULT_HEAL_TOL,
    DEFAULT_MAX_ITERS,
    SystemParams,
    de_trajectory,
    epsilon_s,
    one_to_one_trajectory,
)
from .degree_dist import (
    DegreeDistribution,
    format_distribution,
    mean_degree,
    parse_distribution,
    point_mass,
)
from .delay_de import DelayParams, delayed_trajectory
from .errors import CpsError, NumericalError, ParseError, UnknownKey, ValidationError
from .threshold_opt import (
    DEFAULT_RESOLUTION,
    coerce_axis_value,
    epsilon_max,
    normalize_axis,
    optimize_lambda,
    sweep,
)

COMMANDS = ("bound", "de", "one2one", "threshold", "sweep", "optimize", "delay", "simulate")
DEFAULT_SIM_ITERS = 50

# config key -> RunConfig field
KEYS = {
    "command": "command",
    "a": "a",
    "p": "p",
    "pmp": "p_mp",
    "p_mp": "p_mp",
    "pmc": "p_mc",
    "p_mc": "p_mc",
    "pmi": "p_mi",
    "p_mi": "p_mi",
    "lambda": "lam",
    "rho": "rho",
    "epsilon": "epsilon",
    "delay_slots": "delay_slots",
    "n_cyber": "n_cyber",
    "trials": "trials",
    "seed": "seed",
    "resolution": "resolution",
    "max_iters": "max_iters",
    "heal_tol": "heal_tol",
    "out": "out",
    "axis": "axis",
    "values": "values",
    "degrees": "degrees",
    "grid_step": "grid_step",
    "resample_interlinks": "resample_interlinks",
    "graph_out": "graph_out",
    "trace_out": "trace_out",
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    a: int | None = None
    p: float | None = None
    p_mp: float = 0.0
    p_mc: float = 0.0
    p_mi: float = 0.0
    lam: DegreeDistribution | None = None
    rho: DegreeDistribution | None = None
    epsilon: tuple[float, ...] = (0.05,)
    delay_slots: int = 0
    n_cyber: int = 10_000
    trials: int = 20
    seed: int = 0
    resolution: float = DEFAULT_RESOLUTION
    max_iters: int | None = None
    heal_tol: float = DEFAULT_HEAL_TOL
    out: str | None = None
    axis: str | None = None
    values: tuple = ()
    degrees: tuple[int, ...] = ()
    grid_step: float = 0.05
    resample_interlinks: bool = False
    graph_out: str | None = None
    trace_out: str | None = None

    def system_params(self) -> SystemParams:
        missing = [k for k, v in (("a", self.a), ("p", self.p), ("lambda", self.lam),
                                  ("rho", self.rho)) if v is None]
        if missing:
            raise ValidationError(f"{self.command} needs {', '.join(missing)}")
        return SystemParams(self.a, self.p, self.lam, self.rho, self.p_mp, self.p_mc, self.p_mi)


def _int(v: str) -> int:
    f = float(v)
    if f != int(f):
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _epsilons(v: str) -> tuple[float, ...]:
    v = v.strip()
    if v.count(":") == 2:
        lo, hi, step = (float(t) for t in v.split(":"))
        if step <= 0 or hi < lo:
            raise ValueError(f"bad range {v!r}")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(float(round(lo + i * step, 12)) for i in range(n))
    return tuple(float(t) for t in v.split(";") if t.strip())


def _optional_str(v: str) -> str | None:
    return v.strip() or None


CONVERTERS = {
    "command": str.strip,
    "a": _int,
    "p": float,
    "p_mp": float,
    "p_mc": float,
    "p_mi": float,
    "lam": parse_distribution,
    "rho": parse_distribution,
    "epsilon": _epsilons,
    "delay_slots": _int,
    "n_cyber": _int,
    "trials": _int,
    "seed": _int,
    "resolution": float,
    "max_iters": _int,
    "heal_tol": float,
    "out": _optional_str,
    "axis": str.strip,
    "values": lambda v: tuple(t.strip() for t in v.split(";") if t.strip()),
    "degrees": lambda v: tuple(_int(t) for t in v.split(",") if t.strip()),
    "grid_step": float,
    "resample_interlinks": _bool,
    "graph_out": _optional_str,
    "trace_out": _optional_str,
}


def read_pairs(text: str) -> dict[str, tuple[str, int]]:
    """``key = value`` lines to ``{field: (raw value, line number)}``."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key.lower() not in KEYS:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
        out[KEYS[key.lower()]] = (value, lineno)
    return out


def split_documents(text: str) -> list[str]:
    docs, cur = [], []
    for line in text.splitlines():
        if line.strip() == "---":
            docs.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    docs.append("\n".join(cur))
    return [d for d in docs if any(ln.split("#", 1)[0].strip() for ln in d.splitlines())]


def parse_config(text: str = "", overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Validated RunConfig from config text plus flag overrides.

    ``overrides`` maps config keys to raw strings; they win over the file.
    """
    raw = read_pairs(text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.lower() not in KEYS:
            raise UnknownKey(f"unknown key {key!r}")
        raw[KEYS[key.lower()]] = (str(value), None)
    if command is not None:
        raw["command"] = (command, None)
    if "command" not in raw:
        raise ValidationError("no command given")
    values = {}
    for name, (value, lineno) in raw.items():
        label = "lambda" if name == "lam" else name
        try:
            values[name] = CONVERTERS[name](value)
        except ParseError as exc:
            raise ParseError(f"{label}: {exc}", lineno) from exc
        except CpsError as exc:
            where = f" (line {lineno})" if lineno else ""
            raise type(exc)(f"{label}{where}: {exc}") from exc
        except (ValueError, TypeError) as exc:
            raise ParseError(f"bad value for {label}: {exc}", lineno) from exc
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def need(cond, name, msg):
        if not cond:
            raise ValidationError(f"{name}: {msg}")

    need(cfg.command in COMMANDS, "command", f"must be one of {', '.join(COMMANDS)}")
    for name in ("p", "p_mp", "p_mc", "p_mi"):
        v = getattr(cfg, name)
        need(v is None or 0 <= v <= 1, name, "must lie in [0, 1]")
    need(cfg.a is None or cfg.a >= 1, "a", "must be >= 1")
    need(all(0 <= e <= 1 for e in cfg.epsilon) and cfg.epsilon, "epsilon", "values must lie in [0, 1]")
    need(cfg.delay_slots >= 0, "delay_slots", "must be >= 0")
    need(cfg.n_cyber >= 2, "n_cyber", "must be >= 2")
    need(cfg.trials >= 1, "trials", "must be >= 1")
    need(cfg.resolution > 0, "resolution", "must be positive")
    need(cfg.max_iters is None or cfg.max_iters >= 1, "max_iters", "must be >= 1")
    need(0 < cfg.heal_tol < 0.5, "heal_tol", "must lie in (0, 0.5)")
    need(cfg.grid_step > 0, "grid_step", "must be positive")
    if cfg.command in ("de", "threshold", "sweep", "delay", "simulate"):
        cfg.system_params()
    if cfg.command == "bound":
        need(cfg.a is not None and cfg.p is not None and cfg.lam is not None,
             "bound", "needs a, p and lambda")
    if cfg.command == "one2one":
        need(cfg.rho is not None, "rho", "one2one needs rho")
    if cfg.command == "sweep":
        need(cfg.axis is not None, "axis", "sweep needs an axis")
        normalize_axis(cfg.axis)
        need(len(cfg.values) > 0, "values", "sweep needs values")
        for v in cfg.values:
            try:
                coerce_axis_value(cfg.axis, v)
            except CpsError:
                raise
            except ValueError as exc:
                raise ValidationError(f"values: bad entry {v!r}") from exc
    if cfg.command == "optimize":
        need(len(cfg.degrees) > 0, "degrees", "optimize needs degrees")
        need(cfg.a is not None and cfg.p is not None and cfg.rho is not None,
             "optimize", "needs a, p and rho")
    if cfg.command in ("delay",) or (cfg.command in ("threshold", "simulate") and cfg.delay_slots):
        p = cfg.system_params()
        need(p.lossless, "delay_slots", "delay requires pmp = pmc = pmi = 0")


def dump_config(cfg: RunConfig) -> str:
    """Config text that ``parse_config`` maps back to an equal RunConfig."""
    lines = [f"command = {cfg.command}"]
    for f in dataclasses.fields(RunConfig):
        name = f.name
        if name == "command":
            continue
        v = getattr(cfg, name)
        if v is None or (v == () and name in ("values", "degrees")):
            continue
        key = {"lam": "lambda"}.get(name, name)
        if isinstance(v, DegreeDistribution):
            s = format_distribution(v)
        elif name == "epsilon":
            s = ";".join(repr(e) for e in v)
        elif name == "values":
            s = ";".join(v)
        elif name == "degrees":
            s = ",".join(str(k) for k in v)
        elif isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v)
        lines.append(f"{key} = {s}")
    return "\n".join(lines) + "\n"


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return f"{v:.6g}"
    return str(v)


class Output:
    """CSV sink that only appears at its destination once complete."""

    def __init__(self, path: str | None):
        self.path = path
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def row(self, *cells):
        self.writer.writerow([fmt(c) for c in cells])

    def commit(self):
        if self.path is None:
            sys.stdout.write(self.buf.getvalue())
            return
        d = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(d, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".cpsres-", suffix=".csv")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(self.buf.getvalue())
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise


def _trajectory_rows(out, cfg, runs):
    multi = len(cfg.epsilon) > 1
    out.row(*(["epsilon"] if multi else []), "iteration_or_slot", "density")
    for eps, pairs in runs:
        for i, x in pairs:
            out.row(*([eps] if multi else []), i, x)


def run(cfg: RunConfig, out: Output) -> str:
    """Execute ``cfg`` into ``out``; returns the one-line summary."""
    c = cfg.command
    max_iters = cfg.max_iters or DEFAULT_MAX_ITERS
    if c == "bound":
        params = SystemParams(cfg.a, cfg.p, cfg.lam, cfg.rho or point_mass(1))
        v = epsilon_s(params)
        out.row("a", "p", "lambda", "epsilon_s")
        out.row(cfg.a, cfg.p, format_distribution(cfg.lam), v)
        return f"epsilon_s={v:.4f}"
    if c in ("de", "one2one"):
        runs, verdicts = [], []
        for eps in cfg.epsilon:
            if c == "de":
                t = de_trajectory(cfg.system_params(), eps, max_iters, cfg.heal_tol)
            else:
                t = one_to_one_trajectory(cfg.rho, eps, max_iters, cfg.heal_tol)
            runs.append((eps, list(enumerate(t.densities))))
            verdicts.append(t)
        _trajectory_rows(out, cfg, runs)
        return " ".join(
            f"epsilon={e:g} verdict={t.verdict} iterations={len(t) - 1} final={t.last_density:.6g}"
            for e, t in zip(cfg.epsilon, verdicts)
        )
    if c == "delay":
        dp = DelayParams(cfg.system_params(), cfg.delay_slots)
        runs, summ = [], []
        for eps in cfg.epsilon:
            t = delayed_trajectory(dp, eps, max_iters * (cfg.delay_slots + 1), cfg.heal_tol)
            runs.append((eps, list(t.slot_densities)))
            summ.append(f"epsilon={eps:g} verdict={t.verdict} slots={t.slot_densities[-1][0]}")
        _trajectory_rows(out, cfg, runs)
        return " ".join(summ)
    if c == "threshold":
        params = cfg.system_params()
        r = epsilon_max(params, cfg.resolution, cfg.delay_slots, max_iters, cfg.heal_tol)
        lo, hi = r.bracket
        out.row("epsilon_max", "bracket_lo", "bracket_hi", "epsilon_s", "delay_slots")
        out.row(r.epsilon_max, lo, hi, epsilon_s(params), cfg.delay_slots)
        return f"epsilon_max={r.epsilon_max:.4f} bracket=[{lo:.4f},{hi:.4f}]"
    if c == "sweep":
        rows = sweep(cfg.system_params(), cfg.axis, cfg.values, cfg.resolution, cfg.delay_slots)
        out.row("axis_value", "epsilon_s", "epsilon_max", "status")
        for raw, r in zip(cfg.values, rows):
            out.row(raw, r.epsilon_s, r.epsilon_max, r.status)
        failed = sum(r.status != "ok" for r in rows)
        return f"axis={cfg.axis} rows={len(rows)} failed={failed}"
    if c == "optimize":
        fixed = SystemParams(cfg.a, cfg.p, cfg.lam or point_mass(cfg.degrees[0]), cfg.rho,
                             cfg.p_mp, cfg.p_mc, cfg.p_mi)
        r = optimize_lambda(cfg.degrees, fixed, cfg.grid_step, resolution=cfg.resolution)
        coeffs = r.lambda_star.coefficients
        out.row("degree", "coefficient")
        for k in sorted(set(cfg.degrees)):
            out.row(k, float(coeffs.get(k, 0.0)))
        out.row("epsilon_max", r.epsilon_max_star)
        out.row("epsilon_s", r.epsilon_s_star)
        return (
            f"lambda={format_distribution(r.lambda_star)} epsilon_max={r.epsilon_max_star:.4f} "
            f"epsilon_s={r.epsilon_s_star:.4f} (sufficient bound at the optimum, mean physical "
            f"degree {mean_degree(r.lambda_star):g}) evaluations={r.evaluations}"
        )
    if c == "simulate":
        params = cfg.system_params()
        iters = cfg.max_iters or DEFAULT_SIM_ITERS
        multi = len(cfg.epsilon) > 1
        out.row(*(["epsilon"] if multi else []), "slot", "mean_fraction", "std", "trials")
        finals = []
        for eps in cfg.epsilon:
            ens = mc_sim.EnsembleConfig(cfg.n_cyber, params, eps, iters, cfg.delay_slots,
                                        resample_interlinks=cfg.resample_interlinks)
            res = mc_sim.run_ensemble(ens, cfg.trials, cfg.seed)
            for s, (m, sd) in enumerate(zip(res.mean, res.std)):
                out.row(*([eps] if multi else []), s, m, sd, res.trials)
            finals.append(f"epsilon={eps:g} final_mean={res.mean[-1]:.6g}")
            if cfg.trace_out:
                root, ext = os.path.splitext(cfg.trace_out)
                path = f"{root}_eps{eps:g}{ext}" if multi else cfg.trace_out
                mc_sim.write_trace_csv(res, path)
        if cfg.graph_out:
            graph_ss, _ = mc_sim.trial_seeds(cfg.seed, 0)
            g = mc_sim.build_cps(cfg.n_cyber, params.a, params.lam, params.rho, graph_ss)
            mc_sim.write_edgelist(g, cfg.graph_out)
        return " ".join(finals)
    raise ValidationError(f"unknown command {c!r}")


def dispatch(cfg: RunConfig, out_dir: str | None = None) -> int:
    """Run one config; 0 on success, 1 on validation error, 2 on numerical error."""
    path = cfg.out
    if path and out_dir and not os.path.isabs(path):
        path = os.path.join(out_dir, path)
    out = Output(path)
    try:
        summary = run(cfg, out)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out.commit()
    print(summary, file=sys.stdout if path else sys.stderr)
    return 0


FLAGS = (
    ("--a", "a"), ("--p", "p"), ("--pmp", "pmp"), ("--pmc", "pmc"), ("--pmi", "pmi"),
    ("--lambda", "lambda"), ("--rho", "rho"), ("--epsilon", "epsilon"),
    ("--delay-slots", "delay_slots"), ("--n-cyber", "n_cyber"), ("--trials", "trials"),
    ("--seed", "seed"), ("--resolution", "resolution"), ("--max-iters", "max_iters"),
    ("--heal-tol", "heal_tol"), ("--out", "out"), ("--axis", "axis"), ("--values", "values"),
    ("--degrees", "degrees"), ("--grid-step", "grid_step"),
    ("--resample-interlinks", "resample_interlinks"), ("--graph-out", "graph_out"),
    ("--trace-out", "trace_out"),
)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cpsres",
        description="Failure propagation and self-healing in interdependent networks.",
    )
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="key = value config file")
    ap.add_argument("--out-dir", metavar="DIR", help="base directory for relative out paths")
    for flag, key in FLAGS:
        ap.add_argument(flag, dest=key, metavar=key.upper())
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for _, key in FLAGS}
    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    docs = split_documents(text) or [""]
    if len(docs) > 1 and overrides.get("out"):
        print("error: --out cannot be used with a multi-run config", file=sys.stderr)
        return 1
    status = 0
    for doc in docs:
        try:
            cfg = parse_config(doc, overrides, args.command)
        except CpsError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        status = max(status, dispatch(cfg, args.out_dir))
    return status


if __name__ == "__main__":
    sys.exit(main())
