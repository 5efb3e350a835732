"""Node-perspective degree distributions ``lambda(z) = sum_i lambda_i z^i``.

Coefficients are fractions of *nodes* with a given degree (not the
edge-perspective convention of coding theory).  Distributions are
immutable and evaluate on floats or numpy arrays alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import (
    DegenerateRange,
    DegreeZero,
    DomainError,
    EmptyDistribution,
    NegativeFraction,
    NotNormalized,
    ParseError,
    Unsolvable,
)

NORM_TOL = 1e-6


@dataclass(frozen=True)
class DegreeDistribution:
    degrees: tuple[int, ...]
    fractions: tuple[float, ...]
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cdf = np.cumsum(self.fractions)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    def __call__(self, z):
        return evaluate(self, z)

    @property
    def coefficients(self) -> dict[int, float]:
        return dict(zip(self.degrees, self.fractions))

    @property
    def min_degree(self) -> int:
        return self.degrees[0]

    @property
    def max_degree(self) -> int:
        return self.degrees[-1]

    def __str__(self):
        return format_distribution(self)


def from_coefficients(entries) -> DegreeDistribution:
    """Build a distribution from ``(degree, fraction)`` pairs or a mapping.

    Zero-fraction entries are dropped.  A sum within ``NORM_TOL`` of one is
    rescaled to one; anything further off raises ``NotNormalized``.
    """
    if isinstance(entries, dict):
        entries = list(entries.items())
    entries = list(entries)
    if not entries:
        raise EmptyDistribution("degree distribution has no entries")
    seen = set()
    for k, f in entries:
        if int(k) != k:
            raise DegreeZero(f"degree {k!r} is not an integer")
        if k < 1:
            raise DegreeZero(f"degree {k} < 1 is not allowed")
        if k in seen:
            raise ValueError(f"degree {k} listed twice")
        seen.add(k)
        if not f >= 0:
            raise NegativeFraction(f"fraction {f} for degree {k} is negative")
    total = math.fsum(f for _, f in entries)
    if abs(total - 1.0) > NORM_TOL:
        raise NotNormalized(f"fractions sum to {total:.9g}, expected 1")
    kept = sorted((int(k), float(f)) for k, f in entries if f > 0)
    if not kept:
        raise EmptyDistribution("all fractions are zero")
    if abs(total - 1.0) > 1e-12:
        kept = [(k, f / total) for k, f in kept]
    return DegreeDistribution(tuple(k for k, _ in kept), tuple(f for _, f in kept))


def point_mass(k: int) -> DegreeDistribution:
    return from_coefficients([(k, 1.0)])


def evaluate(d: DegreeDistribution, z):
    """``sum_i d_i z^i`` for ``z`` in [0, 1] (scalar or array)."""
    if isinstance(z, np.ndarray):
        if np.any((z < 0) | (z > 1)):
            raise DomainError("evaluation point outside [0, 1]")
    elif not 0.0 <= z <= 1.0:
        raise DomainError(f"evaluation point {z} outside [0, 1]")
    out = 0.0
    for k, f in zip(d.degrees, d.fractions):
        out = out + f * z**k
    return out


def mean_degree(d: DegreeDistribution) -> float:
    """First derivative at one, i.e. the average node degree."""
    return math.fsum(k * f for k, f in zip(d.degrees, d.fractions))


def second_derivative_at_one(d: DegreeDistribution) -> float:
    return math.fsum(k * (k - 1) * f for k, f in zip(d.degrees, d.fractions))


def build_scale_free(gamma: float, k_min: int, n_nodes: int) -> DegreeDistribution:
    """Power law ``k^-gamma`` on ``[k_min, k_max]`` with
    ``k_max = k_min * N^(1/(gamma-1))`` rounded to the nearest integer."""
    if not gamma > 1:
        raise DegenerateRange(f"gamma must exceed 1, got {gamma}")
    if k_min < 1:
        raise DegreeZero("k_min must be at least 1")
    if n_nodes < 2:
        raise DegenerateRange("n_nodes must be at least 2")
    k_max = round(k_min * n_nodes ** (1.0 / (gamma - 1.0)))
    if k_max < k_min:
        raise DegenerateRange(f"k_max={k_max} below k_min={k_min}")
    ks = range(k_min, k_max + 1)
    weights = [k ** (-gamma) for k in ks]
    total = math.fsum(weights)
    return from_coefficients([(k, w / total) for k, w in zip(ks, weights)])


def _truncated_poisson(log_mu, k_min, k_max):
    ks = np.arange(k_min, k_max + 1)
    logw = ks * log_mu - gammaln(ks + 1)
    w = np.exp(logw - logw.max())
    return ks, w / w.sum()


def build_er_truncated(target_mean: float, k_min: int, k_max: int) -> DegreeDistribution:
    """Poisson shape ``mu^k / k!`` on ``[k_min, k_max]`` with ``mu`` solved so
    the mean equals ``target_mean``."""
    if k_min < 1:
        raise DegreeZero("k_min must be at least 1")
    if k_max < k_min:
        raise DegenerateRange(f"k_max={k_max} below k_min={k_min}")
    if k_min == k_max:
        if abs(target_mean - k_min) > 1e-9:
            raise Unsolvable(f"only mean {k_min} is achievable on a single degree")
        return point_mass(k_min)
    if not k_min < target_mean < k_max:
        raise Unsolvable(
            f"mean {target_mean} not achievable on degrees [{k_min}, {k_max}]"
        )

    def gap(log_mu):
        ks, w = _truncated_poisson(log_mu, k_min, k_max)
        return float(ks @ w) - target_mean

    lo, hi = -50.0, 50.0
    if gap(lo) > 0 or gap(hi) < 0:
        raise Unsolvable(f"mean {target_mean} too close to the support edge")
    log_mu = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14)
    ks, w = _truncated_poisson(log_mu, k_min, k_max)
    return from_coefficients([(int(k), float(f)) for k, f in zip(ks, w)])


def sample_degree(d: DegreeDistribution, u: float) -> int:
    """Inverse-CDF lookup; degree ``k`` owns the half-open ``[cdf_{k-1}, cdf_k)``."""
    idx = int(np.searchsorted(d._cdf, u, side="right"))
    return d.degrees[min(idx, len(d.degrees) - 1)]


def sample_degrees(d: DegreeDistribution, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(d._cdf, u, side="right")
    np.minimum(idx, len(d.degrees) - 1, out=idx)
    return np.asarray(d.degrees, dtype=np.int64)[idx]


# Textual literals: "2:0.5,3:0.5", "z^3", "sf(2.8,1,100)", "er(1.4,1,13)".
_POINT = re.compile(r"^z(?:\^(\d+))?$")
_CALL = re.compile(r"^(sf|er)\((.*)\)$")


def parse_distribution(text: str) -> DegreeDistribution:
    s = text.strip().replace(" ", "")
    if not s:
        raise EmptyDistribution("empty distribution literal")
    m = _POINT.match(s)
    if m:
        return point_mass(int(m.group(1) or 1))
    m = _CALL.match(s)
    if m:
        args = m.group(2).split(",")
        try:
            if m.group(1) == "sf" and len(args) == 3:
                return build_scale_free(float(args[0]), int(args[1]), int(args[2]))
            if m.group(1) == "er" and len(args) == 3:
                return build_er_truncated(float(args[0]), int(args[1]), int(args[2]))
        except ValueError as exc:
            if isinstance(exc, (DegenerateRange, Unsolvable, DegreeZero)):
                raise
            raise ParseError(f"bad arguments in {text!r}") from exc
        raise ParseError(f"{m.group(1)}() takes three arguments: {text!r}")
    entries = []
    for part in s.split(","):
        try:
            k, f = part.split(":")
            entries.append((int(k), float(f)))
        except ValueError as exc:
            raise ParseError(f"bad degree:fraction pair {part!r}") from exc
    return from_coefficients(entries)


def format_distribution(d: DegreeDistribution) -> str:
    """Canonical literal; ``parse_distribution`` inverts it exactly."""
    if len(d.degrees) == 1:
        return f"z^{d.degrees[0]}"
    return ",".join(f"{k}:{f!r}" for k, f in zip(d.degrees, d.fractions))
