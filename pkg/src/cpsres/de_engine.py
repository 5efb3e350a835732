"""Delay-free density evolution for self-healing cyber-physical networks.

One iteration maps the physical failure density ``x`` through three message
densities:

* ``y`` - a physical node is failed or receives a delivered defection
  message from one of its physical neighbours;
* ``w`` - a cyber node has received failure reports from all ``a`` of its
  physical nodes (so it is out of service);
* ``u`` - a cyber node cannot heal a given physical node, because some other
  physical node under it is failed / unreported or because every cyber
  neighbour announces failure.

The next density is ``y*u + y*(1-u)*P_mi`` (failed and not healed, or the
healing message was lost).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .degree_dist import DegreeDistribution, mean_degree, second_derivative_at_one
from .errors import DomainError, UnsupportedParams, ValidationError

DEFAULT_HEAL_TOL = 1e-8
DEFAULT_MAX_ITERS = 10_000


@dataclass(frozen=True)
class SystemParams:
    a: int
    p: float
    lam: DegreeDistribution
    rho: DegreeDistribution
    p_mp: float = 0.0
    p_mc: float = 0.0
    p_mi: float = 0.0

    def __post_init__(self):
        if int(self.a) != self.a or self.a < 1:
            raise ValidationError(f"a must be an integer >= 1, got {self.a}")
        for name in ("p", "p_mp", "p_mc", "p_mi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        for name in ("lam", "rho"):
            if not isinstance(getattr(self, name), DegreeDistribution):
                raise ValidationError(f"{name} must be a DegreeDistribution")

    @property
    def lossless(self) -> bool:
        return self.p_mp == 0 and self.p_mc == 0 and self.p_mi == 0

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)


class SteadyState(enum.Enum):
    HEALED = "Healed"
    COLLAPSED = "Collapsed"
    UNDECIDED = "Undecided"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Trajectory:
    densities: tuple[float, ...]
    verdict: SteadyState

    @property
    def last_density(self) -> float:
        return self.densities[-1]

    def __len__(self):
        return len(self.densities)


def _check_unit(x):
    if isinstance(x, np.ndarray):
        if np.any((x < 0) | (x > 1)):
            raise DomainError("density outside [0, 1]")
    elif not 0.0 <= x <= 1.0:
        raise DomainError(f"density {x} outside [0, 1]")


def _clip(v):
    if isinstance(v, np.ndarray):
        return np.clip(v, 0.0, 1.0)
    return min(1.0, max(0.0, v))


def contagion_density(x, p, lam, p_mp=0.0):
    """Failed, or hit by a delivered defection from a failed neighbour."""
    return _clip(x + (1 - x) * (1 - lam(1 - p * x)) * (1 - p_mp))


def de_step(x, params: SystemParams):
    """One density-evolution iteration ``x_l = f(x_{l-1})``.

    Accepts a scalar or a numpy array of densities.
    """
    _check_unit(x)
    a = params.a
    y = contagion_density(x, params.p, params.lam, params.p_mp)
    w = _clip((y * (1 - params.p_mi)) ** a)
    u = _clip(
        1
        - ((1 - y) * (1 - params.p_mi)) ** (a - 1)
        * (1 - params.rho(w * (1 - params.p_mc)))
    )
    return _clip(y * u + y * (1 - u) * params.p_mi)


def classify(x: float, heal_tol: float) -> SteadyState | None:
    if x < heal_tol:
        return SteadyState.HEALED
    if x > 1 - heal_tol:
        return SteadyState.COLLAPSED
    return None


def iterate(step, epsilon: float, max_iters: int, heal_tol: float) -> Trajectory:
    """Run ``x_{l} = step(x_{l-1})`` from ``epsilon`` until a steady state."""
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    if not 0 < heal_tol < 0.5:
        raise ValidationError("heal_tol must lie in (0, 0.5)")
    _check_unit(epsilon)
    xs = [float(epsilon)]
    verdict = classify(xs[0], heal_tol)
    n = 0
    while verdict is None and n < max_iters:
        xs.append(float(step(xs[-1])))
        verdict = classify(xs[-1], heal_tol)
        n += 1
    return Trajectory(tuple(xs), verdict or SteadyState.UNDECIDED)


def de_trajectory(
    params: SystemParams,
    epsilon: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    heal_tol: float = DEFAULT_HEAL_TOL,
) -> Trajectory:
    return iterate(lambda x: de_step(x, params), epsilon, max_iters, heal_tol)


def one_to_one_step(x, rho: DegreeDistribution):
    """One-to-one coupling: a physical node stays failed only if every cyber
    neighbour of its controller is failed, so ``x -> rho(x)``."""
    _check_unit(x)
    return rho(x)


def one_to_one_trajectory(
    rho: DegreeDistribution,
    epsilon: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    heal_tol: float = DEFAULT_HEAL_TOL,
) -> Trajectory:
    # epsilon = 1 is the fixed point rho(1) = 1 and classifies as Collapsed.
    return iterate(lambda x: one_to_one_step(x, rho), epsilon, max_iters, heal_tol)


def epsilon_s(params: SystemParams) -> float:
    """Sufficient healing bound ``1 / ((a-1)(1 + p lambda'(1))^2)``, capped at 1.

    For ``a = 1`` there are no sibling physical nodes and the bound is vacuous.
    """
    if params.a == 1:
        return 1.0
    return min(1.0, 1.0 / ((params.a - 1) * (1 + params.p * mean_degree(params.lam)) ** 2))


def taylor_coefficients(params: SystemParams) -> tuple[float, float]:
    """Quadratic and cubic coefficients of ``f`` around ``x = 0`` (lossless case).

    The cyber-neighbour term ``rho(y^a)`` is neglected; it enters at order
    ``x^(a*k+1)`` with ``k`` the minimum cyber degree, so both coefficients
    are exact whenever ``a*k >= 3``.  The ``(a-2)`` term carries
    ``(1 + p lambda'(1))`` squared, which is what the series expansion gives.
    """
    if not params.lossless:
        raise UnsupportedParams("Taylor expansion requires P_mp = P_mc = P_mi = 0")
    a, p = params.a, params.p
    l1 = mean_degree(params.lam)
    l2 = second_derivative_at_one(params.lam)
    g = 1 + p * l1
    c2 = (a - 1) * g**2
    c3 = -0.5 * (a - 1) * g * ((a - 2) * g**2 + 2 * p * (2 * l1 + p * l2))
    return c2, c3
