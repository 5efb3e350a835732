"""Density evolution when cyber nodes need ``d`` time slots to respond.

While a cyber node processes, physical contagion keeps running one slot at a
time.  The response that lands after slot ``d`` is based on sibling reports
from slot ``d-1`` and on cyber-neighbour states derived from slot ``d-2``
(both read as the initial density when the index is negative).  For ``d = 2``
this is the two-slot recursion; larger ``d`` repeats the same staggering.
"""

from __future__ import annotations

from dataclasses import dataclass

from .de_engine import (
    DEFAULT_HEAL_TOL,
    SteadyState,
    SystemParams,
    _check_unit,
    _clip,
    classify,
    de_step,
)
from .errors import UnsupportedParams, ValidationError, WrongDelay


@dataclass(frozen=True)
class DelayParams:
    base: SystemParams
    delay_slots: int

    def __post_init__(self):
        if not self.base.lossless:
            raise UnsupportedParams("delayed recursion requires P_mp = P_mc = P_mi = 0")
        if int(self.delay_slots) != self.delay_slots or self.delay_slots < 0:
            raise ValidationError(f"delay_slots must be an integer >= 0, got {self.delay_slots}")


@dataclass(frozen=True)
class SlotTrajectory:
    slot_densities: tuple[tuple[int, float], ...]
    verdict: SteadyState

    @property
    def densities(self) -> tuple[float, ...]:
        return tuple(x for _, x in self.slot_densities)


def contagion_slot(y, params: SystemParams):
    """One slot of physical contagion: ``1 - (1-y) lambda(1 - p y)``."""
    _check_unit(y)
    return _clip(1 - (1 - y) * params.lam(1 - params.p * y))


def _contagion_slots(x, base: SystemParams, d: int):
    ys = [x]
    for _ in range(d):
        ys.append(contagion_slot(ys[-1], base))
    return ys


def _response(ys, base: SystemParams, d: int):
    a, lam, rho = base.a, base.lam, base.rho
    sib = ys[d - 1] if d >= 1 else ys[0]
    nbr = ys[d - 2] if d >= 2 else ys[0]
    u = _clip(1 - (1 - sib) ** (a - 1) * (1 - rho(nbr**a)))
    yd = ys[d]
    return _clip(yd * u + (1 - lam(1 - base.p * yd)) * (1 - u))


def delayed_de_step(x, params: DelayParams):
    """One full iteration (``d`` contagion slots plus the response slot)."""
    _check_unit(x)
    d = params.delay_slots
    if d < 1:
        raise WrongDelay("delayed_de_step needs delay_slots >= 1")
    return _response(_contagion_slots(x, params.base, d), params.base, d)


def theorem5_closed_form(x, params: DelayParams):
    """Expanded two-slot map ``A*B + C*(1-B)``, kept as a cross-check.

    The sibling factor is written with ``(1 - y1)`` so it stays non-negative
    for every exponent.
    """
    if params.delay_slots != 2:
        raise WrongDelay(f"closed form is for delay_slots = 2, got {params.delay_slots}")
    _check_unit(x)
    base = params.base
    lam, rho, p, a = base.lam, base.rho, base.p, base.a
    q = lam(1 - p * x) * (x - 1)  # y1 - 1
    big_a = lam(1 - p * (q + 1)) * q + 1
    big_b = 1 - (-q) ** (a - 1) * (1 - rho(x**a))
    big_c = 1 - lam(1 - p * big_a)
    return big_a * big_b + big_c * (1 - big_b)


def delayed_trajectory(
    params: DelayParams,
    epsilon: float,
    max_slots: int = 100_000,
    heal_tol: float = DEFAULT_HEAL_TOL,
) -> SlotTrajectory:
    """Per-slot densities.  Each iteration records ``d`` contagion slots
    followed by the response slot; ``d = 0`` is the delay-free map with one
    slot per iteration.  The verdict is taken at iteration boundaries."""
    if max_slots < 1:
        raise ValidationError("max_slots must be >= 1")
    if not 0 < heal_tol < 0.5:
        raise ValidationError("heal_tol must lie in (0, 0.5)")
    _check_unit(epsilon)
    base, d = params.base, params.delay_slots
    slot = 0
    x = float(epsilon)
    record = [(0, x)]
    verdict = classify(x, heal_tol)
    while verdict is None and slot + d + 1 <= max_slots:
        if d == 0:
            x = float(de_step(x, base))
        else:
            ys = _contagion_slots(x, base, d)
            for y in ys[1:]:
                slot += 1
                record.append((slot, float(y)))
            x = float(_response(ys, base, d))
        slot += 1
        record.append((slot, x))
        verdict = classify(x, heal_tol)
    return SlotTrajectory(tuple(record), verdict or SteadyState.UNDECIDED)


def delayed_step_fn(params: DelayParams):
    """Iteration map for the given delay (``d = 0`` gives the delay-free map)."""
    if params.delay_slots == 0:
        return lambda x: de_step(x, params.base)
    return lambda x: delayed_de_step(x, params)
