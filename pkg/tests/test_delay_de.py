import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpsres import (
    DelayParams,
    SteadyState,
    SystemParams,
    contagion_slot,
    de_step,
    delayed_de_step,
    delayed_trajectory,
    epsilon_max,
    from_coefficients,
    theorem5_closed_form,
)
from cpsres.errors import UnsupportedParams, ValidationError, WrongDelay

from oracles import poly, two_slot_step


def test_contagion_slot(z2, z3):
    assert contagion_slot(0.1, SystemParams(5, 0.2, z2, z3)) == pytest.approx(0.13564)


def test_two_slot_matches_oracle_and_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(100):
        lam = from_coefficients({k + 1: float(f) for k, f in enumerate(rng.dirichlet(np.ones(3)))})
        rho = from_coefficients({k + 1: float(f) for k, f in enumerate(rng.dirichlet(np.ones(3)))})
        a, p, x = int(rng.integers(1, 8)), float(rng.random()), float(rng.random())
        dp = DelayParams(SystemParams(a, p, lam, rho), 2)
        want = two_slot_step(x, a, p, poly(lam.coefficients), poly(rho.coefficients))
        assert delayed_de_step(x, dp) == pytest.approx(want, abs=1e-12)
        assert theorem5_closed_form(x, dp) == pytest.approx(want, abs=1e-12)


def test_closed_form_only_for_two(z2, z3):
    with pytest.raises(WrongDelay):
        theorem5_closed_form(0.1, DelayParams(SystemParams(5, 0.2, z2, z3), 3))
    with pytest.raises(WrongDelay):
        delayed_de_step(0.1, DelayParams(SystemParams(5, 0.2, z2, z3), 0))


def test_delay_requires_lossless(z2, z3):
    with pytest.raises(UnsupportedParams):
        DelayParams(SystemParams(5, 0.2, z2, z3, p_mc=0.1), 2)
    with pytest.raises(ValidationError):
        DelayParams(SystemParams(5, 0.2, z2, z3), -1)


def test_zero_delay_trajectory_is_delay_free(z2, z3):
    base = SystemParams(5, 0.15, z2, z3)
    t = delayed_trajectory(DelayParams(base, 0), 0.2)
    assert [s for s, _ in t.slot_densities] == list(range(len(t.slot_densities)))
    assert t.densities[1] == pytest.approx(de_step(0.2, base))


def test_slot_layout(z2, z3):
    base = SystemParams(5, 0.15, z2, z3)
    dp = DelayParams(base, 3)
    t = delayed_trajectory(dp, 0.02)
    assert t.verdict is SteadyState.HEALED
    xs = t.densities
    # slots 1..3 are pure contagion, slot 4 the response
    assert xs[1] == pytest.approx(contagion_slot(xs[0], base))
    assert xs[3] == pytest.approx(contagion_slot(xs[2], base))
    assert xs[4] == pytest.approx(delayed_de_step(xs[0], dp))
    assert xs[3] > xs[0]  # growth while the cyber layer is busy
    assert (len(xs) - 1) % 4 == 0


def test_delay_lowers_threshold(z2, z3):
    base = SystemParams(5, 0.15, z2, z3)
    ts = [epsilon_max(base, delay_slots=d).epsilon_max for d in (0, 2, 3, 4)]
    assert ts == sorted(ts, reverse=True)


dists = st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4).map(
    lambda ws: from_coefficients({k + 1: w / sum(ws) for k, w in enumerate(ws)})
)


@settings(max_examples=60, deadline=None)
@given(dists, dists, st.integers(1, 6), st.floats(0, 1), st.integers(1, 5), st.floats(0, 1))
def test_delayed_step_in_unit_interval(lam, rho, a, p, d, x):
    v = delayed_de_step(x, DelayParams(SystemParams(a, p, lam, rho), d))
    assert 0.0 <= v <= 1.0
