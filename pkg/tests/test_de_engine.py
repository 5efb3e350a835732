import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpsres import (
    SteadyState,
    SystemParams,
    de_step,
    de_trajectory,
    epsilon_s,
    from_coefficients,
    one_to_one_trajectory,
    point_mass,
    taylor_coefficients,
)
from cpsres.errors import DomainError, UnsupportedParams, ValidationError

from oracles import bound, expanded_step, poly


def test_worked_example(z2, z3):
    params = SystemParams(5, 0.2, z2, z3)
    # y = 0.1 + 0.9 * (1 - 0.98^2), u = 1 - (1 - y)^4 (1 - (y^5)^3)
    assert de_step(0.1, params) == pytest.approx(0.059927702623125446, rel=1e-12)


def test_matches_expanded_form():
    rng = np.random.default_rng(11)
    for _ in range(50):
        lam_c = rng.dirichlet(np.ones(4))
        rho_c = rng.dirichlet(np.ones(3))
        lam = from_coefficients({k + 1: float(f) for k, f in enumerate(lam_c)})
        rho = from_coefficients({k + 1: float(f) for k, f in enumerate(rho_c)})
        a = int(rng.integers(1, 9))
        p, pmp, pmc, pmi = (float(v) for v in rng.random(4))
        x = float(rng.random())
        got = de_step(x, SystemParams(a, p, lam, rho, pmp, pmc, pmi))
        want = expanded_step(x, a, p, poly(lam.coefficients), poly(rho.coefficients), pmp, pmc, pmi)
        assert got == pytest.approx(want, abs=1e-12)


def test_vectorised_matches_scalar(mixed):
    params = SystemParams(4, 0.1, mixed, mixed, 0.1, 0.2, 0.05)
    xs = np.linspace(0, 1, 17)
    np.testing.assert_allclose(de_step(xs, params), [de_step(float(x), params) for x in xs])


def test_fixed_points(z2, z3):
    params = SystemParams(3, 0.8, z2, z3)
    assert de_step(0.0, params) == 0.0
    assert de_step(1.0, params) == 1.0


def test_domain_and_params(z2, z3):
    with pytest.raises(DomainError):
        de_step(1.2, SystemParams(3, 0.5, z2, z3))
    with pytest.raises(ValidationError):
        SystemParams(0, 0.5, z2, z3)
    with pytest.raises(ValidationError):
        SystemParams(3, 1.5, z2, z3)
    with pytest.raises(ValidationError):
        SystemParams(3, 0.5, z2, z3, p_mi=-0.1)


def test_trajectory_verdicts(z2, z3):
    params = SystemParams(5, 0.2, z2, z3)
    healed = de_trajectory(params, 0.1)
    assert healed.verdict is SteadyState.HEALED
    assert healed.densities[0] == 0.1
    assert healed.densities[1] == pytest.approx(de_step(0.1, params))
    assert de_trajectory(params, 0.6).verdict is SteadyState.COLLAPSED
    assert de_trajectory(params, 0.0).densities == (0.0,)
    stuck = de_trajectory(params, 0.2372, max_iters=3)
    assert stuck.verdict is SteadyState.UNDECIDED and len(stuck) == 4


def test_epsilon_s_formula(z2):
    assert epsilon_s(SystemParams(3, 0.8, z2, z2)) == pytest.approx(1 / (2 * 2.6**2))
    assert epsilon_s(SystemParams(1, 0.8, z2, z2)) == 1.0
    assert epsilon_s(SystemParams(2, 0.0, z2, z2)) == 1.0


def test_taylor_coefficients_numerically(z2, z3):
    params = SystemParams(5, 0.2, z2, z3)
    c2, c3 = taylor_coefficients(params)
    assert c2 == pytest.approx(4 * 1.4**2)
    # (f - c2 x^2) / x^3 = c3 + O(x); Richardson-extrapolate two small x
    g = [(de_step(x, params) - c2 * x**2) / x**3 for x in (2e-3, 1e-3)]
    assert 2 * g[1] - g[0] == pytest.approx(c3, rel=1e-3)


def test_taylor_needs_lossless(z2, z3):
    with pytest.raises(UnsupportedParams):
        taylor_coefficients(SystemParams(5, 0.2, z2, z3, p_mp=0.1))


def test_one_to_one(mixed):
    t = one_to_one_trajectory(mixed, 0.9)
    assert t.verdict is SteadyState.HEALED
    assert all(b < a for a, b in zip(t.densities, t.densities[1:]))
    assert one_to_one_trajectory(mixed, 1.0).verdict is SteadyState.COLLAPSED


dists = st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5).map(
    lambda ws: from_coefficients({k + 1: w / sum(ws) for k, w in enumerate(ws)})
)


@settings(max_examples=80, deadline=None)
@given(dists, dists, st.integers(1, 8), st.floats(0, 1), st.floats(0, 1),
       st.floats(0, 1), st.floats(0, 1))
def test_step_monotone_in_x(lam, rho, a, p, pmp, pmc, x):
    params = SystemParams(a, p, lam, rho, pmp, pmc)
    x2 = min(1.0, x + 0.01)
    assert de_step(x2, params) >= de_step(x, params) - 1e-12


@settings(max_examples=80, deadline=None)
@given(dists, dists, st.integers(2, 8), st.floats(0, 1))
def test_bound_agrees_with_oracle(lam, rho, a, p):
    from cpsres import mean_degree

    assert epsilon_s(SystemParams(a, p, lam, rho)) == pytest.approx(bound(a, p, mean_degree(lam)))


@settings(max_examples=60, deadline=None)
@given(dists, dists, st.integers(1, 6), st.floats(0, 1), st.floats(0, 1))
def test_step_stays_in_unit_interval(lam, rho, a, p, x):
    v = de_step(x, SystemParams(a, p, lam, rho, 0.3, 0.3, 0.3))
    assert 0.0 <= v <= 1.0


def test_point_mass_one_healing():
    # a = 1 and rho = z: heal unless the cyber neighbour is failed too
    params = SystemParams(1, 0.0, point_mass(1), point_mass(1))
    assert de_step(0.5, params) == pytest.approx(0.5 * 0.5)
