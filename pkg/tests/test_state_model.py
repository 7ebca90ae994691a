import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radialqd.state_model import (PriorParams, RadiusPath, initial_belief, onset_hazard, prior_pmf,
                                  radius_transition, sample_change_point, transition_matrix)

params_st = st.builds(PriorParams, st.floats(0.001, 0.9), st.floats(0.01, 1.0), st.floats(0.0, 0.9))


def test_prior_pmf_values():
    assert prior_pmf(0.5, 0) == 0.5
    assert prior_pmf(0.5, 2) == 0.125


@given(st.floats(0.01, 0.99))
def test_prior_pmf_sums_to_one(rho):
    total = sum(prior_pmf(rho, k) for k in range(5000))
    assert abs(total - 1) < 1e-9 or (1 - rho) ** 5000 > 1e-9


@given(params_st, st.integers(1, 60), st.integers(1, 8))
def test_transition_rows_are_stochastic(params, n, rmax):
    T = transition_matrix(n, params, rmax + 1)
    np.testing.assert_allclose(T.sum(axis=1), 1.0, atol=1e-14)
    assert T[rmax, rmax] == 1.0
    assert np.all(np.triu(T) == T)


def test_transition_values():
    p = PriorParams(0.1, 0.25)
    assert radius_transition(0, 1, p, 3) == {1: 0.1, 0: 0.9}
    assert radius_transition(2, 1, p, 3) == {3: 0.25, 2: 0.75}
    assert radius_transition(3, 1, p, 3) == {3: 1.0}
    with pytest.raises(ValueError):
        radius_transition(4, 1, p, 3)


def test_hazard_with_no_change_mass():
    p = PriorParams(0.2, 1.0, 0.5)
    # surviving onset mass shrinks relative to p_inf
    assert onset_hazard(1, p) == pytest.approx(0.2 * 0.5 / 1.0)
    assert onset_hazard(3, p) == pytest.approx(0.2 * 0.5 * 0.64 / (0.5 + 0.5 * 0.64))
    assert onset_hazard(5, PriorParams(0.2)) == 0.2


@given(params_st, st.integers(1, 4), st.integers(1, 6))
def test_initial_belief_is_normalised(params, M, rmax):
    b = initial_belief(M, params, rmax + 1)
    assert b.probs.sum() == pytest.approx(1.0)
    assert b.probs[:, 2:].sum() == 0
    assert b.probs[:, 1].sum() == pytest.approx((1 - params.p_inf) * params.rho)


@pytest.mark.parametrize("kw", [dict(rho=0), dict(rho=1), dict(rho=0.1, rho1=0), dict(rho=0.1, p_inf=1)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PriorParams(**kw)


def test_change_point_distribution(rng):
    p = PriorParams(0.1)
    t = np.array([sample_change_point(p, rng) for _ in range(20000)])
    assert abs(t.mean() - 0.9 / 0.1) < 0.3
    assert abs(np.mean(t == 0) - 0.1) < 0.01


def test_change_point_never(rng):
    p = PriorParams(0.1, 1.0, 0.3)
    draws = [sample_change_point(p, rng) for _ in range(5000)]
    assert abs(np.mean([d is None for d in draws]) - 0.3) < 0.02


@given(st.integers(0, 5), st.floats(0.05, 1.0), st.integers(1, 10), st.integers(0, 2**32))
def test_radius_path_is_monotone_and_capped(t, rho1, rmax, seed):
    path = RadiusPath(t, rho1, rmax, np.random.default_rng(seed)).path(t + 100)
    assert np.all(path[:t] == 0) and path[t] == 1
    assert np.all(np.diff(path) >= 0) and np.all(np.diff(path) <= 1)
    assert path.max() <= rmax


def test_radius_paths_coupled_across_rho1():
    slow = RadiusPath(2, 0.2, 50, np.random.default_rng(7)).path(80)
    fast = RadiusPath(2, 0.6, 50, np.random.default_rng(7)).path(80)
    assert np.all(fast >= slow)


def test_deterministic_growth():
    assert list(RadiusPath(1, 1.0, 4, np.random.default_rng(0)).path(7)) == [0, 1, 2, 3, 4, 4, 4, 4]
