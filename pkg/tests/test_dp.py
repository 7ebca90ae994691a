import functools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radialqd.dp import (DPInstance, SimplexLattice, backward_induction, bayes_risk,
                         best_threshold_misclassification, dp_policy, observation_rule, threshold_policy,
                         threshold_diagnostic)
from radialqd.observation import ObservationModel, QuantizedModel
from radialqd.state_model import PriorParams

PMF0, PMF1 = (0.7, 0.3), (0.3, 0.7)


def tiny(rho=0.1, rmax=1, model=None):
    return DPInstance([[0.0, 0.0]], [[0.5, 0.0]], rmax, PriorParams(rho, 1.0),
                      model or QuantizedModel(PMF0, PMF1))


def exact_value(rho, c, N):
    """Cost-to-go of the two-state problem by full recursion over the belief tree."""
    @functools.lru_cache(maxsize=None)
    def J(p1, n):
        if n == N:
            return 1 - p1
        q1 = p1 + (1 - p1) * rho
        cont = 0.0
        for l0, l1 in zip(PMF0, PMF1):
            px = (1 - q1) * l0 + q1 * l1
            cont += px * J(q1 * l1 / px, n + 1)
        return min(1 - p1, c * p1 + cont)
    return J


def test_lattice_size_and_vertices():
    lat = SimplexLattice(3, 4)
    assert len(lat) == 15
    np.testing.assert_allclose(lat.points.sum(axis=1), 1.0)
    np.testing.assert_allclose(lat.interpolate(np.arange(15.0), lat.points), np.arange(15.0))


@given(st.integers(2, 5), st.integers(1, 12), st.integers(0, 2**31))
def test_lattice_interpolation_is_exact_for_affine(dim, N, seed):
    rng = np.random.default_rng(seed)
    lat = SimplexLattice(dim, N)
    a = rng.normal(size=dim)
    beliefs = rng.dirichlet(np.ones(dim), 20)
    beliefs[0] = np.eye(dim)[-1]
    np.testing.assert_allclose(lat.interpolate(lat.points @ a, beliefs), beliefs @ a, atol=1e-12)


def test_backward_induction_matches_belief_tree():
    rho, c, N = 0.1, 0.05, 10
    table = backward_induction(tiny(rho), c, N, 20000)
    J = exact_value(rho, c, N)
    for p in np.linspace(0, 1, 21):
        assert table.value(0, [1 - p, p]) == pytest.approx(J(float(p), 0), abs=1e-6)


def test_value_decreases_with_horizon():
    inst = tiny(0.05)
    short = backward_induction(inst, 0.02, 8, 400)
    long = backward_induction(inst, 0.02, 9, 400)
    assert np.all(short.J[:8] >= long.J[:8])
    assert np.all(short.J <= short.pi0[None, :] + 1e-15)


def test_gaussian_rule_weights_integrate_to_one():
    inst = tiny(0.1, model=ObservationModel("attenuating", 1.0, 2.0))
    rule = observation_rule(inst, nodes=12)
    np.testing.assert_allclose(rule.weights.sum(axis=0), 1.0, atol=1e-12)


def test_gaussian_dp_stays_in_unit_interval():
    inst = DPInstance([[0.0, 0.0]], [[0.5, 0.0], [1.5, 0.0]], 2, PriorParams(0.1, 0.5),
                      ObservationModel("attenuating", 1.0, 2.0))
    table = backward_induction(inst, 0.05, 5, 20, nodes=8)
    assert np.all((table.J >= 0) & (table.J <= 1))


def test_instance_size_limit():
    with pytest.raises(ValueError):
        DPInstance([[0.0, 0.0], [1.0, 1.0]], [[0.5, 0.0]], 3, PriorParams(0.1), QuantizedModel(PMF0, PMF1))


def test_dp_policy_not_worse_than_thresholds():
    inst, c = tiny(0.1), 0.05
    table = backward_induction(inst, c, 40, 4000)
    dp = bayes_risk(lambda b, n: dp_policy(table, b, n), c, inst, 1500, seed=5, horizon=40)
    thr = bayes_risk(threshold_policy(0.3), c, inst, 1500, seed=5, horizon=40)
    diff = dp.samples - thr.samples
    assert diff.mean() <= 1.96 * diff.std(ddof=1) / np.sqrt(len(diff)) + 1e-3


def test_misclassification_search():
    pi0 = np.array([0.1, 0.2, 0.3, 0.4])
    assert best_threshold_misclassification(pi0, [True, True, False, False]) == (0.0, 0.2)
    rate, _ = best_threshold_misclassification(pi0, [True, False, True, False])
    assert rate == 0.25
    assert best_threshold_misclassification(pi0, [False] * 4) == (0.0, -np.inf)


def test_threshold_diagnostic_runs_on_three_states():
    tables = {rho: backward_induction(DPInstance([[0.0, 0.0]], [[0.5, 0.0]], 2, PriorParams(rho, 0.5),
                                                 QuantizedModel(PMF0, PMF1)), 0.02, 10, 60)
              for rho in (0.1, 0.01)}
    reports = threshold_diagnostic(tables)
    assert [r.rho for r in reports] == [0.1, 0.01]
    assert all(0 <= r.misclassification <= 1 for r in reports)
