import math

import numpy as np
import pytest

from lookahead.diagnostics import brute_force_policy_oracle, oracle_battery, random_instances, \
    two_trial_decomposition, utility_difference
from lookahead.engine import HorizonSpec, bayes_update, predictive_pmf, solve_lookahead, \
    utility_curve
from lookahead.errors import ResourceLimitError
from lookahead.grid import range_width

from conftest import binary_problem

PERFECT = binary_problem([[1.0], [0.0]])


def test_point_mass_decomposition(gap_problem):
    w = np.zeros(400)
    w[7] = 1.0
    dec = two_trial_decomposition(w, gap_problem)
    np.testing.assert_array_equal(dec.immediate, 0.0)
    np.testing.assert_array_equal(dec.expected_next, 0.0)
    stats = utility_difference(w, gap_problem)
    assert stats.ud == 0.0 and stats.rd == 0.0 and stats.degenerate


def test_perfect_discrimination_decomposition():
    dec = two_trial_decomposition([0.5, 0.5], PERFECT)
    assert dec.immediate[0] == pytest.approx(math.log(2))
    assert dec.expected_next[0] == pytest.approx(0.0, abs=1e-15)


def test_single_design_ud_zero():
    stats = utility_difference([0.3, 0.7], binary_problem([[0.9], [0.2]]))
    assert stats.ud == 0.0 and stats.rd == 0.0 and not stats.degenerate


def test_decomposition_matches_definition(gap_problem):
    rng = np.random.default_rng(4)
    prior = rng.dirichlet(np.ones(400))
    dec = two_trial_decomposition(prior, gap_problem)
    for d in (0, 9, 17):
        pred = predictive_pmf(prior, d, gap_problem)
        ref = sum(pred[y] * utility_curve(bayes_update(prior, d, y, gap_problem),
                                          gap_problem).max() for y in range(2))
        assert dec.expected_next[d] == pytest.approx(ref, abs=1e-12)
    assert np.all(dec.expected_next >= -1e-12)
    sol = solve_lookahead(prior, gap_problem, HorizonSpec(2))
    assert dec.global_design == sol.tree.design
    assert dec.total.max() == pytest.approx(sol.value, abs=1e-10)


def test_ud_structure(visual_problem):
    rng = np.random.default_rng(8)
    prior = rng.dirichlet(np.full(visual_problem.n_theta, 0.2))
    dec = two_trial_decomposition(prior, visual_problem)
    stats = utility_difference(prior, visual_problem)
    m = dec.myopic_design
    assert stats.myopic_max == pytest.approx(dec.immediate.max())
    assert stats.ud == pytest.approx(stats.global_value - (dec.immediate[m] + dec.expected_next[m]))
    assert stats.ud >= -1e-12
    assert stats.rd == pytest.approx(stats.ud / stats.myopic_max)


def test_gap_uniform_flatter(gap_problem):
    dec = two_trial_decomposition(np.full(400, 1 / 400), gap_problem)
    assert range_width(dec.expected_next) < range_width(dec.immediate)


def test_oracle_base_case():
    rng = np.random.default_rng(1)
    problem = binary_problem(rng.random((3, 3)))
    prior = rng.dirichlet(np.ones(3))
    assert brute_force_policy_oracle(prior, problem, HorizonSpec(1)) == pytest.approx(
        utility_curve(prior, problem).max(), abs=1e-15)


def test_oracle_policy_count(monkeypatch):
    import lookahead.diagnostics as diag
    calls = []
    real = diag._rollout

    def counting(w, L, assign, history, depth, T, gamma):
        if depth == 0:
            calls.append(dict(assign))
        return real(w, L, assign, history, depth, T, gamma)

    monkeypatch.setattr(diag, "_rollout", counting)
    problem = binary_problem([[0.2, 0.7], [0.9, 0.4]])
    brute_force_policy_oracle([0.5, 0.5], problem, HorizonSpec(2))
    assert len(calls) == 8


def test_oracle_limit():
    problem = binary_problem(np.full((2, 3), 0.5))
    with pytest.raises(ResourceLimitError):
        brute_force_policy_oracle([0.5, 0.5], problem, HorizonSpec(3), policy_limit=100)


def test_battery_small():
    assert len(random_instances(6, seed=3)) == 6
    assert oracle_battery(10, seed=3) <= 1e-10
