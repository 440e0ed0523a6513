"""Tests for the minibatch OT solvers."""

import itertools

import numpy as np
import pytest

from flowbridge.exceptions import ShapeError, ValidationError
from flowbridge.ot import (
    Assignment,
    CostMatrix,
    TransportPlan,
    cost_matrix,
    plan_to_pairs,
    solve_exact,
    solve_sinkhorn,
    transport_cost,
)


def _brute_force_cost(c: np.ndarray) -> float:
    """Minimum assignment cost by enumerating all M! permutations."""
    m = c.shape[0]
    idx = np.arange(m)
    best = np.inf
    for perm in itertools.permutations(range(m)):
        best = min(best, float(c[idx, list(perm)].sum()))
    return best


def _random_points(rng, m, d):
    return rng.standard_normal((m, d)), rng.standard_normal((m, d))


class TestCostMatrix:
    def test_matches_direct_distance_computation(self):
        rng = np.random.default_rng(0)
        a, b = _random_points(rng, 12, 3)
        c = cost_matrix(a, b)
        direct = np.array([[np.sum((ai - bj) ** 2) for bj in b] for ai in a])
        assert np.allclose(c.values, direct, atol=1e-12)

    def test_zero_on_identical_points(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((6, 4))
        c = cost_matrix(a, a.copy())
        assert np.allclose(np.diag(c.values), 0.0)
        assert np.all(c.values >= 0)

    def test_rejects_mismatched_shapes(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ShapeError):
            cost_matrix(rng.standard_normal((4, 2)), rng.standard_normal((5, 2)))
        with pytest.raises(ShapeError):
            cost_matrix(rng.standard_normal((4, 2)), rng.standard_normal((4, 3)))

    def test_rejects_non_finite(self):
        a = np.zeros((3, 2))
        b = np.zeros((3, 2))
        b[1, 0] = np.nan
        with pytest.raises(ValidationError):
            cost_matrix(a, b)

    def test_rejects_non_square_values(self):
        with pytest.raises(ShapeError):
            CostMatrix(np.zeros((3, 4)))


class TestSolveExact:
    def test_matches_brute_force_on_small_instances(self):
        # The assignment solver must hit the true optimum, checked against
        # full permutation enumeration.
        rng = np.random.default_rng(7)
        for _ in range(50):
            a, b = _random_points(rng, 6, 2)
            c = cost_matrix(a, b)
            got = transport_cost(c, solve_exact(c))
            want = _brute_force_cost(c.values)
            assert abs(got - want) < 1e-9

    def test_identity_when_points_coincide(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((10, 2))
        c = cost_matrix(a, a.copy())
        sigma = solve_exact(c).sigma
        assert np.array_equal(sigma, np.arange(10))

    def test_deterministic_tie_break(self):
        # Fully degenerate cost: every assignment is optimal, the solver must
        # still return the same permutation every time.
        c = CostMatrix(np.ones((5, 5)))
        first = solve_exact(c).sigma
        for _ in range(5):
            assert np.array_equal(solve_exact(c).sigma, first)

    def test_result_is_permutation(self):
        rng = np.random.default_rng(9)
        for m in (2, 5, 17):
            a, b = _random_points(rng, m, 3)
            sigma = solve_exact(cost_matrix(a, b)).sigma
            assert np.array_equal(np.sort(sigma), np.arange(m))

    def test_assignment_rejects_non_permutation(self):
        with pytest.raises(ValidationError):
            Assignment(np.array([0, 0, 2]))


class TestSolveSinkhorn:
    def test_marginals_are_uniform(self):
        rng = np.random.default_rng(13)
        a, b = _random_points(rng, 8, 2)
        c = cost_matrix(a, b)
        plan = solve_sinkhorn(c, epsilon=0.05 * float(c.values.mean()))
        m = c.m
        assert np.abs(plan.pi.sum(axis=1) - 1.0 / m).max() < 1e-6
        assert np.abs(plan.pi.sum(axis=0) - 1.0 / m).max() < 1e-6
        assert np.all(plan.pi >= 0)

    def test_cost_approaches_exact_as_epsilon_shrinks(self):
        rng = np.random.default_rng(14)
        a, b = _random_points(rng, 8, 2)
        c = cost_matrix(a, b)
        exact = transport_cost(c, solve_exact(c))
        costs = []
        for eps_frac in (1.0, 0.1, 0.01):
            plan = solve_sinkhorn(c, epsilon=eps_frac * float(c.values.mean()), max_iter=5000)
            costs.append(transport_cost(c, plan))
        # Entropy penalty shrinks with epsilon, so cost decreases toward exact.
        assert costs[0] >= costs[1] >= costs[2]
        assert costs[2] >= exact - 1e-9
        assert costs[2] <= exact * 1.02

    def test_reports_convergence(self):
        rng = np.random.default_rng(15)
        a, b = _random_points(rng, 8, 2)
        c = cost_matrix(a, b)
        plan = solve_sinkhorn(c, epsilon=0.5 * float(c.values.mean()))
        assert plan.converged
        assert plan.residual < 1e-6

    def test_honest_non_convergence_flag(self):
        rng = np.random.default_rng(16)
        a, b = _random_points(rng, 8, 2)
        c = cost_matrix(a, b)
        # Tolerance below the float64 summation floor is unreachable, so the
        # solver must say so instead of pretending.
        plan = solve_sinkhorn(c, epsilon=0.001 * float(c.values.mean()), max_iter=5, tol=1e-30)
        assert not plan.converged
        assert plan.residual > 0
        # Marginals still hold because the plan is rounded onto the polytope.
        assert np.abs(plan.pi.sum(axis=1) - 1.0 / c.m).max() < 1e-12

    def test_rejects_bad_epsilon(self):
        c = cost_matrix(np.zeros((3, 2)), np.ones((3, 2)))
        with pytest.raises(ValidationError):
            solve_sinkhorn(c, epsilon=0.0)
        with pytest.raises(ValidationError):
            solve_sinkhorn(c, epsilon=-1.0)


class TestPlanToPairs:
    def test_argmax_recovers_sharp_plan(self):
        perm = np.array([2, 0, 3, 1])
        pi = np.zeros((4, 4))
        pi[np.arange(4), perm] = 0.25
        plan = TransportPlan(pi, epsilon=0.01)
        got = plan_to_pairs(plan, np.random.default_rng(0), mode="argmax")
        assert np.array_equal(got, perm)

    def test_sampling_follows_row_distribution(self):
        pi = np.array([[0.9, 0.1], [0.5, 0.5]]) / 2.0
        plan = TransportPlan(pi, epsilon=0.1)
        rng = np.random.default_rng(21)
        draws = np.array([plan_to_pairs(plan, rng)[0] for _ in range(2000)])
        # Row 0 picks column 0 with probability 0.9.
        assert abs(np.mean(draws == 0) - 0.9) < 0.03

    def test_sampling_is_reproducible(self):
        rng_a = np.random.default_rng(22)
        rng_b = np.random.default_rng(22)
        pi = np.full((6, 6), 1.0 / 36.0)
        plan = TransportPlan(pi, epsilon=0.1)
        assert np.array_equal(plan_to_pairs(plan, rng_a), plan_to_pairs(plan, rng_b))

    def test_rejects_zero_row(self):
        pi = np.zeros((3, 3))
        pi[0, 0] = pi[1, 1] = 1.0 / 3.0
        plan = TransportPlan(pi, epsilon=0.1)
        with pytest.raises(ValidationError):
            plan_to_pairs(plan, np.random.default_rng(0))

    def test_rejects_unknown_mode(self):
        plan = TransportPlan(np.full((2, 2), 0.25), epsilon=0.1)
        with pytest.raises(ValidationError):
            plan_to_pairs(plan, np.random.default_rng(0), mode="greedy")


class TestTransportCost:
    def test_assignment_and_sharp_plan_agree(self):
        rng = np.random.default_rng(30)
        a, b = _random_points(rng, 5, 2)
        c = cost_matrix(a, b)
        sigma = solve_exact(c)
        pi = np.zeros((5, 5))
        pi[np.arange(5), sigma.sigma] = 0.2
        plan = TransportPlan(pi, epsilon=0.01)
        assert abs(transport_cost(c, sigma) - transport_cost(c, plan)) < 1e-12

    def test_size_mismatch_rejected(self):
        c = cost_matrix(np.zeros((3, 2)), np.ones((3, 2)))
        with pytest.raises(ShapeError):
            transport_cost(c, Assignment(np.array([0, 1])))
