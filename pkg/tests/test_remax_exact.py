"""Exact best-of-two solver: matrix build, KKT certification, oracles."""

import numpy as np
import pytest

from remax_bandits.arms import ArmEstimate, PosteriorUndefinedError
from remax_bandits.gauss import gap_ei, pairwise_max_entry
from remax_bandits.remax_exact import (
    KktCertificate,
    PairwiseMaxMatrix,
    ProbabilityVector,
    build_pairwise_matrix,
    ei_vector,
    eliminated_system,
    remax_objective,
    solve_active_set,
    two_arm_ratio_weights,
)
from remax_bandits.verify import (
    grid_best_objective,
    kkt_suite,
    random_estimates,
    ratio_suite,
)

INV_SQRT_PI = 0.5641895835477563


class TestProbabilityVector:
    def test_rejects_negative_and_unnormalised(self):
        with pytest.raises(ValueError):
            ProbabilityVector(np.array([0.5, -0.5, 1.0]))
        with pytest.raises(ValueError):
            ProbabilityVector(np.array([0.5, 0.6]))

    def test_support(self):
        pi = ProbabilityVector(np.array([0.5, 0.0, 0.5]))
        assert pi.support().tolist() == [0, 2]


class TestBuildPairwiseMatrix:
    def test_two_identical_fresh_arms(self):
        g = build_pairwise_matrix([ArmEstimate(1, 0.0), ArmEstimate(1, 0.0)], 1.0, 1.0)
        np.testing.assert_allclose(np.diag(g.entries), 0.0)
        assert g.entries[0, 1] == pytest.approx(INV_SQRT_PI, rel=1e-13)
        assert g.entries[0, 1] == g.entries[1, 0]

    def test_single_arm(self):
        g = build_pairwise_matrix([ArmEstimate(3, 0.7)])
        assert g.entries.shape == (1, 1)
        assert g.entries[0, 0] == 0.7

    def test_rejects_unpulled(self):
        with pytest.raises(PosteriorUndefinedError):
            build_pairwise_matrix([ArmEstimate(1, 0.0), ArmEstimate(0)])

    def test_entries_match_scalar_kernel(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            k = int(rng.integers(2, 8))
            ests = random_estimates(rng, k)
            rs = float(rng.uniform(0.05, 1.5))
            g = build_pairwise_matrix(ests, 1.0, rs)
            for i in range(k):
                for j in range(k):
                    if i == j:
                        assert g.entries[i, i] == ests[i].mean
                    else:
                        ref = pairwise_max_entry(ests[i], ests[j], 1.0, rs)
                        assert g.entries[i, j] == pytest.approx(ref, abs=1e-13)

    def test_diagonal_strictly_dominated(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            ests = random_estimates(rng, int(rng.integers(2, 10)))
            g = build_pairwise_matrix(ests, 1.0, float(rng.uniform(0.1, 1.0))).entries
            off = g + np.diag(np.full(g.shape[0], np.inf))
            assert np.all(np.diag(g) < off.min(axis=1))

    def test_monte_carlo_oracle_three_arms(self):
        rng = np.random.default_rng(8)
        ests = [ArmEstimate(4, 0.2), ArmEstimate(9, -0.1), ArmEstimate(2, 0.05)]
        g = build_pairwise_matrix(ests, 1.0, 0.6)
        n = 1_000_000
        draws = [e.mean + e.posterior_std(1.0, 0.6) * rng.standard_normal(n) for e in ests]
        for i in range(3):
            for j in range(i + 1, 3):
                mx = np.maximum(draws[i], draws[j])
                se = mx.std(ddof=1) / np.sqrt(n)
                assert abs(g.entries[i, j] - mx.mean()) <= 3 * se

    def test_matrix_validation(self):
        with pytest.raises(ValueError):
            PairwiseMaxMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
        with pytest.raises(ValueError):
            PairwiseMaxMatrix(np.array([[0.0, np.inf], [np.inf, 0.0]]))


class TestRemaxObjective:
    def test_vertex_recovers_mean(self):
        g = build_pairwise_matrix([ArmEstimate(5, 0.31), ArmEstimate(2, -0.4)], 1.0, 1.0)
        e1 = ProbabilityVector(np.array([1.0, 0.0]))
        assert remax_objective(e1, g) == 0.31

    def test_two_by_two_expansion(self):
        g = PairwiseMaxMatrix(np.array([[0.2, 0.9], [0.9, -0.1]]))
        pi = ProbabilityVector(np.array([0.5, 0.5]))
        expected = 0.25 * 0.2 + 0.25 * -0.1 + 0.5 * 0.9
        assert remax_objective(pi, g) == pytest.approx(expected, rel=1e-15)

    def test_deterministic_enumeration(self):
        """Zero-variance world theta=(1,0): four ordered pairs, repeats
        re-use the drawn arm's value, so the half/half mix is worth 0.75."""
        g = PairwiseMaxMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
        pi = ProbabilityVector(np.array([0.5, 0.5]))
        assert remax_objective(pi, g) == pytest.approx(0.75, rel=1e-15)

    def test_dimension_mismatch(self):
        g = PairwiseMaxMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError):
            remax_objective(ProbabilityVector(np.array([1.0, 0.0, 0.0])), g)


class TestSolveActiveSet:
    def test_symmetric_two_arm_splits_evenly(self):
        g = build_pairwise_matrix([ArmEstimate(5, 0.3), ArmEstimate(5, 0.3)], 1.0, 0.5)
        pi, cert = solve_active_set(g)
        np.testing.assert_allclose(pi.weights, 0.5, atol=1e-10)
        assert cert.accepted(1e-8)

    def test_two_arm_ratio_identity(self):
        result = ratio_suite(cases=150, seed=21)
        assert result.passed, result.detail

    def test_three_arm_grid_oracle(self):
        """Small-reward three-arm posteriors against an exhaustive grid."""
        ests = [ArmEstimate(1, 0.05), ArmEstimate(1, 0.02), ArmEstimate(1, 0.01)]
        g = build_pairwise_matrix(ests, 1.0, 0.02)
        pi, _ = solve_active_set(g)
        assert remax_objective(pi, g) >= grid_best_objective(g) - 1e-6

    def test_kkt_certificates_random(self):
        result = kkt_suite(cases=150, seed=22)
        assert result.passed, result.detail

    def test_certificate_fields_recompute(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            ests = random_estimates(rng, int(rng.integers(2, 12)))
            g = build_pairwise_matrix(ests, 1.0, 0.4)
            pi, cert = solve_active_set(g)
            gpi = g.entries @ pi.weights
            sup = pi.support()
            assert np.abs(gpi[sup] - cert.multiplier).max() <= cert.stationarity_gap + 1e-12
            off = np.setdiff1d(np.arange(g.k), sup)
            if off.size:
                assert np.all(gpi[off] <= cert.multiplier + cert.max_dual_violation + 1e-12)
            assert abs(pi.weights.sum() - 1.0) <= 1e-12
            assert pi.weights.min() >= 0.0

    def test_concavity_objective_dominates(self):
        """Returned point beats random simplex points and all vertices."""
        rng = np.random.default_rng(24)
        for _ in range(200):
            k = int(rng.integers(2, 9))
            ests = random_estimates(rng, k)
            g = build_pairwise_matrix(ests, 1.0, float(rng.uniform(0.1, 1.0)))
            pi, _ = solve_active_set(g)
            best = remax_objective(pi, g)
            assert best >= np.diag(g.entries).max() - 1e-9
            w = rng.exponential(size=(100, k))
            w /= w.sum(axis=1, keepdims=True)
            vals = np.einsum("ni,ij,nj->n", w, g.entries, w)
            assert best >= vals.max() - 1e-9

    def test_eliminated_system_cross_check(self):
        """Interior solutions agree with the variable-eliminated linear form."""
        rng = np.random.default_rng(25)
        checked = 0
        while checked < 30:
            ests = random_estimates(rng, int(rng.integers(2, 6)), max_count=50)
            g = build_pairwise_matrix(ests, 1.0, 1.0)
            pi, _ = solve_active_set(g)
            if pi.weights.min() <= 1e-9:
                continue
            a, b = eliminated_system(g)
            tail = np.linalg.solve(a, b)
            full = np.concatenate([[1.0 - tail.sum()], tail])
            np.testing.assert_allclose(full, pi.weights, atol=1e-9)
            checked += 1

    def test_singular_matrix_recovers_via_jitter(self):
        g = PairwiseMaxMatrix(np.full((2, 2), 0.5))
        pi, cert = solve_active_set(g)
        np.testing.assert_allclose(pi.weights, 0.5, atol=1e-6)
        assert not cert.limit_hit

    def test_iteration_cap_returns_clamped_simplex(self):
        rng = np.random.default_rng(26)
        ests = random_estimates(rng, 6)
        g = build_pairwise_matrix(ests, 1.0, 0.3)
        pi, cert = solve_active_set(g, max_iter=1)
        full_pi, full_cert = solve_active_set(g)
        if full_cert.iterations > 1:
            assert cert.limit_hit
        assert pi.weights.min() >= 0.0
        assert abs(pi.weights.sum() - 1.0) <= 1e-12

    def test_rejects_nonpositive_tol(self):
        g = build_pairwise_matrix([ArmEstimate(1, 0.0), ArmEstimate(1, 0.1)])
        with pytest.raises(ValueError):
            solve_active_set(g, tol=0.0)


class TestEiVector:
    def test_point_mass_reduces_to_pairwise_gaps(self):
        rng = np.random.default_rng(27)
        ests = random_estimates(rng, 4)
        pi = ProbabilityVector(np.array([0.0, 1.0, 0.0, 0.0]))
        s = ei_vector(pi, ests, 1.0, 0.5)
        assert s[1] == 0.0
        for i in (0, 2, 3):
            assert s[i] == pytest.approx(gap_ei(ests[i], ests[1], 1.0, 0.5), abs=1e-13)

    def test_uniform_policy_identical_arms(self):
        ests = [ArmEstimate(5, 0.2)] * 4
        pi = ProbabilityVector(np.full(4, 0.25))
        s = ei_vector(pi, ests, 1.0, 1.0)
        np.testing.assert_allclose(s, s[0])

    def test_balance_at_solver_output(self):
        """Supported arms share one improvement level; others fall below."""
        rng = np.random.default_rng(28)
        for _ in range(100):
            ests = random_estimates(rng, 4)
            rs = float(rng.uniform(0.1, 1.0))
            g = build_pairwise_matrix(ests, 1.0, rs)
            pi, _ = solve_active_set(g)
            s = ei_vector(pi, ests, 1.0, rs)
            sup = pi.support()
            assert s[sup].max() - s[sup].min() <= 1e-7
            off = np.setdiff1d(np.arange(4), sup)
            if off.size:
                assert s[off].max() <= s[sup].min() + 1e-7


class TestTwoArmRatio:
    def test_matches_solver_on_near_true_posteriors(self):
        ests = [ArmEstimate(500, 0.9), ArmEstimate(100, 0.8)]
        g = build_pairwise_matrix(ests, 1.0, 0.15)
        pi, _ = solve_active_set(g)
        ratio = two_arm_ratio_weights(ests, 1.0, 0.15)
        np.testing.assert_allclose(pi.weights, ratio.weights, rtol=1e-8)
