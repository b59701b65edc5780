"""Scalar Gaussian kernels: frozen values, identities, Monte Carlo oracles."""

import numpy as np
import pytest

from remax_bandits.arms import ArmEstimate, PosteriorUndefinedError
from remax_bandits.gauss import (
    INV_SQRT_2PI,
    GaussianMoment,
    gap_ei,
    pairwise_max_entry,
    positive_part_mean,
    std_normal_cdf,
    std_normal_pdf,
)

# Frozen from a 40-digit evaluation of the defining formulas.
PDF_AT_1_3 = 0.17136859204780736
CDF_AT_1_0 = 0.8413447460685429
INV_SQRT_PI = 0.5641895835477563


class TestStdNormalPdf:
    def test_value_at_zero(self):
        assert std_normal_pdf(0.0) == INV_SQRT_2PI

    def test_tail_underflows_without_error(self):
        val = std_normal_pdf(40.0)
        assert 0.0 <= val < 1e-300

    def test_extended_precision_value(self):
        assert std_normal_pdf(1.3) == pytest.approx(PDF_AT_1_3, abs=1e-12)

    def test_derivative_identity(self):
        """Central difference of the density equals -x * pdf(x)."""
        x = np.linspace(-5.0, 5.0, 201)
        h = 1e-6
        numeric = (std_normal_pdf(x + h) - std_normal_pdf(x - h)) / (2 * h)
        np.testing.assert_allclose(numeric, -x * std_normal_pdf(x), atol=1e-6)


class TestStdNormalCdf:
    def test_value_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_saturates_exactly(self):
        assert std_normal_cdf(40.0) == 1.0
        assert std_normal_cdf(-40.0) < 1e-300

    def test_erf_oracle_value(self):
        assert std_normal_cdf(1.0) == pytest.approx(CDF_AT_1_0, abs=1e-12)

    def test_reflection_sums_to_one(self):
        x = np.linspace(-8.0, 8.0, 1001)
        np.testing.assert_allclose(std_normal_cdf(x) + std_normal_cdf(-x), 1.0, atol=1e-14)

    def test_monotone(self):
        x = np.linspace(-12.0, 12.0, 4001)
        assert np.all(np.diff(std_normal_cdf(x)) >= 0.0)


class TestPositivePartMean:
    def test_rejects_nonpositive_std(self):
        with pytest.raises(ValueError):
            GaussianMoment(0.0, 0.0)
        with pytest.raises(ValueError):
            GaussianMoment(0.0, -1.0)

    def test_zero_mean_unit_std(self):
        assert positive_part_mean(GaussianMoment(0.0, 1.0)) == pytest.approx(
            INV_SQRT_2PI, rel=1e-15
        )

    def test_vanishing_noise_limit(self):
        assert positive_part_mean(GaussianMoment(5.0, 1e-6)) == pytest.approx(5.0, abs=1e-9)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(42)
        x = np.clip(-0.5 + 0.7 * rng.standard_normal(10_000_000), 0.0, None)
        mc, se = x.mean(), x.std(ddof=1) / np.sqrt(x.size)
        exact = positive_part_mean(GaussianMoment(-0.5, 0.7))
        assert abs(exact - mc) <= 3 * se

    def test_bounds(self):
        """max(0, mean) <= E[(X)_+] <= max(0, mean) + std."""
        rng = np.random.default_rng(0)
        for _ in range(500):
            m = GaussianMoment(float(rng.uniform(-5, 5)), float(rng.uniform(0.01, 5)))
            val = positive_part_mean(m)
            assert val >= max(0.0, m.mean)
            assert val <= max(0.0, m.mean) + m.std


def _random_arms(rng, max_count=1000):
    return (
        ArmEstimate(int(rng.integers(1, max_count)), float(rng.normal())),
        ArmEstimate(int(rng.integers(1, max_count)), float(rng.normal())),
    )


class TestGapEi:
    def test_rejects_unpulled_arm(self):
        with pytest.raises(PosteriorUndefinedError):
            gap_ei(ArmEstimate(0), ArmEstimate(3, 0.5), 1.0, 1.0)

    def test_rejects_bad_inflation_and_noise(self):
        i, j = ArmEstimate(1, 0.0), ArmEstimate(1, 0.0)
        with pytest.raises(ValueError):
            gap_ei(i, j, 0.5, 1.0)
        with pytest.raises(ValueError):
            gap_ei(i, j, 1.0, 0.0)

    def test_identical_arms(self):
        """Zero mean gap collapses to the sigma * pdf(0) term."""
        i = ArmEstimate(10, 0.4)
        j = ArmEstimate(10, 0.4)
        sigma = np.sqrt(0.2)
        assert gap_ei(i, j, 1.0, 1.0) == pytest.approx(sigma * INV_SQRT_2PI, rel=1e-13)

    def test_antisymmetric_part_is_mean_gap(self):
        """gap(i,j) - gap(j,i) telescopes to the difference of means."""
        rng = np.random.default_rng(1)
        for _ in range(1000):
            i, j = _random_arms(rng)
            lhs = gap_ei(i, j, 1.0, 0.3) - gap_ei(j, i, 1.0, 0.3)
            assert lhs == pytest.approx(i.mean - j.mean, abs=1e-13)

    def test_monte_carlo_two_arm_instance(self):
        """Fresh two-arm posteriors against 1e7 posterior draws."""
        i = ArmEstimate(1, 0.9)
        j = ArmEstimate(1, 0.8)
        rng = np.random.default_rng(5)
        ti = 0.9 + 0.15 * rng.standard_normal(10_000_000)
        tj = 0.8 + 0.15 * rng.standard_normal(10_000_000)
        diff = np.clip(ti - tj, 0.0, None)
        mc, se = diff.mean(), diff.std(ddof=1) / np.sqrt(diff.size)
        assert abs(gap_ei(i, j, 1.0, 0.15) - mc) <= 3 * se

    def test_monotone_in_means_and_inflation(self):
        j = ArmEstimate(20, 0.0)
        vals_i = [gap_ei(ArmEstimate(20, m), j, 1.0, 1.0) for m in np.linspace(-2, 2, 41)]
        assert np.all(np.diff(vals_i) > 0)
        i = ArmEstimate(20, 0.0)
        vals_j = [gap_ei(i, ArmEstimate(20, m), 1.0, 1.0) for m in np.linspace(-2, 2, 41)]
        assert np.all(np.diff(vals_j) < 0)
        vals_c = [gap_ei(i, j, c, 1.0) for c in np.linspace(1.0, 4.0, 31)]
        assert np.all(np.diff(vals_c) > 0)


class TestPairwiseMaxEntry:
    def test_standard_pair(self):
        """Two unit posteriors at zero mean: expected max is 1/sqrt(pi)."""
        i = ArmEstimate(1, 0.0)
        j = ArmEstimate(1, 0.0)
        assert pairwise_max_entry(i, j, 1.0, 1.0) == pytest.approx(INV_SQRT_PI, rel=1e-13)

    def test_symmetry_is_bit_identical(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            i, j = _random_arms(rng)
            assert pairwise_max_entry(i, j, 1.0, 0.7) == pairwise_max_entry(j, i, 1.0, 0.7)

    def test_consistency_with_gap_ei(self):
        """E[max] = mean_j + E[(theta_i - theta_j)_+], both sides independent."""
        rng = np.random.default_rng(3)
        for _ in range(1000):
            i, j = _random_arms(rng)
            lhs = pairwise_max_entry(i, j, 1.0, 0.5)
            rhs = j.mean + gap_ei(i, j, 1.0, 0.5)
            assert lhs == pytest.approx(rhs, abs=1e-13)

    def test_dominates_larger_mean(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            i, j = _random_arms(rng)
            assert pairwise_max_entry(i, j, 1.0, 0.4) >= max(i.mean, j.mean)
