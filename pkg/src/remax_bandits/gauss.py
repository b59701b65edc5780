"""Standard normal kernels and closed-form expected-improvement quantities.

Everything downstream (the pairwise expected-max matrix, the exact policy
solver, the diagnostics) reduces to three scalar facts about Gaussians:
the density, the CDF, and the mean of the positive part.  All three are
implemented here once, for scalars and arrays alike.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .arms import ArmEstimate

INV_SQRT_2PI = 0.3989422804014327

# Beyond |z| = 38 both phi(z) and the complementary CDF are below ~1e-300;
# the closed forms are saturated and evaluated asymptotically instead.
_Z_SATURATION = 38.0


@dataclass(frozen=True)
class GaussianMoment:
    """Mean/std pair of a scalar Gaussian, in reward units."""

    mean: float
    std: float

    def __post_init__(self) -> None:
        if not self.std > 0.0:
            raise ValueError(f"std must be positive, got {self.std}")


def std_normal_pdf(x):
    """Density of N(0, 1); accepts floats or arrays."""
    x = np.asarray(x, dtype=np.float64)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    """CDF of N(0, 1) via the complementary error function.

    Saturates to exactly 0.0 / 1.0 beyond |x| = 38, where the true value
    is indistinguishable from the limit in float64.
    """
    x = np.asarray(x, dtype=np.float64)
    out = ndtr(np.clip(x, -_Z_SATURATION, _Z_SATURATION))
    return out if out.ndim else float(out)


def positive_part_mean(m: GaussianMoment) -> float:
    """E[max(X, 0)] for X ~ N(mean, std**2).

    Equals ``std * phi(z) + mean * Phi(z)`` with ``z = mean / std``; always
    at least ``max(0, mean)``.
    """
    return _positive_part(m.mean, m.std)


def _positive_part(delta: float, sigma: float) -> float:
    z = delta / sigma
    if z > _Z_SATURATION:
        return delta
    if z < -_Z_SATURATION:
        return 0.0
    return sigma * std_normal_pdf(z) + delta * std_normal_cdf(z)


def _pair_delta_sigma(
    i: ArmEstimate, j: ArmEstimate, inflation: float, reward_std: float
) -> tuple[float, float]:
    if inflation < 1.0:
        raise ValueError(f"inflation must be >= 1, got {inflation}")
    if not reward_std > 0.0:
        raise ValueError(f"reward_std must be positive, got {reward_std}")
    i.require_pulled()
    j.require_pulled()
    var = inflation * inflation * reward_std * reward_std
    sigma = (var / i.count + var / j.count) ** 0.5
    return i.mean - j.mean, sigma


def gap_ei(i: ArmEstimate, j: ArmEstimate, inflation: float = 1.0, reward_std: float = 1.0) -> float:
    """Expected positive gap E[(theta_i - theta_j)_+] between posterior draws.

    theta_i and theta_j are independent samples from the (possibly
    variance-inflated) per-arm posteriors N(mean, (inflation*reward_std)**2/count).
    """
    delta, sigma = _pair_delta_sigma(i, j, inflation, reward_std)
    return _positive_part(delta, sigma)


def pairwise_max_entry(
    i: ArmEstimate, j: ArmEstimate, inflation: float = 1.0, reward_std: float = 1.0
) -> float:
    """Expected maximum E[max(theta_i, theta_j)] of two independent posterior draws.

    Symmetric in its arguments and never below max of the two posterior means;
    equals ``j.mean + gap_ei(i, j)``.
    """
    delta, sigma = _pair_delta_sigma(i, j, inflation, reward_std)
    z = delta / sigma
    if z > _Z_SATURATION:
        return i.mean
    if z < -_Z_SATURATION:
        return j.mean
    return (i.mean * std_normal_cdf(z) + j.mean * std_normal_cdf(-z)) + sigma * std_normal_pdf(z)
