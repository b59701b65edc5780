"""Exact best-of-two policy computation.

The expected maximum of two posterior draws makes the M=2 objective a
quadratic form ``pi @ G @ pi`` over the probability simplex, where G holds
pairwise expected maxima off the diagonal and the posterior means on it
(drawing the same arm twice re-uses one sample, so a repeat is worth the
arm's mean).  The quadratic is concave there, and the optimum is found by a
primal-dual active-set iteration on the KKT system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .arms import ArmEstimate
from .gauss import gap_ei


class SingularSystemError(RuntimeError):
    """Active-set KKT system stayed singular after jitter retries."""


@dataclass(frozen=True)
class ProbabilityVector:
    """A point on the (K-1)-simplex: nonnegative weights summing to one."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D vector")
        if np.any(w < 0.0):
            raise ValueError(f"negative weight: min={w.min()}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")

    @property
    def k(self) -> int:
        return self.weights.size

    def support(self) -> np.ndarray:
        """Indices of arms with strictly positive weight."""
        return np.flatnonzero(self.weights > 0.0)


@dataclass(frozen=True)
class PairwiseMaxMatrix:
    """K x K matrix of pairwise expected maxima with mean-overridden diagonal."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.entries, dtype=np.float64)
        object.__setattr__(self, "entries", g)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
            raise ValueError(f"entries must be square and nonempty, got shape {g.shape}")
        if not np.isfinite(g).all():
            raise ValueError("entries must all be finite")
        if not np.array_equal(g, g.T):
            raise ValueError("off-diagonal entries must be symmetric")

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal_means(self) -> np.ndarray:
        return np.diag(self.entries)


@dataclass(frozen=True)
class KktCertificate:
    """Optimality evidence for one active-set solve.

    ``stationarity_gap`` is the worst |(G pi)_i - lambda| over the active
    arms, ``max_dual_violation`` the worst (G pi)_i - lambda over inactive
    arms (negative when all are slack), ``max_primal_violation`` the worst
    simplex-feasibility defect.  ``limit_hit`` marks a solve that stopped at
    the iteration cap with the best feasible iterate attached.
    """

    multiplier: float
    stationarity_gap: float
    max_dual_violation: float
    max_primal_violation: float
    iterations: int
    limit_hit: bool = False

    def accepted(self, tol: float) -> bool:
        return (
            not self.limit_hit
            and self.stationarity_gap <= tol
            and self.max_dual_violation <= tol
            and self.max_primal_violation <= tol
        )


def posterior_arrays(
    estimates: Sequence[ArmEstimate], inflation: float, reward_std: float
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and (inflated) stds as arrays; rejects unpulled arms."""
    if inflation < 1.0:
        raise ValueError(f"inflation must be >= 1, got {inflation}")
    if not reward_std > 0.0:
        raise ValueError(f"reward_std must be positive, got {reward_std}")
    counts = np.array([e.count for e in estimates], dtype=np.float64)
    means = np.array([e.mean for e in estimates], dtype=np.float64)
    if np.any(counts < 1):
        for e in estimates:
            e.require_pulled()
    stds = inflation * reward_std / np.sqrt(counts)
    return means, stds


def pairwise_matrix_values(means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    """Pairwise expected-max entries for Gaussian posteriors, diagonal overridden.

    Jitted counterpart of :func:`remax_bandits.gauss.pairwise_max_entry`,
    including its saturation at |z| > 38; bitwise symmetric.
    """
    return _kernels.pairwise_values(
        np.ascontiguousarray(means, dtype=np.float64),
        np.ascontiguousarray(stds, dtype=np.float64),
    )


def build_pairwise_matrix(
    estimates: Sequence[ArmEstimate], inflation: float = 1.0, reward_std: float = 1.0
) -> PairwiseMaxMatrix:
    """Build the expected-max matrix from per-arm posteriors."""
    means, stds = posterior_arrays(estimates, inflation, reward_std)
    return PairwiseMaxMatrix(pairwise_matrix_values(means, stds))


def remax_objective(pi: ProbabilityVector, g: PairwiseMaxMatrix) -> float:
    """Quadratic objective value pi @ G @ pi; equals the mean at any vertex."""
    w = pi.weights
    if w.size != g.k:
        raise ValueError(f"dimension mismatch: pi has {w.size} arms, matrix has {g.k}")
    return float(w @ g.entries @ w)


def ei_vector(
    pi: ProbabilityVector,
    estimates: Sequence[ArmEstimate],
    inflation: float = 1.0,
    reward_std: float = 1.0,
) -> np.ndarray:
    """Per-arm expected improvement over one competing draw from ``pi``.

    Component i is ``sum_j pi_j E[(theta_i - theta_j)_+]`` with the self
    term zero (a repeated arm re-uses its sample and improves nothing).
    Diagnostic only; the solver works on the expected-max matrix directly.
    """
    means, stds = posterior_arrays(estimates, inflation, reward_std)
    if pi.k != means.size:
        raise ValueError(f"dimension mismatch: pi has {pi.k} arms, estimates {means.size}")
    gmax = pairwise_matrix_values(means, stds)
    # E[(theta_i - theta_j)_+] = E[max(theta_i, theta_j)] - mean_j, zero on the diagonal
    gei = gmax - means[None, :]
    np.fill_diagonal(gei, 0.0)
    return gei @ pi.weights


def solve_values(
    entries: np.ndarray, tol: float = 1e-10, max_iter: int | None = None
) -> tuple[np.ndarray, KktCertificate]:
    """Active-set solve on raw matrix entries (the policy-loop fast path)."""
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    k = entries.shape[0]
    if max_iter is None:
        max_iter = 50 * k
    pi, lam, stationarity, dual, primal, iterations, limit_hit, status = (
        _kernels.active_set_solve(np.ascontiguousarray(entries, dtype=np.float64), tol, max_iter)
    )
    if status == _kernels.SINGULAR:
        raise SingularSystemError(
            f"KKT system singular after jitter retries (iteration {iterations})"
        )
    cert = KktCertificate(
        multiplier=float(lam),
        stationarity_gap=float(stationarity),
        max_dual_violation=float(dual),
        max_primal_violation=float(primal),
        iterations=int(iterations),
        limit_hit=bool(limit_hit),
    )
    return pi, cert


def solve_active_set(
    g: PairwiseMaxMatrix, tol: float = 1e-10, max_iter: int | None = None
) -> tuple[ProbabilityVector, KktCertificate]:
    """Maximise pi @ G @ pi over the simplex by a primal-dual active set.

    Starts with every arm active and repeats: solve the bordered equality
    system for (pi, lambda), then simultaneously drop active arms with
    negative weight and re-activate inactive arms whose gradient exceeds
    the multiplier by more than ``tol``.  At a fixed point the KKT
    conditions hold, which certifies the global optimum of the concave
    quadratic; the returned certificate carries the measured residuals.

    The iteration cap (50 K by default) guards against cycling; on hitting
    it the current iterate is clamped to the simplex and returned with
    ``limit_hit`` set instead of raising, so long simulations never hang.
    Raises :class:`SingularSystemError` only if a system stays singular
    after diagonal-jitter retries.
    """
    pi, cert = solve_values(g.entries, tol, max_iter)
    return ProbabilityVector(pi), cert


def eliminated_system(g: PairwiseMaxMatrix) -> tuple[np.ndarray, np.ndarray]:
    """All-active KKT system with the first weight eliminated.

    Substituting ``pi_1 = 1 - sum(pi_2:)`` into the stationarity equations
    yields ``A @ pi_2: = b`` with ``A_ij = G_ij + G_11 - G_i1 - G_1j`` and
    ``b_i = G_11 - G_i1``.  Kept as an independent cross-check of the
    bordered solve on its first (all-active) iteration.
    """
    e = g.entries
    a = e[1:, 1:] + e[0, 0] - e[1:, :1] - e[:1, 1:]
    b = e[0, 0] - e[1:, 0]
    return a, b


def two_arm_ratio_weights(
    estimates: Sequence[ArmEstimate], inflation: float = 1.0, reward_std: float = 1.0
) -> ProbabilityVector:
    """Closed-form interior two-arm policy: weights proportional to the
    opposing expected positive gaps."""
    if len(estimates) != 2:
        raise ValueError("ratio form is defined for exactly two arms")
    g12 = gap_ei(estimates[0], estimates[1], inflation, reward_std)
    g21 = gap_ei(estimates[1], estimates[0], inflation, reward_std)
    total = g12 + g21
    return ProbabilityVector(np.array([g12 / total, g21 / total]))
