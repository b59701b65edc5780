"""Arm-selection policies behind one select/observe/update interface.

Four rules share the same conjugate Gaussian bookkeeping with an improper
prior: the exact best-of-two solver, its gradient approximation for
general M, Thompson sampling, and the Gaussian KL-UCB index.  Every run
starts with one mandatory pull of each arm in index order; the selection
rules only apply once each arm has a posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .arms import ArmEstimate, PosteriorUndefinedError
from .remax_exact import (
    KktCertificate,
    ProbabilityVector,
    pairwise_matrix_values,
    solve_values,
)
from .remax_grad import GradConfig, LogitState, optimize_round


class ConfigError(ValueError):
    """Invalid policy or run configuration."""


class PolicyKind(str, Enum):
    REMAX_EXACT = "remax_exact"
    REMAX_GRAD = "remax_grad"
    THOMPSON = "thompson"
    KLUCB = "klucb"


@dataclass(frozen=True)
class PolicyConfig:
    """Which rule to run and its knobs.

    ``inflation`` scales the posterior std (variance scales with its
    square) and applies to the exact solver only; the baselines always run
    uninflated.  ``klucb_c`` is the log-log confidence factor, zero by
    default.
    """

    kind: PolicyKind
    inflation: float = 1.0
    grad: GradConfig | None = None
    klucb_c: float = 0.0
    solver_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.inflation < 1.0:
            raise ConfigError(f"inflation must be >= 1, got {self.inflation}")
        if self.kind is not PolicyKind.REMAX_EXACT and self.inflation != 1.0:
            raise ConfigError(f"inflation applies to remax_exact only, not {self.kind.value}")
        if self.kind is PolicyKind.REMAX_GRAD and self.grad is None:
            object.__setattr__(self, "grad", GradConfig())
        if self.kind is not PolicyKind.REMAX_GRAD and self.grad is not None:
            raise ConfigError(f"grad settings apply to remax_grad only, not {self.kind.value}")


@dataclass
class PolicyState:
    """Mutable per-run state: sufficient statistics plus diagnostics.

    ``round`` is the global 1-indexed round counter, always one more than
    the total number of recorded pulls.  Counts and means live in arrays;
    ``estimates`` materialises them as ArmEstimate values.
    """

    counts: np.ndarray
    means: np.ndarray
    round: int = 1
    logits: LogitState | None = None
    last_policy: ProbabilityVector | None = None
    last_certificate: KktCertificate | None = None
    last_kkt_gap: float | None = None

    @classmethod
    def fresh(cls, k: int, kind: PolicyKind | None = None) -> "PolicyState":
        logits = LogitState.zeros(k) if kind is PolicyKind.REMAX_GRAD else None
        return cls(counts=np.zeros(k, dtype=np.int64), means=np.zeros(k), logits=logits)

    @property
    def k(self) -> int:
        return self.counts.size

    @property
    def estimates(self) -> list[ArmEstimate]:
        return [ArmEstimate(int(c), float(m)) for c, m in zip(self.counts, self.means)]


def init_phase_arm(state: PolicyState, k: int) -> int | None:
    """Arm to pull during the mandatory init sweep, or None once finished.

    Rounds 1..K pull arms 0..K-1 in index order; from round K+1 the
    policy's own selection rule takes over.
    """
    if state.round <= k:
        return state.round - 1
    return None


def posterior_stds(state: PolicyState, inflation: float, reward_std: float) -> np.ndarray:
    if np.any(state.counts < 1):
        raise PosteriorUndefinedError(
            f"arms {np.flatnonzero(state.counts < 1).tolist()} have no pulls"
        )
    return inflation * reward_std / np.sqrt(state.counts)


def klucb_index(
    means: np.ndarray, counts: np.ndarray, t: float, reward_std: float, c: float = 0.0
) -> np.ndarray:
    """Gaussian KL-UCB index: mean + sqrt(2 sigma^2 [ln t + c ln ln t] / N)."""
    bonus = math.log(t)
    if c != 0.0:
        bonus += c * math.log(math.log(t))
    return means + np.sqrt(2.0 * reward_std * reward_std * bonus / counts)


def _sample_from(pi: ProbabilityVector, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over weights in index order using one uniform."""
    cum = np.cumsum(pi.weights)
    u = rng.random()
    return min(int(np.searchsorted(cum, u, side="right")), pi.k - 1)


def select(
    state: PolicyState, cfg: PolicyConfig, reward_std: float, rng: np.random.Generator
) -> int:
    """Choose an arm for the current round (init phase must be complete)."""
    if cfg.kind is PolicyKind.THOMPSON:
        stds = posterior_stds(state, 1.0, reward_std)
        samples = state.means + stds * rng.standard_normal(state.k)
        return int(np.argmax(samples))

    if cfg.kind is PolicyKind.KLUCB:
        if np.any(state.counts < 1):
            raise PosteriorUndefinedError("KL-UCB requires one pull of every arm")
        index = klucb_index(state.means, state.counts, state.round, reward_std, cfg.klucb_c)
        return int(np.argmax(index))

    if cfg.kind is PolicyKind.REMAX_EXACT:
        stds = posterior_stds(state, cfg.inflation, reward_std)
        entries = pairwise_matrix_values(state.means, stds)
        weights, cert = solve_values(entries, tol=cfg.solver_tol)
        pi = ProbabilityVector(weights)
        state.last_policy = pi
        state.last_certificate = cert
        return _sample_from(pi, rng)

    if cfg.kind is PolicyKind.REMAX_GRAD:
        grad_cfg = cfg.grad
        assert grad_cfg is not None and state.logits is not None
        stds = posterior_stds(state, 1.0, reward_std)
        theta = state.means + stds * rng.standard_normal((grad_cfg.samples, state.k))
        pi, state.logits, trace = optimize_round(state.logits, theta, grad_cfg)
        state.last_policy = pi
        state.last_kkt_gap = trace[-1]
        return _sample_from(pi, rng)

    raise ConfigError(f"unknown policy kind {cfg.kind!r}")


def update(state: PolicyState, arm: int, reward: float) -> PolicyState:
    """Record one observed reward: incremental mean, count, round counter.

    With fixed reward noise this is numerically the precision-weighted
    conjugate update; under the improper prior the posterior mean is just
    the empirical mean.
    """
    if not 0 <= arm < state.k:
        raise ValueError(f"arm index {arm} out of range for {state.k} arms")
    c = state.counts[arm]
    if c == 0:
        state.means[arm] = reward
    else:
        state.means[arm] += (reward - state.means[arm]) / (c + 1)
    state.counts[arm] = c + 1
    state.round += 1
    return state
