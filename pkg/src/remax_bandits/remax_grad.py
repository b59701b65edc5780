"""Sample-average best-of-M objective and its ascent on softmax logits.

For M > 2 the optimal sampling distribution has no closed form, so each
round draws S posterior sample vectors, freezes them, and runs at most L
Adam steps on logits z with pi = softmax(z).  The per-sample objective and
its policy gradient are evaluated through the order statistics of the
sample: sorting arms by sampled value descending, the chance that the best
drawn arm is the rank-r one telescopes through the tail weights
(1 - cumulative pi).  A simplex KKT gap provides the stopping rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .remax_exact import ProbabilityVector


@dataclass(frozen=True)
class GradConfig:
    """Inner-optimiser settings: M virtual draws, S samples, L Adam steps."""

    m: int = 2
    samples: int = 50
    max_steps: int = 20
    learning_rate: float = 0.05
    kkt_tol: float = 1e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if self.samples < 1 or self.max_steps < 1:
            raise ValueError("samples and max_steps must be >= 1")
        if not (self.learning_rate > 0.0 and self.kkt_tol > 0.0):
            raise ValueError("learning_rate and kkt_tol must be positive")


@dataclass
class LogitState:
    """Softmax logits plus Adam moments.

    Logits persist from round to round (warm start); the moments and step
    counter are zeroed at the start of every round's inner loop.
    """

    logits: np.ndarray
    adam_m: np.ndarray | None = None
    adam_v: np.ndarray | None = None
    step_count: int = 0

    def __post_init__(self) -> None:
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.adam_m is None:
            self.adam_m = np.zeros_like(self.logits)
        if self.adam_v is None:
            self.adam_v = np.zeros_like(self.logits)

    @classmethod
    def zeros(cls, k: int) -> "LogitState":
        return cls(logits=np.zeros(k))


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def _check_inputs(pi: ProbabilityVector, theta_samples: np.ndarray, m: int) -> np.ndarray:
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    theta = np.asarray(theta_samples, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[1] != pi.k:
        raise ValueError(
            f"theta_samples must be S x K with K={pi.k}, got shape {theta.shape}"
        )
    return theta


def _rank_order(theta: np.ndarray) -> np.ndarray:
    """Per-sample arm order by sampled value descending, ties by arm index."""
    return np.argsort(-theta, axis=1, kind="stable")


def sampled_objective(pi: ProbabilityVector, theta_samples: np.ndarray, m: int) -> float:
    """Sample average of the expected best value among M draws from ``pi``.

    Within a sample, drawing an arm twice re-uses its value, so the best
    drawn value is rank r exactly when all M draws avoid ranks above r and
    at least one hits rank r; those probabilities telescope through the
    tail weights of the rank-ordered policy.
    """
    theta = _check_inputs(pi, theta_samples, m)
    order = _rank_order(theta)
    theta_sorted = np.take_along_axis(theta, order, axis=1)
    pi_sorted = pi.weights[order]
    tail = np.clip(1.0 - np.cumsum(pi_sorted, axis=1), 0.0, None)  # (1 - c_r), >= 0
    surv = np.empty_like(tail)
    surv[:, 0] = 1.0
    surv[:, 1:] = tail[:, :-1]
    hit = surv**m - tail**m  # P(best drawn rank == r)
    return float(np.mean(np.sum(theta_sorted * hit, axis=1)))


def grad_policy(pi: ProbabilityVector, theta_samples: np.ndarray, m: int) -> np.ndarray:
    """Gradient of the sample-average objective with respect to ``pi``.

    Per sample and rank r the partial derivative is
    ``sum_{r' >= r} m (theta_(r') - theta_(r'+1)) (1 - c_{r'})**(m-1)``;
    the r' = K term vanishes because its tail weight is zero.  Components
    are scattered back from rank order to arm order per sample, then
    averaged over the S samples.
    """
    theta = _check_inputs(pi, theta_samples, m)
    s, k = theta.shape
    order = _rank_order(theta)
    theta_sorted = np.take_along_axis(theta, order, axis=1)
    pi_sorted = pi.weights[order]
    tail = np.clip(1.0 - np.cumsum(pi_sorted, axis=1), 0.0, None)
    grad_sorted = np.zeros((s, k))
    if k > 1:
        terms = m * (theta_sorted[:, :-1] - theta_sorted[:, 1:]) * tail[:, :-1] ** (m - 1)
        grad_sorted[:, :-1] = np.cumsum(terms[:, ::-1], axis=1)[:, ::-1]
    grad = np.zeros((s, k))
    np.put_along_axis(grad, order, grad_sorted, axis=1)
    return grad.mean(axis=0)


def grad_logits(pi: ProbabilityVector, g: np.ndarray) -> np.ndarray:
    """Push the policy gradient through softmax: pi * (g - <g, pi>)."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (pi.k,):
        raise ValueError(f"gradient has shape {g.shape}, expected ({pi.k},)")
    return pi.weights * (g - float(g @ pi.weights))


def kkt_gap(pi: ProbabilityVector, g: np.ndarray) -> float:
    """Simplex stationarity gap max_i g_i - <g, pi>; zero at optima."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (pi.k,):
        raise ValueError(f"gradient has shape {g.shape}, expected ({pi.k},)")
    return float(g.max() - g @ pi.weights)


def optimize_round(
    state: LogitState, theta_samples: np.ndarray, cfg: GradConfig
) -> tuple[ProbabilityVector, LogitState, list[float]]:
    """One round of warm-started Adam ascent on the frozen-sample objective.

    Runs at most ``cfg.max_steps`` bias-corrected Adam updates, stopping
    early once the KKT gap falls to ``cfg.kkt_tol``.  Returns the final
    softmax policy, the logits with moments zeroed for the next round, and
    the per-step gap trace whose last entry is the gap at the returned
    policy.
    """
    theta = np.asarray(theta_samples, dtype=np.float64)
    k = state.logits.size
    if theta.ndim != 2 or theta.shape[1] != k:
        raise ValueError(f"theta_samples must be S x {k}, got shape {theta.shape}")
    z = state.logits.copy()
    m1 = np.zeros(k)
    m2 = np.zeros(k)
    pi = ProbabilityVector(softmax(z))
    trace: list[float] = []
    steps = 0
    while True:
        g = grad_policy(pi, theta, cfg.m)
        gap = kkt_gap(pi, g)
        trace.append(gap)
        if gap <= cfg.kkt_tol or steps >= cfg.max_steps:
            break
        gz = grad_logits(pi, g)
        steps += 1
        m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * gz
        m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * gz * gz
        m1_hat = m1 / (1.0 - cfg.adam_beta1**steps)
        m2_hat = m2 / (1.0 - cfg.adam_beta2**steps)
        z = z + cfg.learning_rate * m1_hat / (np.sqrt(m2_hat) + cfg.adam_eps)
        pi = ProbabilityVector(softmax(z))
    next_state = LogitState(logits=z, step_count=steps)
    return pi, next_state, trace
