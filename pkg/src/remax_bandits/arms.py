"""Per-arm sufficient statistics for the conjugate Gaussian model."""

from __future__ import annotations

from dataclasses import dataclass


class PosteriorUndefinedError(ValueError):
    """Raised when a posterior quantity is requested for an unpulled arm."""


@dataclass
class ArmEstimate:
    """Pull count and empirical mean of one arm.

    With an improper uniform prior and known reward noise, (count, mean) is
    the full sufficient statistic: the posterior over the arm's mean is
    Gaussian with centre ``mean`` and variance ``reward_std**2 / count``.
    A count of zero means the posterior is undefined and ``mean`` carries
    no information.
    """

    count: int
    mean: float = 0.0

    def require_pulled(self) -> None:
        if self.count < 1:
            raise PosteriorUndefinedError(
                "arm has no pulls; posterior is undefined under the improper prior"
            )

    def posterior_std(self, inflation: float, reward_std: float) -> float:
        """Posterior standard deviation, optionally variance-inflated.

        After ``count`` pulls the posterior std is
        ``inflation * reward_std / sqrt(count)``.
        """
        self.require_pulled()
        return inflation * reward_std / self.count**0.5

    def updated(self, reward: float) -> "ArmEstimate":
        """Return the estimate after observing one more reward."""
        if self.count == 0:
            return ArmEstimate(count=1, mean=reward)
        new_count = self.count + 1
        return ArmEstimate(count=new_count, mean=self.mean + (reward - self.mean) / new_count)
