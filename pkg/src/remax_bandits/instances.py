"""Ground-truth bandit instances: built-in mean vectors and a file loader.

The real-data instances are compiled-in aggregates (ad click-through rates
and normalized movie ratings); the raw logs they summarize are not shipped
or fetched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class InstanceError(ValueError):
    """Invalid instance definition (tied maximum, bad noise scale, parse error)."""


@dataclass(frozen=True)
class BanditInstance:
    """Named vector of true arm means plus the reward noise scale.

    The best arm must be a unique argmax (ties among the remaining arms
    are fine).  ``second_best_mean`` is the largest mean among the other
    arms; for a single-arm instance (unit tests only) it is NaN.
    """

    name: str
    means: np.ndarray
    reward_std: float
    best_arm: int = field(init=False)
    second_best_mean: float = field(init=False)

    def __post_init__(self) -> None:
        means = np.asarray(self.means, dtype=np.float64)
        object.__setattr__(self, "means", means)
        if means.ndim != 1 or means.size == 0:
            raise InstanceError(f"means must be a nonempty vector, got shape {means.shape}")
        if not np.isfinite(means).all():
            raise InstanceError("arm means must be finite")
        if not self.reward_std > 0.0:
            raise InstanceError(f"reward_std must be positive, got {self.reward_std}")
        best = int(np.argmax(means))
        if means.size > 1:
            others = np.delete(means, best)
            if others.max() == means[best]:
                raise InstanceError(f"instance {self.name!r} has a tied maximum mean")
            second = float(others.max())
        else:
            second = math.nan
        object.__setattr__(self, "best_arm", best)
        object.__setattr__(self, "second_best_mean", second)

    @property
    def k(self) -> int:
        return self.means.size

    def gaps(self) -> np.ndarray:
        """Suboptimality gap of every arm relative to the best."""
        return self.means[self.best_arm] - self.means


# Average click standard deviation used to normalize the ad CTRs, and the
# per-pull impression count whose square root rescales the mean.
CLICK_STD = 0.057774753125
IMPRESSIONS_PER_PULL = 1000

# Empirical click-through rates of the 80 ads, in arm-index order.
OBD_CTRS = (
    0.0029265, 0.0014464, 0.0021134, 0.0026464, 0.0018947, 0.0032350, 0.0024874, 0.0052780,
    0.0037272, 0.0025919, 0.0015018, 0.0033327, 0.0018368, 0.0020283, 0.0029336, 0.0030222,
    0.0032011, 0.0036364, 0.0036137, 0.0018426, 0.0017718, 0.0023036, 0.0028038, 0.0025506,
    0.0024710, 0.0019308, 0.0021782, 0.0016784, 0.0037885, 0.0015287, 0.0045120, 0.0041963,
    0.0036784, 0.0032292, 0.0055569, 0.0055678, 0.0028800, 0.0035584, 0.0044478, 0.0053337,
    0.0026211, 0.0055760, 0.0035852, 0.0048702, 0.0024826, 0.0051337, 0.0039318, 0.0055106,
    0.0044275, 0.0057023, 0.0034024, 0.0056714, 0.0049135, 0.0028941, 0.0026866, 0.0038009,
    0.0026913, 0.0037623, 0.0049876, 0.0055036, 0.0048012, 0.0059725, 0.0044809, 0.0056396,
    0.0033993, 0.0041044, 0.0038471, 0.0019121, 0.0018957, 0.0035998, 0.0022913, 0.0030215,
    0.0027332, 0.0025879, 0.0020447, 0.0026221, 0.0036932, 0.0024460, 0.0052332, 0.0056697,
)

# Per-movie average ratings, already normalized by the across-movie rating
# standard deviation; each value is directly a unit-noise arm mean.
MOVIELENS_MEANS = (
    0.86074, 0.79806, 0.90208, 0.79304, 0.88125, 0.82937, 0.89074, 0.86747,
    0.85094, 0.68196, 0.80458, 0.84699, 0.81170, 0.86348, 0.75277, 0.79061,
    0.85860, 0.89554, 0.87036, 0.86317, 0.82550, 0.91091, 0.81759, 0.82508,
    0.74799, 0.83192, 0.83041, 0.85564, 0.84388, 0.78111, 0.90499,
)


def obd_transform(ctr: float) -> float:
    """Arm mean for one ad: ctr * sqrt(impressions) / click std.

    Aggregating 1000 impressions into one unit-variance Gaussian pull
    scales the normalized click rate by sqrt(1000).  Positive linear, so
    the CTR ordering is preserved.
    """
    if not 0.0 < ctr < 1.0:
        raise InstanceError(f"ctr must lie strictly between 0 and 1, got {ctr}")
    return ctr * math.sqrt(IMPRESSIONS_PER_PULL) / CLICK_STD


BUILTIN_NAMES = ("two_arm", "three_arm", "ten_arm", "failure_mode", "obd", "movielens")

# Horizons matching the published experiment settings.
DEFAULT_HORIZONS = {
    "two_arm": 20_000,
    "three_arm": 20_000,
    "ten_arm": 20_000,
    "failure_mode": 20_000,
    "obd": 3_000,
    "movielens": 10_000,
}


def builtin(name: str) -> BanditInstance:
    """One of the six built-in instances by name."""
    if name == "two_arm":
        return BanditInstance("two_arm", np.array([0.9, 0.8]), 0.15)
    if name == "three_arm":
        return BanditInstance("three_arm", np.array([0.05, 0.02, 0.01]), 0.02)
    if name == "ten_arm":
        means = np.array([0.1, 0.05, 0.05, 0.05, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01])
        return BanditInstance("ten_arm", means, 0.05)
    if name == "failure_mode":
        means = np.full(10, 1.0)
        means[0] = 1.5
        return BanditInstance("failure_mode", means, 1.0)
    if name == "obd":
        means = np.array([obd_transform(c) for c in OBD_CTRS])
        return BanditInstance("obd", means, 1.0)
    if name == "movielens":
        return BanditInstance("movielens", np.array(MOVIELENS_MEANS), 1.0)
    raise InstanceError(f"unknown instance {name!r}; available: {', '.join(BUILTIN_NAMES)}")


def load_instance(path: str | Path) -> BanditInstance:
    """Parse the flat text instance format.

    Three content lines in order: ``name <string>``, ``reward_std
    <decimal>``, ``means <decimal> <decimal> ...`` (at least two entries).
    Lines starting with ``#`` and blank lines are ignored.
    """
    path = Path(path)
    fields: dict[str, tuple[int, str]] = {}
    expected = ("name", "reward_std", "means")
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(" ")
            if key not in expected:
                raise InstanceError(f"{path}:{lineno}: unexpected field {key!r}")
            if key in fields:
                raise InstanceError(f"{path}:{lineno}: duplicate field {key!r}")
            fields[key] = (lineno, value.strip())
    for key in expected:
        if key not in fields:
            raise InstanceError(f"{path}: missing field {key!r}")

    name = fields["name"][1]
    if not name:
        raise InstanceError(f"{path}:{fields['name'][0]}: empty instance name")
    lineno, raw_std = fields["reward_std"]
    try:
        reward_std = float(raw_std)
    except ValueError:
        raise InstanceError(f"{path}:{lineno}: reward_std is not a decimal: {raw_std!r}") from None
    lineno, raw_means = fields["means"]
    try:
        means = np.array([float(tok) for tok in raw_means.split()])
    except ValueError:
        raise InstanceError(f"{path}:{lineno}: means contains a non-decimal entry") from None
    if means.size < 2:
        raise InstanceError(f"{path}:{lineno}: means needs at least 2 entries, got {means.size}")
    return BanditInstance(name, means, reward_std)
