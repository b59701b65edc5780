"""Experiment engine: seeded replications, metric traces, CSV aggregates.

One replication plays a (policy, instance) pair for T rounds and records
cumulative regret, cumulative underestimation of the best arm, the regret
split by the underestimation indicator, and optionally the per-round inner
KKT gap.  Replications use independent counter-based RNG streams derived
from (master seed, policy kind, replication index), so results are
reproducible bit-for-bit regardless of execution order or worker count.

Indicator conventions (also echoed into every CSV header):

* the cumulative underestimation indicator compares the best arm's
  empirical mean AFTER the round's update against the second-best true
  mean, and is 0 before the best arm's first pull;
* the regret split uses the same comparison evaluated at round entry,
  BEFORE the round's pull.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .instances import BanditInstance
from .policies import PolicyConfig, PolicyKind, PolicyState, init_phase_arm, select, update

METRIC_NAMES = ("regret", "underestimation", "regret_under", "regret_not_under", "kkt_gap")

# Sub-stream tags: domain (reward noise vs policy randomness), then policy kind.
_REWARD_DOMAIN = 0
_POLICY_DOMAIN = 1
_POLICY_STREAM_TAG = {
    PolicyKind.REMAX_EXACT: 1,
    PolicyKind.REMAX_GRAD: 2,
    PolicyKind.THOMPSON: 3,
    PolicyKind.KLUCB: 4,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything one replicated experiment needs.

    ``shared_noise`` derives the reward stream without the policy tag so
    different policies see common random numbers; off by default, giving
    fully independent reward realizations per policy.
    """

    instance: BanditInstance
    policy: PolicyConfig
    horizon: int
    replications: int
    master_seed: int
    record_kkt: bool = False
    shared_noise: bool = False

    def __post_init__(self) -> None:
        if self.horizon < self.instance.k:
            raise ValueError(
                f"horizon {self.horizon} is shorter than the init sweep over "
                f"{self.instance.k} arms"
            )
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.record_kkt and self.policy.kind is not PolicyKind.REMAX_GRAD:
            raise ValueError("record_kkt requires the remax_grad policy")


@dataclass
class MetricTrace:
    """Cumulative per-round series of one replication."""

    regret: np.ndarray
    underestimation: np.ndarray
    regret_under: np.ndarray
    regret_not_under: np.ndarray
    kkt_gap: np.ndarray | None
    final_counts: np.ndarray


@dataclass(frozen=True)
class AggregateSeries:
    """Across-run mean and standard error of one metric, per round."""

    metric: str
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int

    @property
    def stderr_defined(self) -> bool:
        return self.n_runs >= 2


def replication_streams(
    master_seed: int, kind: PolicyKind, rep: int, shared_noise: bool = False
) -> tuple[Generator, Generator]:
    """Counter-based (reward, policy) streams for one replication.

    The reward stream feeds one standard normal per round; the policy
    stream feeds posterior draws first, then the selection variate, in
    call order within each round.
    """
    tag = _POLICY_STREAM_TAG[kind]
    reward_key = (_REWARD_DOMAIN, 0 if shared_noise else tag, rep)
    policy_key = (_POLICY_DOMAIN, tag, rep)
    reward_rng = Generator(Philox(SeedSequence(master_seed, spawn_key=reward_key)))
    policy_rng = Generator(Philox(SeedSequence(master_seed, spawn_key=policy_key)))
    return reward_rng, policy_rng


def run_single(
    instance: BanditInstance,
    policy: PolicyConfig,
    horizon: int,
    reward_rng: Generator,
    policy_rng: Generator,
    record_kkt: bool = False,
) -> MetricTrace:
    """Play one replication and return its cumulative metric trace."""
    k = instance.k
    if horizon < k:
        raise ValueError(f"horizon {horizon} is shorter than the init sweep over {k} arms")
    means = instance.means
    sigma = instance.reward_std
    best = instance.best_arm
    best_mean = float(means[best])
    second = instance.second_best_mean

    state = PolicyState.fresh(k, policy.kind)
    regret = np.empty(horizon)
    under = np.empty(horizon, dtype=np.int64)
    regret_under = np.empty(horizon)
    regret_not_under = np.empty(horizon)
    kkt = np.full(horizon, np.nan) if record_kkt else None

    cum_regret = 0.0
    cum_under = 0
    cum_ru = 0.0
    cum_rnu = 0.0
    for t in range(horizon):
        arm = init_phase_arm(state, k)
        if arm is None:
            arm = select(state, policy, sigma, policy_rng)
        entry_under = state.counts[best] > 0 and state.means[best] < second
        reward = means[arm] + sigma * reward_rng.standard_normal()
        update(state, arm, reward)

        inc = best_mean - means[arm]
        cum_regret += inc
        if entry_under:
            cum_ru += inc
        else:
            cum_rnu += inc
        if state.counts[best] > 0 and state.means[best] < second:
            cum_under += 1
        regret[t] = cum_regret
        under[t] = cum_under
        regret_under[t] = cum_ru
        regret_not_under[t] = cum_rnu
        if kkt is not None and state.last_kkt_gap is not None:
            kkt[t] = state.last_kkt_gap
            state.last_kkt_gap = None
    return MetricTrace(
        regret=regret,
        underestimation=under,
        regret_under=regret_under,
        regret_not_under=regret_not_under,
        kkt_gap=kkt,
        final_counts=state.counts.copy(),
    )


def _replicate(cfg: RunConfig, rep: int) -> MetricTrace:
    reward_rng, policy_rng = replication_streams(
        cfg.master_seed, cfg.policy.kind, rep, cfg.shared_noise
    )
    return run_single(
        cfg.instance, cfg.policy, cfg.horizon, reward_rng, policy_rng, cfg.record_kkt
    )


def aggregate_traces(traces: list[MetricTrace]) -> dict[str, AggregateSeries]:
    """Fold replication traces into per-round mean and standard error.

    The standard error uses the n-1 sample variance over runs; with a
    single run it is recorded as zero (``stderr_defined`` is False).
    """
    n = len(traces)
    horizon = traces[0].regret.size
    t = np.arange(1, horizon + 1)
    out: dict[str, AggregateSeries] = {}
    for name in METRIC_NAMES:
        if name == "kkt_gap" and traces[0].kkt_gap is None:
            continue
        stack = np.stack([np.asarray(getattr(trace, _TRACE_FIELD[name]), dtype=np.float64)
                          for trace in traces])
        mean = stack.mean(axis=0)
        if n >= 2:
            stderr = stack.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            stderr = np.zeros(horizon)
        out[name] = AggregateSeries(metric=name, t=t, mean=mean, stderr=stderr, n_runs=n)
    return out


_TRACE_FIELD = {
    "regret": "regret",
    "underestimation": "underestimation",
    "regret_under": "regret_under",
    "regret_not_under": "regret_not_under",
    "kkt_gap": "kkt_gap",
}


def run_replicated(cfg: RunConfig, threads: int = 1) -> dict[str, AggregateSeries]:
    """Run all replications and aggregate; deterministic for any ``threads``.

    Each replication owns its derived streams, so traces are identical
    whether computed serially or on a process pool; the aggregation fold
    always happens in replication order.
    """
    reps = range(cfg.replications)
    if threads <= 1 or cfg.replications == 1:
        traces = [_replicate(cfg, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(_replicate, [cfg] * cfg.replications, reps, chunksize=1))
    return aggregate_traces(traces)


def config_echo(cfg: RunConfig) -> dict[str, str]:
    """Header metadata recorded at the top of every CSV."""
    grad_m = cfg.policy.grad.m if cfg.policy.grad is not None else ""
    return {
        "instance": cfg.instance.name,
        "policy": cfg.policy.kind.value,
        "m": str(grad_m),
        "inflation": format(cfg.policy.inflation, ".17g"),
        "horizon": str(cfg.horizon),
        "replications": str(cfg.replications),
        "master_seed": str(cfg.master_seed),
        "shared_noise": str(cfg.shared_noise).lower(),
        "underestimation_indicator": (
            "post-update empirical best mean < second-best true mean; "
            "0 before the best arm's first pull"
        ),
        "regret_split_indicator": "same comparison at round entry, before the pull",
    }


def write_csv(
    series: Mapping[str, AggregateSeries], path: str | Path, meta: Mapping[str, str] | None = None
) -> None:
    """Emit `metric,t,mean,stderr,n_runs` rows, 17 significant digits.

    Metadata is echoed as leading ``#`` comment lines; the format
    round-trips losslessly through :func:`read_csv`.
    """
    path = Path(path)
    lines: list[str] = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append("metric,t,mean,stderr,n_runs")
    for name in METRIC_NAMES:
        if name not in series:
            continue
        s = series[name]
        for ti, m, se in zip(s.t, s.mean, s.stderr):
            lines.append(f"{name},{ti},{m:.17g},{se:.17g},{s.n_runs}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path: str | Path) -> tuple[dict[str, str], dict[str, AggregateSeries]]:
    """Parse a harness CSV back into metadata and aggregate series."""
    path = Path(path)
    meta: dict[str, str] = {}
    rows: dict[str, list[tuple[int, float, float, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        header_seen = False
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                meta[key.strip()] = value.strip()
                continue
            if not header_seen:
                if line != "metric,t,mean,stderr,n_runs":
                    raise ValueError(f"{path}: unexpected header {line!r}")
                header_seen = True
                continue
            name, ts, ms, ses, ns = line.split(",")
            rows.setdefault(name, []).append((int(ts), float(ms), float(ses), int(ns)))
    out: dict[str, AggregateSeries] = {}
    for name, entries in rows.items():
        t = np.array([e[0] for e in entries], dtype=np.int64)
        mean = np.array([e[1] for e in entries])
        stderr = np.array([e[2] for e in entries])
        out[name] = AggregateSeries(
            metric=name, t=t, mean=mean, stderr=stderr, n_runs=entries[0][3]
        )
    return meta, out
