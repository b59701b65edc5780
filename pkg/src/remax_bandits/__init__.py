"""Retry-aware Gaussian bandit policies and a reproducible simulation harness."""

from .arms import ArmEstimate, PosteriorUndefinedError
from .gauss import GaussianMoment, gap_ei, pairwise_max_entry, positive_part_mean
from .harness import (
    AggregateSeries,
    MetricTrace,
    RunConfig,
    read_csv,
    run_replicated,
    run_single,
    write_csv,
)
from .instances import BanditInstance, builtin, load_instance, obd_transform
from .policies import PolicyConfig, PolicyKind, PolicyState, init_phase_arm, select, update
from .remax_exact import (
    KktCertificate,
    PairwiseMaxMatrix,
    ProbabilityVector,
    build_pairwise_matrix,
    ei_vector,
    remax_objective,
    solve_active_set,
)
from .remax_grad import GradConfig, LogitState, grad_logits, grad_policy, kkt_gap, optimize_round, sampled_objective

__all__ = [
    "AggregateSeries",
    "ArmEstimate",
    "BanditInstance",
    "GaussianMoment",
    "GradConfig",
    "KktCertificate",
    "LogitState",
    "MetricTrace",
    "PairwiseMaxMatrix",
    "PolicyConfig",
    "PolicyKind",
    "PolicyState",
    "PosteriorUndefinedError",
    "ProbabilityVector",
    "RunConfig",
    "build_pairwise_matrix",
    "builtin",
    "ei_vector",
    "gap_ei",
    "grad_logits",
    "grad_policy",
    "init_phase_arm",
    "kkt_gap",
    "load_instance",
    "obd_transform",
    "optimize_round",
    "pairwise_max_entry",
    "positive_part_mean",
    "read_csv",
    "remax_objective",
    "run_replicated",
    "run_single",
    "sampled_objective",
    "select",
    "solve_active_set",
    "update",
    "write_csv",
]
