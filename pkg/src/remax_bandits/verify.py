"""Self-contained verification suites behind the `verify` CLI command.

Each suite draws a fixed-seed batch of random cases and checks the solver
or kernels against an independent oracle: KKT residual certification,
exhaustive grid search, finite differences, and plain Monte Carlo.  The
acceptance tests call the same functions, so the release gate and the CLI
agree by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arms import ArmEstimate
from .gauss import GaussianMoment, gap_ei, pairwise_max_entry, positive_part_mean
from .remax_exact import (
    PairwiseMaxMatrix,
    ProbabilityVector,
    build_pairwise_matrix,
    remax_objective,
    solve_active_set,
)
from .remax_grad import grad_policy, sampled_objective

SUITE_NAMES = ("kkt", "grid", "grad", "mc")


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: bool
    cases: int
    detail: str


def random_estimates(
    rng: np.random.Generator, k: int, max_count: int = 1000, mean_scale: float = 1.0
) -> list[ArmEstimate]:
    counts = rng.integers(1, max_count + 1, size=k)
    means = rng.normal(0.0, mean_scale, size=k)
    return [ArmEstimate(int(c), float(m)) for c, m in zip(counts, means)]


def random_interior_policy(rng: np.random.Generator, k: int) -> ProbabilityVector:
    w = rng.exponential(size=k) + 0.05
    return ProbabilityVector(w / w.sum())


def kkt_suite(cases: int = 1000, seed: int = 0) -> SuiteResult:
    """Certify KKT residuals of the active-set solve on random posteriors."""
    rng = np.random.default_rng(seed)
    worst_stat = 0.0
    worst_dual = 0.0
    worst_primal = 0.0
    limit_hits = 0
    for _ in range(cases):
        k = int(rng.integers(2, 21))
        estimates = random_estimates(rng, k)
        reward_std = float(rng.uniform(0.05, 1.5))
        inflation = float(rng.choice([1.0, 1.0, 1.4142135623730951, 2.0]))
        g = build_pairwise_matrix(estimates, inflation, reward_std)
        _, cert = solve_active_set(g)
        worst_stat = max(worst_stat, cert.stationarity_gap)
        worst_dual = max(worst_dual, cert.max_dual_violation)
        worst_primal = max(worst_primal, cert.max_primal_violation)
        limit_hits += cert.limit_hit
    passed = (
        worst_stat <= 1e-8 and worst_dual <= 1e-8 and worst_primal <= 1e-12 and limit_hits == 0
    )
    detail = (
        f"stationarity<={worst_stat:.2e} dual<={worst_dual:.2e} "
        f"primal<={worst_primal:.2e} limit_hits={limit_hits}"
    )
    return SuiteResult("kkt", passed, cases, detail)


_GRID_CACHE: dict[int, np.ndarray] = {}


def _simplex_grid(k: int, step: float = 1e-3) -> np.ndarray:
    """All simplex points with coordinates on a uniform grid of the given step."""
    if k in _GRID_CACHE:
        return _GRID_CACHE[k]
    n = round(1.0 / step)
    if k == 2:
        i = np.arange(n + 1)
        pts = np.column_stack([i, n - i]) / n
    elif k == 3:
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = i + j <= n
        i, j = i[keep], j[keep]
        pts = np.column_stack([i, j, n - i - j]) / n
    else:
        raise ValueError(f"grid oracle supports k in {{2, 3}}, got {k}")
    _GRID_CACHE[k] = pts
    return pts


def grid_best_objective(g: PairwiseMaxMatrix, step: float = 1e-3) -> float:
    """Exhaustive maximum of the quadratic objective over the simplex grid."""
    pts = _simplex_grid(g.k, step)
    vals = np.einsum("ni,ij,nj->n", pts, g.entries, pts)
    return float(vals.max())


def grid_suite(cases: int = 200, seed: int = 1) -> SuiteResult:
    """Solver objective must reach the best 1e-3-step grid point within 1e-6."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(cases):
        k = int(rng.integers(2, 4))
        estimates = random_estimates(rng, k, max_count=200)
        reward_std = float(rng.uniform(0.05, 1.0))
        g = build_pairwise_matrix(estimates, reward_std=reward_std)
        pi, _ = solve_active_set(g)
        shortfall = grid_best_objective(g) - remax_objective(pi, g)
        worst = max(worst, shortfall)
    passed = worst <= 1e-6
    return SuiteResult("grid", passed, cases, f"worst shortfall {worst:.2e} (tol 1e-6)")


def finite_difference_directional(
    pi: ProbabilityVector, theta: np.ndarray, m: int, direction: np.ndarray, eps: float = 1e-6
) -> float:
    """Central finite difference of the sampled objective along a tangent."""
    up = ProbabilityVector(pi.weights + eps * direction)
    down = ProbabilityVector(pi.weights - eps * direction)
    return (sampled_objective(up, theta, m) - sampled_objective(down, theta, m)) / (2 * eps)


def single_sample_pairwise_matrix(theta: np.ndarray) -> np.ndarray:
    """Zero-variance expected-max matrix of one sample: max off-diagonal, value on it."""
    g = np.maximum(theta[:, None], theta[None, :])
    np.fill_diagonal(g, theta)
    return g


def grad_suite(cases: int = 200, seed: int = 2) -> SuiteResult:
    """Check the policy gradient against finite differences and, for M=2,
    against differentiating the single-sample quadratic form."""
    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    worst_quad = 0.0
    for _ in range(cases):
        k = int(rng.integers(2, 7))
        m = int(rng.choice([2, 3, 4]))
        s = 8
        theta = rng.normal(0.0, 1.0, size=(s, k))
        pi = random_interior_policy(rng, k)
        g = grad_policy(pi, theta, m)
        for _ in range(20):
            d = rng.normal(size=k)
            d -= d.mean()
            d /= np.linalg.norm(d)
            analytic = float(g @ d)
            fd = finite_difference_directional(pi, theta, m, d)
            scale = max(abs(analytic), abs(fd))
            if scale < 1e-9:
                worst_rel = max(worst_rel, abs(analytic - fd))
            else:
                worst_rel = max(worst_rel, abs(analytic - fd) / scale)

        # M=2, one zero-variance sample: gradient of the quadratic form is
        # 2 G theta pi up to a constant along the all-ones normal, so the
        # tangential (mean-centred) components must agree.
        theta1 = rng.normal(0.0, 1.0, size=(1, k))
        pi1 = random_interior_policy(rng, k)
        g1 = grad_policy(pi1, theta1, 2)
        quad = 2.0 * single_sample_pairwise_matrix(theta1[0]) @ pi1.weights
        diff = (g1 - g1.mean()) - (quad - quad.mean())
        worst_quad = max(worst_quad, float(np.abs(diff).max()))
    passed = worst_rel <= 1e-5 and worst_quad <= 1e-10
    detail = f"fd rel err<={worst_rel:.2e} (tol 1e-5), quad err<={worst_quad:.2e} (tol 1e-10)"
    return SuiteResult("grad", passed, cases, detail)


def mc_suite(cases: int = 50, seed: int = 3, draws: int = 10_000_000) -> SuiteResult:
    """Closed forms vs plain Monte Carlo, within 3 standard errors."""
    rng = np.random.default_rng(seed)
    worst_z = 0.0
    for _ in range(cases):
        delta = float(rng.uniform(-2.0, 2.0))
        sigma = float(rng.uniform(0.1, 2.0))
        x = np.clip(delta + sigma * rng.standard_normal(draws), 0.0, None)
        mc, se = float(x.mean()), float(x.std(ddof=1) / np.sqrt(draws))
        exact = positive_part_mean(GaussianMoment(delta, sigma))
        worst_z = max(worst_z, abs(exact - mc) / se)

        i, j = random_estimates(rng, 2, max_count=50)
        reward_std = float(rng.uniform(0.1, 1.0))
        ti = i.mean + i.posterior_std(1.0, reward_std) * rng.standard_normal(draws)
        tj = j.mean + j.posterior_std(1.0, reward_std) * rng.standard_normal(draws)
        mx = np.maximum(ti, tj)
        mc, se = float(mx.mean()), float(mx.std(ddof=1) / np.sqrt(draws))
        exact = pairwise_max_entry(i, j, 1.0, reward_std)
        worst_z = max(worst_z, abs(exact - mc) / se)
        del x, ti, tj, mx
    passed = worst_z <= 3.0
    return SuiteResult("mc", passed, cases, f"worst |z|={worst_z:.2f} (tol 3 SE)")


def ratio_suite(cases: int = 500, seed: int = 4) -> SuiteResult:
    """Interior two-arm solutions must balance the opposing expected gaps."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    interior = 0
    while interior < cases:
        estimates = random_estimates(rng, 2, max_count=500)
        reward_std = float(rng.uniform(0.05, 1.0))
        g = build_pairwise_matrix(estimates, reward_std=reward_std)
        pi, _ = solve_active_set(g)
        w = pi.weights
        if w.min() <= 0.0:
            continue
        interior += 1
        lhs = w[1] * gap_ei(estimates[0], estimates[1], 1.0, reward_std)
        rhs = w[0] * gap_ei(estimates[1], estimates[0], 1.0, reward_std)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    passed = worst <= 1e-8
    return SuiteResult("ratio", passed, cases, f"worst rel err {worst:.2e} (tol 1e-8)")


def run_suites(
    names: tuple[str, ...] = SUITE_NAMES, cases: int | None = None, seed: int = 0
) -> list[SuiteResult]:
    """Run the requested suites with seeds offset from the given base."""
    defaults = {"kkt": 1000, "grid": 200, "grad": 200, "mc": 50, "ratio": 500}
    runners = {
        "kkt": kkt_suite,
        "grid": grid_suite,
        "grad": grad_suite,
        "mc": mc_suite,
        "ratio": ratio_suite,
    }
    results = []
    for offset, name in enumerate(names):
        runner = runners[name]
        n = cases if cases is not None else defaults[name]
        results.append(runner(cases=n, seed=seed + offset))
    return results
