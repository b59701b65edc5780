"""Jitted per-round kernels: pairwise matrix build and active-set solve.

The policy loop evaluates these millions of times per experiment, so both
are nopython numba kernels with plain loops.  The linear solves use
hand-rolled Gaussian elimination with partial pivoting (the systems are
(K_A+1) x (K_A+1) with K <= ~80, where LAPACK call overhead dominates).
fastmath stays off so results are bitwise reproducible.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

INV_SQRT_2PI = 0.3989422804014327
_SQRT1_2 = 0.7071067811865476
_Z_SAT = 38.0

# Kernel exit statuses.
OK = 0
SINGULAR = -1

_JITTER_SCALE = 1e-12
_JITTER_RETRIES = 3
_WEIGHT_DUST = 1e-12


@njit(cache=True)
def pairwise_values(means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    """Pairwise expected-max matrix with the diagonal overridden to the means.

    Off-diagonal entry: m_i Phi(z) + m_j Phi(-z) + s phi(z) with
    z = (m_i - m_j)/s and s^2 the summed posterior variances; saturated to
    the larger mean beyond |z| = 38.  Entries are assigned symmetrically,
    so the result is bitwise symmetric.
    """
    k = means.size
    g = np.empty((k, k))
    for i in range(k):
        g[i, i] = means[i]
        vi = stds[i] * stds[i]
        mi = means[i]
        for j in range(i + 1, k):
            mj = means[j]
            s = math.sqrt(vi + stds[j] * stds[j])
            z = (mi - mj) / s
            if z > _Z_SAT:
                val = mi
            elif z < -_Z_SAT:
                val = mj
            else:
                val = (
                    mi * (0.5 * math.erfc(-z * _SQRT1_2)) + mj * (0.5 * math.erfc(z * _SQRT1_2))
                ) + s * (INV_SQRT_2PI * math.exp(-0.5 * z * z))
            g[i, j] = val
            g[j, i] = val
    return g


@njit(cache=True)
def _gauss_solve(a: np.ndarray, b: np.ndarray) -> bool:
    """In-place partial-pivoting elimination; returns False on a zero pivot."""
    n = b.size
    for col in range(n):
        piv = col
        best = abs(a[col, col])
        for r in range(col + 1, n):
            mag = abs(a[r, col])
            if mag > best:
                best = mag
                piv = r
        if best == 0.0:
            return False
        if piv != col:
            for c in range(col, n):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        inv = 1.0 / a[col, col]
        for r in range(col + 1, n):
            f = a[r, col] * inv
            if f != 0.0:
                for c in range(col + 1, n):
                    a[r, c] -= f * a[col, c]
                b[r] -= f * b[col]
    for row in range(n - 1, -1, -1):
        s = b[row]
        for c in range(row + 1, n):
            s -= a[row, c] * b[c]
        b[row] = s / a[row, row]
    return True


@njit(cache=True)
def _solve_bordered(g: np.ndarray, idx: np.ndarray, out: np.ndarray) -> bool:
    """Solve [[G_AA, -1], [1^T, 0]] x = [0, 1] into ``out``.

    On singularity or non-finite output the diagonal of the G block gets
    1e-12 of the matrix scale added, up to 3 retries.
    """
    na = idx.size
    scale = 1.0
    for i in range(na):
        for j in range(na):
            mag = abs(g[idx[i], idx[j]])
            if mag > scale:
                scale = mag
    jitter = 0.0
    for attempt in range(_JITTER_RETRIES + 1):
        m = np.empty((na + 1, na + 1))
        for i in range(na):
            for j in range(na):
                m[i, j] = g[idx[i], idx[j]]
            m[i, i] += jitter
            m[i, na] = -1.0
            m[na, i] = 1.0
        m[na, na] = 0.0
        rhs = np.zeros(na + 1)
        rhs[na] = 1.0
        if _gauss_solve(m, rhs):
            finite = True
            for i in range(na + 1):
                if not math.isfinite(rhs[i]):
                    finite = False
                    break
            if finite:
                for i in range(na + 1):
                    out[i] = rhs[i]
                return True
        jitter = _JITTER_SCALE * scale if jitter == 0.0 else jitter * 2.0
    return False


@njit(cache=True)
def active_set_solve(
    g: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, float, float, float, float, int, bool, int]:
    """Primal-dual active-set maximisation of pi @ G @ pi on the simplex.

    Every arm starts active; each pass solves the bordered equality system,
    then simultaneously drops active arms with negative weight and
    re-activates inactive arms whose gradient exceeds the multiplier by
    more than ``tol``.  On convergence, negative dust in (-1e-12, 0) is
    clamped and the vector renormalised; on hitting the iteration cap all
    negatives are clamped instead and the limit flag is set.

    Returns (pi, lambda, stationarity gap, max dual violation, max primal
    violation, iterations, limit_hit, status).
    """
    k = g.shape[0]
    active = np.ones(k, np.bool_)
    pi = np.full(k, 1.0 / k)
    lam = 0.0
    gpi = np.zeros(k)
    sol = np.empty(k + 1)
    idx = np.empty(k, np.int64)
    limit_hit = True
    iterations = max_iter
    for it in range(1, max_iter + 1):
        na = 0
        for i in range(k):
            if active[i]:
                idx[na] = i
                na += 1
        if not _solve_bordered(g, idx[:na], sol[: na + 1]):
            return pi, lam, np.inf, np.inf, np.inf, it, True, SINGULAR
        for i in range(k):
            pi[i] = 0.0
        for a in range(na):
            pi[idx[a]] = sol[a]
        lam = sol[na]
        for i in range(k):
            acc = 0.0
            for j in range(k):
                acc += g[i, j] * pi[j]
            gpi[i] = acc
        bad = False
        for i in range(k):
            if active[i]:
                if pi[i] < 0.0:
                    bad = True
                    active[i] = False
            elif gpi[i] > lam + tol:
                bad = True
                active[i] = True
        if not bad:
            limit_hit = False
            iterations = it
            break

    total = 0.0
    for i in range(k):
        if limit_hit:
            if pi[i] < 0.0:
                pi[i] = 0.0
        elif -_WEIGHT_DUST < pi[i] < 0.0:
            pi[i] = 0.0
        total += pi[i]
    for i in range(k):
        pi[i] /= total

    stationarity = 0.0
    dual = -np.inf
    any_inactive = False
    sum_pi = 0.0
    min_pi = 0.0
    for i in range(k):
        acc = 0.0
        for j in range(k):
            acc += g[i, j] * pi[j]
        resid = acc - lam
        if active[i]:
            if abs(resid) > stationarity:
                stationarity = abs(resid)
        else:
            any_inactive = True
            if resid > dual:
                dual = resid
        sum_pi += pi[i]
        if pi[i] < min_pi:
            min_pi = pi[i]
    if not any_inactive:
        dual = 0.0
    primal = abs(sum_pi - 1.0)
    if -min_pi > primal:
        primal = -min_pi
    return pi, lam, stationarity, dual, primal, iterations, limit_hit, OK
