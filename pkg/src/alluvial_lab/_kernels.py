"""Hot numeric loops, compiled with numba when available.

Every kernel has a pure-numpy twin. Setting ``ALLUVIAL_NO_NUMBA=1`` in the
environment (read at import time) selects the numpy path, which is also used
automatically when numba cannot be imported.
"""
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("ALLUVIAL_NO_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)


def _jit(f):
    if not HAS_NUMBA:
        return f
    return njit(cache=True, nogil=True)(f)


# ---------------------------------------------------------------------------
# flow crossings


def _crossings_sorted(gap, src, tgt, max_pos):
    # rows sorted by (gap, src, tgt); Fenwick tree over target positions
    n = gap.shape[0]
    tree = np.zeros(max_pos + 2, dtype=np.int64)
    total = 0
    start = 0
    while start < n:
        g = gap[start]
        end = start
        while end < n and gap[end] == g:
            end += 1
        for i in range(max_pos + 2):
            tree[i] = 0
        inserted = 0
        i = start
        while i < end:
            j = i
            while j < end and src[j] == src[i]:
                j += 1
            # strictly smaller source already inserted: count those with larger target
            for r in range(i, j):
                k = tgt[r] + 1
                le = 0
                while k > 0:
                    le += tree[k]
                    k -= k & (-k)
                total += inserted - le
            for r in range(i, j):
                k = tgt[r] + 1
                while k < max_pos + 2:
                    tree[k] += 1
                    k += k & (-k)
                inserted += 1
            i = j
        start = end
    return total


_crossings_sorted_jit = _jit(_crossings_sorted)


def crossings_numba(gap, src, tgt):
    gap = np.asarray(gap, dtype=np.int64)
    src = np.asarray(src, dtype=np.int64)
    tgt = np.asarray(tgt, dtype=np.int64)
    if gap.size < 2:
        return 0
    order = np.lexsort((tgt, src, gap))
    max_pos = int(tgt.max())
    return int(_crossings_sorted_jit(gap[order], src[order], tgt[order], max_pos))


def crossings_numpy(gap, src, tgt):
    gap = np.asarray(gap, dtype=np.int64)
    src = np.asarray(src, dtype=np.int64)
    tgt = np.asarray(tgt, dtype=np.int64)
    total = 0
    for g in np.unique(gap):
        m = gap == g
        s, t = src[m], tgt[m]
        inv = (s[:, None] - s[None, :]) * (t[:, None] - t[None, :]) < 0
        total += int(inv.sum()) // 2
    return total


def count_gap_crossings(gap, src, tgt):
    """Number of flow pairs in the same gap whose endpoint orders invert."""
    if USE_NUMBA:
        return crossings_numba(gap, src, tgt)
    return crossings_numpy(gap, src, tgt)


# ---------------------------------------------------------------------------
# gaussian naive bayes joint log-likelihood


def _joint_log_likelihood(X, means, variances, log_priors):
    n, p = X.shape
    k = means.shape[0]
    out = np.empty((n, k))
    log2pi = np.log(2.0 * np.pi)
    for c in range(k):
        norm = 0.0
        for j in range(p):
            norm += log2pi + np.log(variances[c, j])
        for i in range(n):
            acc = 0.0
            for j in range(p):
                d = X[i, j] - means[c, j]
                acc += d * d / variances[c, j]
            out[i, c] = log_priors[c] - 0.5 * (norm + acc)
    return out


_joint_log_likelihood_jit = _jit(_joint_log_likelihood)


def joint_log_likelihood_numba(X, means, variances, log_priors):
    return _joint_log_likelihood_jit(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(means, dtype=np.float64),
        np.ascontiguousarray(variances, dtype=np.float64),
        np.ascontiguousarray(log_priors, dtype=np.float64),
    )


def joint_log_likelihood_numpy(X, means, variances, log_priors):
    X = np.asarray(X, dtype=np.float64)
    norm = np.log(2.0 * np.pi * variances).sum(axis=1)
    sq = ((X[:, None, :] - means[None, :, :]) ** 2 / variances[None, :, :]).sum(axis=2)
    return np.asarray(log_priors)[None, :] - 0.5 * (norm[None, :] + sq)


def joint_log_likelihood(X, means, variances, log_priors):
    """log p(class) + sum_j log N(x_j | mean, var) for every row and class."""
    if USE_NUMBA:
        return joint_log_likelihood_numba(X, means, variances, log_priors)
    return joint_log_likelihood_numpy(X, means, variances, log_priors)
