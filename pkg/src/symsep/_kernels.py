"""Hot numeric kernels.

Each kernel exists as a plain Python/numpy function (suffix ``_py``) and,
when numba is importable, as an ``@njit`` compiled twin (suffix ``_nb``).
The public names bound at the bottom of the module pick one of the two:
setting ``SYMSEP_DISABLE_NUMBA=1`` in the environment before import forces
the pure-numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("SYMSEP_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# Tsirelson interval tables
# ---------------------------------------------------------------------------

def tsirelson_history_py(idx, vals):
    """Level-by-level Tsirelson values of every contiguous support window.

    ``idx`` holds the sorted coordinate indices (1-based) and ``vals`` the
    absolute values there. ``hist[m, s, e]`` is the level-``m`` value of the
    vector restricted to support positions ``s..e``; level 0 is the sup
    norm. Each level replaces every window by the better of its previous
    value and one half of the best admissible split, where a split whose
    first used position is ``p`` may have at most ``idx[p]`` consecutive
    groups. All windows read the previous level. Iteration stops at the
    first level that changes nothing; the last slice is the fixed point.
    """
    n = vals.shape[0]
    hist = np.zeros((n + 2, n, n))
    for s in range(n):
        m = 0.0
        for e in range(s, n):
            if vals[e] > m:
                m = vals[e]
            hist[0, s, e] = m
    split = np.zeros((n + 1, n + 1))
    level = 0
    while True:
        f = hist[level]
        g = hist[level + 1]
        g[:, :] = f
        changed = False
        for e in range(n):
            # split[j, K]: best sum over at most K consecutive groups covering j..e
            for j in range(e, -1, -1):
                length = e - j + 1
                split[j, 1] = f[j, e]
                for K in range(2, length + 1):
                    best = split[j, K - 1]
                    for q in range(j, e):
                        rest = K - 1
                        if rest > e - q:
                            rest = e - q
                        cand = f[j, q] + split[q + 1, rest]
                        if cand > best:
                            best = cand
                    split[j, K] = best
            run = 0.0
            for s in range(e, -1, -1):
                K = idx[s]
                if K > e - s + 1:
                    K = e - s + 1
                if split[s, K] > run:
                    run = split[s, K]
                cand = 0.5 * run
                if cand > g[s, e]:
                    g[s, e] = cand
                    changed = True
        level += 1
        if not changed or level == n + 1:
            break
    return hist[: level + 1]


# ---------------------------------------------------------------------------
# Dense row norms and pairwise symmetric distances (lp / sup)
# ---------------------------------------------------------------------------

def lp_rows_py(X, p):
    """lp norm of each row of ``X`` (``p = inf`` gives the sup norm)."""
    A = np.abs(X)
    if A.shape[1] == 0:
        return np.zeros(A.shape[0])
    if np.isinf(p):
        return A.max(axis=1)
    if p == 1.0:
        return A.sum(axis=1)
    m = A.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    s = ((A / safe[:, None]) ** p).sum(axis=1)
    return np.where(m > 0, m * s ** (1.0 / p), 0.0)


def _lp_row_nb(a, p):
    n = a.shape[0]
    m = 0.0
    for k in range(n):
        v = abs(a[k])
        if v > m:
            m = v
    if m == 0.0 or np.isinf(p):
        return m
    s = 0.0
    if p == 1.0:
        for k in range(n):
            s += abs(a[k])
        return s
    for k in range(n):
        s += (abs(a[k]) / m) ** p
    return m * s ** (1.0 / p)


def _lp_rows_nb(X, p):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        out[r] = _lp_row_nb(X[r], p)
    return out


def sym_pairs_lp_py(P, p):
    """Matrices of ||P_i - P_j|| and ||P_i + P_j|| for all row pairs."""
    D = P[:, None, :] - P[None, :, :]
    S = P[:, None, :] + P[None, :, :]
    n, d = P.shape
    minus = lp_rows_py(D.reshape(n * n, d), p).reshape(n, n)
    plus = lp_rows_py(S.reshape(n * n, d), p).reshape(n, n)
    return minus, plus


def _sym_pairs_lp_nb(P, p):
    n, d = P.shape
    minus = np.zeros((n, n))
    plus = np.zeros((n, n))
    buf_m = np.empty(d)
    buf_p = np.empty(d)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(d):
                buf_m[k] = P[i, k] - P[j, k]
                buf_p[k] = P[i, k] + P[j, k]
            a = _lp_row_nb(buf_m, p)
            b = _lp_row_nb(buf_p, p)
            minus[i, j] = a
            minus[j, i] = a
            plus[i, j] = b
            plus[j, i] = b
        plus[i, i] = 2.0 * _lp_row_nb(P[i], p)
    return minus, plus


def row_sym_dists_lp_py(P, r, y, p):
    """min(||y - P_j||, ||y + P_j||) for every row j of ``P`` (row ``r`` gives +inf)."""
    minus = lp_rows_py(y[None, :] - P, p)
    plus = lp_rows_py(y[None, :] + P, p)
    out = np.minimum(minus, plus)
    out[r] = np.inf
    return out


def _row_sym_dists_lp_nb(P, r, y, p):
    n, d = P.shape
    out = np.empty(n)
    buf_m = np.empty(d)
    buf_p = np.empty(d)
    for j in range(n):
        if j == r:
            out[j] = np.inf
            continue
        for k in range(d):
            buf_m[k] = y[k] - P[j, k]
            buf_p[k] = y[k] + P[j, k]
        a = _lp_row_nb(buf_m, p)
        b = _lp_row_nb(buf_p, p)
        out[j] = a if a < b else b
    return out


if HAVE_NUMBA:
    tsirelson_history_nb = njit(cache=True)(tsirelson_history_py)
    _lp_row_nb = njit(cache=True)(_lp_row_nb)
    lp_rows_nb = njit(cache=True)(_lp_rows_nb)
    sym_pairs_lp_nb = njit(cache=True)(_sym_pairs_lp_nb)
    row_sym_dists_lp_nb = njit(cache=True)(_row_sym_dists_lp_nb)
else:  # pragma: no cover
    tsirelson_history_nb = tsirelson_history_py
    lp_rows_nb = lp_rows_py
    sym_pairs_lp_nb = sym_pairs_lp_py
    row_sym_dists_lp_nb = row_sym_dists_lp_py


if USE_NUMBA:
    tsirelson_history = tsirelson_history_nb
    lp_rows = lp_rows_nb
    sym_pairs_lp = sym_pairs_lp_nb
    row_sym_dists_lp = row_sym_dists_lp_nb
else:
    tsirelson_history = tsirelson_history_py
    lp_rows = lp_rows_py
    sym_pairs_lp = sym_pairs_lp_py
    row_sym_dists_lp = row_sym_dists_lp_py


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
