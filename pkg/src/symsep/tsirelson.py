"""Tsirelson norm (Figiel-Johnson construction) on finitely supported vectors.

The norm is the fixed point of

    ||x||_0     = ||x||_inf
    ||x||_{m+1} = max(||x||_m, 1/2 * max sum_j ||E_j x||_m)

where the inner max runs over admissible families ``k <= E_1 < ... < E_k``.
The engine in :func:`tsirelson_norm` only enumerates contiguous windows of
the support (the norm is 1-unconditional and coordinatewise monotone, so
intervals suffice) and tabulates every window per level. The oracle in
:func:`tsirelson_oracle` enumerates arbitrary subset families with no
caching and shares no code with the engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from symsep import _kernels
from symsep.vectors import CoordVector

ORACLE_MAX_SUPPORT = 12


@dataclass(frozen=True)
class AdmissiblePartition:
    """Successive index intervals E_1 < ... < E_k with k <= min E_1."""

    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ivs = self.intervals
        if not ivs:
            raise ValueError("an admissible partition needs at least one interval")
        for a, b in ivs:
            if a < 1 or a > b:
                raise ValueError(f"bad interval [{a}, {b}]")
        for (_, b1), (a2, _) in zip(ivs, ivs[1:]):
            if not b1 < a2:
                raise ValueError("intervals must be strictly increasing and disjoint")
        if len(ivs) > ivs[0][0]:
            raise ValueError(f"{len(ivs)} sets but min E_1 = {ivs[0][0]}")

    @property
    def k(self) -> int:
        return len(self.intervals)


class TsirelsonMemo:
    """Per-evaluation table of window values, one slice per iteration level.

    ``value(s, e, level)`` is the level-``level`` norm of the vector
    restricted to the support positions ``s..e`` (0-based, inclusive).
    """

    def __init__(self, x: CoordVector):
        self.vector = x
        idx, vals = x.arrays()
        self.indices = idx
        self.weights = np.abs(vals)
        if len(idx) == 0:
            self.table = np.zeros((1, 0, 0))
        else:
            self.table = _kernels.tsirelson_history(idx, self.weights)

    @property
    def levels(self) -> int:
        return self.table.shape[0] - 1

    def value(self, s: int, e: int, level: int | None = None) -> float:
        if level is None:
            level = self.levels
        return float(self.table[level, s, e])

    def root(self, level: int | None = None) -> float:
        if len(self.indices) == 0:
            return 0.0
        return self.value(0, len(self.indices) - 1, level)

    def certificate(self) -> dict:
        """Attaining tree: leaves are sup coordinates, nodes are admissible splits."""
        if len(self.indices) == 0:
            return {"kind": "zero", "value": 0.0}
        return self._node(0, len(self.indices) - 1)

    def _node(self, s: int, e: int) -> dict:
        f = self.table[-1]
        target = f[s, e]
        w = self.weights
        top = int(s + np.argmax(w[s : e + 1]))
        if w[top] >= target:
            return {"kind": "sup", "value": float(target), "index": int(self.indices[top])}
        best = None
        for p in range(s, e + 1):
            kmax = min(int(self.indices[p]), e - p + 1)
            groups = self._best_groups(p, e, kmax)
            total = sum(f[a, b] for a, b in groups)
            if best is None or total > best[0]:
                best = (total, groups)
        total, groups = best
        if 0.5 * total < target - 1e-12 * max(1.0, target):
            raise RuntimeError("Tsirelson table is not at a fixed point")
        return {
            "kind": "split",
            "value": float(target),
            "k": len(groups),
            "intervals": [[int(self.indices[a]), int(self.indices[b])] for a, b in groups],
            "children": [self._node(a, b) for a, b in groups],
        }

    def _best_groups(self, p: int, e: int, kmax: int) -> list[tuple[int, int]]:
        f = self.table[-1]
        # best[j][K] = (value, cut list) for covering j..e with at most K groups
        n = e - p + 1
        memo: dict[tuple[int, int], tuple[float, list]] = {}

        def go(j: int, K: int):
            key = (j, K)
            if key in memo:
                return memo[key]
            res = (f[j, e], [(j, e)])
            if K > 1:
                for q in range(j, e):
                    sub = go(q + 1, K - 1)
                    cand = f[j, q] + sub[0]
                    if cand > res[0]:
                        res = (cand, [(j, q)] + sub[1])
            memo[key] = res
            return res

        return go(p, min(kmax, n))[1]


def tsirelson_norm(x: CoordVector) -> float:
    """Exact Tsirelson norm of a finitely supported vector."""
    if x.is_zero():
        return 0.0
    return TsirelsonMemo(x).root()


def tsirelson_value(idx: np.ndarray, absvals: np.ndarray) -> float:
    """Norm from raw sorted indices and absolute values (dense fast path)."""
    n = len(idx)
    if n == 0:
        return 0.0
    if n == 1:
        return float(absvals[0])
    hist = _kernels.tsirelson_history(idx, absvals)
    return float(hist[-1, 0, n - 1])


def tsirelson_certificate(x: CoordVector) -> dict:
    return TsirelsonMemo(x).certificate()


def certificate_partition(cert: dict) -> AdmissiblePartition | None:
    """Top-level admissible partition of a certificate (None for a sup leaf)."""
    if cert.get("kind") != "split":
        return None
    return AdmissiblePartition(tuple(tuple(iv) for iv in cert["intervals"]))


def tsirelson_norming_functional(x: CoordVector) -> CoordVector:
    """Dual-unit functional f with <f, x> = ||x||_T, read off the certificate.

    A sup leaf contributes sign(x_i) e_i; a split contributes one half of
    the sum of its children's functionals. Every functional built this way
    is bounded by the norm everywhere, so its dual norm is exactly 1.
    """
    if x.is_zero():
        raise ValueError("zero vector has no norming functional")
    cert = tsirelson_certificate(x)
    acc: dict[int, float] = {}

    def walk(node: dict, weight: float) -> None:
        if node["kind"] == "sup":
            i = node["index"]
            acc[i] = acc.get(i, 0.0) + weight * (1.0 if x[i] >= 0 else -1.0)
        else:
            for child in node["children"]:
                walk(child, 0.5 * weight)

    walk(cert, 1.0)
    return CoordVector(acc)


# ---------------------------------------------------------------------------
# Independent oracle
# ---------------------------------------------------------------------------

def tsirelson_oracle(x: CoordVector) -> float:
    """Brute-force Tsirelson norm over arbitrary admissible subset families.

    Uses the implicit equation directly: the norm of a coordinate set is the
    larger of its sup and half the best sum over families of at least two
    successive nonempty subsets with k <= min E_1. Each subset is strictly
    smaller, so the recursion is well founded. No intermediate results are
    cached; a branch is only skipped when even its l1 mass cannot beat the
    best value found so far.
    """
    if len(x) > ORACLE_MAX_SUPPORT:
        raise ValueError(f"oracle supports at most {ORACLE_MAX_SUPPORT} nonzero entries")
    items = tuple((i, abs(v)) for i, v in x.items())
    return _oracle(items)


def _oracle(items: tuple[tuple[int, float], ...]) -> float:
    if not items:
        return 0.0
    best = max(v for _, v in items)
    n = len(items)
    if n < 2 or 0.5 * sum(v for _, v in items) <= best:
        return best
    # singleton families {i_s}, ..., {i_(s+k-1)} with k <= i_s are admissible
    for s in range(n):
        k = min(items[s][0], n - s)
        if k >= 2:
            best = max(best, 0.5 * sum(v for _, v in items[s : s + k]))
    for size in range(n, 1, -1):
        for chosen in combinations(items, size):
            kmax = min(chosen[0][0], size)
            if kmax < 2:
                continue
            mass = [0.0] * (size + 1)
            for t in range(size - 1, -1, -1):
                mass[t] = mass[t + 1] + chosen[t][1]
            if 0.5 * mass[0] <= best:
                continue
            best = _families(chosen, mass, 0, 0, kmax, 0.0, best)
    return best


def _families(chosen, mass, start, used, kmax, acc, best):
    size = len(chosen)
    if start == size:
        if used >= 2 and 0.5 * acc > best:
            return 0.5 * acc
        return best
    if used == kmax or 0.5 * (acc + mass[start]) <= best:
        return best
    for end in range(start + 1, size + 1):
        if used == 0 and end == size:
            continue  # a single set is never admissible progress
        best = _families(chosen, mass, end, used + 1, kmax, acc + _oracle(chosen[start:end]), best)
    return best


# ---------------------------------------------------------------------------
# l1 spreading model certificate
# ---------------------------------------------------------------------------

def l1_spreading_certificate(indices, signs, delta: float) -> tuple[bool, float]:
    """Check (1/k) ||sum_i signs_i e_{indices_i}||_T >= delta.

    Returns ``(passed, value)``.
    """
    indices = [int(i) for i in indices]
    signs = [int(s) for s in signs]
    if not indices:
        raise ValueError("need at least one index")
    if len(signs) != len(indices):
        raise ValueError("one sign per index")
    if any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    if any(a >= b for a, b in zip(indices, indices[1:])) or indices[0] < 1:
        raise ValueError("indices must be positive and strictly increasing")
    k = len(indices)
    value = tsirelson_norm(CoordVector(zip(indices, map(float, signs)))) / k
    return value >= delta - 1e-12, value
