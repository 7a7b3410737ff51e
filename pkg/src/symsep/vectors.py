"""Finitely supported coordinate vectors over the indices 1, 2, 3, ...

Everything in the package is expressed in terms of :class:`CoordVector`.
Indices are 1-based so that ``basis(1)`` is the first unit vector.
Stored entries are never exactly zero; no tolerance is applied when
dropping zeros, so support computations are exact.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping

import numpy as np


class CoordVector:
    """Immutable sparse real vector with positive integer indices."""

    __slots__ = ("_idx", "_val", "_hash")

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        acc: dict[int, float] = {}
        for i, v in items:
            i = int(i)
            if i < 1:
                raise ValueError(f"indices must be positive integers, got {i}")
            acc[i] = acc.get(i, 0.0) + float(v)
        keys = sorted(k for k, v in acc.items() if v != 0.0)
        self._idx = tuple(keys)
        self._val = tuple(acc[k] for k in keys)
        self._hash = None

    @classmethod
    def _raw(cls, idx: tuple[int, ...], val: tuple[float, ...]) -> "CoordVector":
        obj = cls.__new__(cls)
        obj._idx = idx
        obj._val = val
        obj._hash = None
        return obj

    @classmethod
    def from_dense(cls, arr, offset: int = 1) -> "CoordVector":
        """Build from a dense array whose position 0 is index ``offset``."""
        arr = np.asarray(arr, dtype=float)
        nz = np.flatnonzero(arr)
        return cls._raw(tuple(int(k) + offset for k in nz), tuple(float(arr[k]) for k in nz))

    # -- accessors ---------------------------------------------------------
    def support(self) -> tuple[int, ...]:
        return self._idx

    def values(self) -> tuple[float, ...]:
        return self._val

    def items(self):
        return zip(self._idx, self._val)

    def __getitem__(self, i: int) -> float:
        lo, hi = 0, len(self._idx)
        while lo < hi:
            mid = (lo + hi) // 2
            if self._idx[mid] < i:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self._idx) and self._idx[lo] == i:
            return self._val[lo]
        return 0.0

    def __len__(self) -> int:
        return len(self._idx)

    def is_zero(self) -> bool:
        return not self._idx

    @property
    def min_index(self) -> int:
        if not self._idx:
            raise ValueError("zero vector has empty support")
        return self._idx[0]

    @property
    def max_index(self) -> int:
        if not self._idx:
            raise ValueError("zero vector has empty support")
        return self._idx[-1]

    def to_dense(self, n: int | None = None) -> np.ndarray:
        """Dense array of length ``n`` (default: max index) with slot k holding index k+1."""
        if n is None:
            n = self._idx[-1] if self._idx else 0
        out = np.zeros(n)
        for i, v in zip(self._idx, self._val):
            if i <= n:
                out[i - 1] = v
        return out

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self._idx, dtype=np.int64), np.asarray(self._val, dtype=np.float64)

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "CoordVector") -> "CoordVector":
        if not isinstance(other, CoordVector):
            return NotImplemented
        return add(self, other)

    def __neg__(self) -> "CoordVector":
        return CoordVector._raw(self._idx, tuple(-v for v in self._val))

    def __sub__(self, other: "CoordVector") -> "CoordVector":
        if not isinstance(other, CoordVector):
            return NotImplemented
        return add(self, -other)

    def __mul__(self, c: float) -> "CoordVector":
        c = float(c)
        if c == 0.0:
            return CoordVector()
        return CoordVector(zip(self._idx, (c * v for v in self._val)))

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "CoordVector":
        return self * (1.0 / float(c))

    def dot(self, other: "CoordVector") -> float:
        a, b = (self, other) if len(self) <= len(other) else (other, self)
        return float(sum(v * b[i] for i, v in a.items()))

    def abs(self) -> "CoordVector":
        return CoordVector._raw(self._idx, tuple(abs(v) for v in self._val))

    def restrict(self, lo: int, hi: int) -> "CoordVector":
        return restrict(self, (lo, hi))

    # -- identity ----------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, CoordVector):
            return NotImplemented
        return self._idx == other._idx and self._val == other._val

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._idx, self._val))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {v!r}" for i, v in self.items())
        return f"CoordVector({{{body}}})"

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict[str, float]:
        return {str(i): v for i, v in self.items()}

    @classmethod
    def from_json(cls, obj) -> "CoordVector":
        """Parse ``{"index": value, ...}``; keys must be distinct positive decimals."""
        if isinstance(obj, str):
            pairs = json.loads(obj, object_pairs_hook=list)
        elif isinstance(obj, Mapping):
            pairs = list(obj.items())
        else:
            pairs = list(obj)
        seen: set[int] = set()
        out = []
        for key, value in pairs:
            key = str(key)
            if not key.isdigit():
                raise ValueError(f"vector index {key!r} is not a decimal integer")
            i = int(key)
            if i < 1:
                raise ValueError(f"vector index {i} is not positive")
            if i in seen:
                raise ValueError(f"duplicate vector index {i}")
            seen.add(i)
            out.append((i, float(value)))
        return cls(out)


def add(a: CoordVector, b: CoordVector) -> CoordVector:
    """Coordinatewise sum; entries that cancel to exactly 0.0 are dropped."""
    acc = dict(a.items())
    for i, v in b.items():
        acc[i] = acc.get(i, 0.0) + v
    return CoordVector(acc)


def restrict(x: CoordVector, interval: tuple[int, int]) -> CoordVector:
    """Keep the entries of ``x`` whose index lies in the closed interval."""
    lo, hi = interval
    if lo < 1 or lo > hi:
        raise ValueError(f"invalid index interval [{lo}, {hi}]")
    idx, val = [], []
    for i, v in x.items():
        if lo <= i <= hi:
            idx.append(i)
            val.append(v)
    return CoordVector._raw(tuple(idx), tuple(val))


def basis(n: int, scale: float = 1.0) -> CoordVector:
    """The unit vector e_n (times ``scale``)."""
    return CoordVector({n: scale})


def staircase_c0(n: int) -> CoordVector:
    """e_1 + ... + e_n - e_{n+1}: unit vectors that are symmetrically 2-separated in sup norm."""
    if n < 1:
        raise ValueError("n must be at least 1")
    entries = {k: 1.0 for k in range(1, n + 1)}
    entries[n + 1] = -1.0
    return CoordVector(entries)


def strictly_before(b1: CoordVector, b2: CoordVector) -> bool:
    """Block order: every index of ``b1`` is below every index of ``b2``."""
    if b1.is_zero() or b2.is_zero():
        return False
    return b1.max_index < b2.min_index


def is_block_sequence(blocks) -> bool:
    return all(strictly_before(a, b) for a, b in zip(blocks, blocks[1:]))


def stack_dense(vectors, n: int | None = None) -> np.ndarray:
    """Rows are the dense forms of ``vectors`` over indices 1..n."""
    if n is None:
        n = max((v.max_index for v in vectors if not v.is_zero()), default=0)
    out = np.zeros((len(vectors), n))
    for r, v in enumerate(vectors):
        for i, val in v.items():
            out[r, i - 1] = val
    return out
