"""Symmetric separation of finite families and checks of the stability lemmas."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from symsep import _kernels
from symsep.norms import (
    Lp,
    NormDescriptor,
    Sup,
    descriptor_to_json,
    describe,
    norm,
    norm_rows,
    relevant_indices,
)
from symsep.vectors import CoordVector, stack_dense

EXACT_TOL = 1e-12
OPT_TOL = 1e-6


class PreconditionError(ValueError):
    """Inputs do not satisfy the hypotheses of the checked statement."""


@dataclass(frozen=True)
class SeparationReport:
    """A finite family together with its symmetric separation value.

    ``value`` is the minimum over unordered pairs i < j of
    min(||x_i - x_j||, ||x_i + x_j||). ``witness`` is the lexicographically
    smallest (i, j, sign) attaining it, sign -1 meaning the difference.
    """

    points: tuple[CoordVector, ...]
    norm: NormDescriptor
    value: float
    witness: tuple[int, int, int]
    sphere_residual: float
    minus: np.ndarray = field(repr=False, compare=False)
    plus: np.ndarray = field(repr=False, compare=False)

    def flags(self, delta: float) -> dict[str, bool]:
        """Non-strict and strict separation at ``delta`` under both tolerances."""
        out = {}
        for name, tol in (("exact", EXACT_TOL), ("opt", OPT_TOL)):
            out[f"separated_{name}"] = self.value >= delta - tol
            out[f"strict_{name}"] = self.value > delta + tol
        return out

    def pair_rows(self):
        n = len(self.points)
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j, float(self.minus[i, j]), float(self.plus[i, j])

    def to_json(self, include_points: bool = True) -> dict:
        out = {
            "norm": descriptor_to_json(self.norm),
            "norm_label": describe(self.norm),
            "n_points": len(self.points),
            "value": self.value,
            "witness": {"i": self.witness[0], "j": self.witness[1], "sign": self.witness[2]},
            "sphere_residual": self.sphere_residual,
            "pairs": [
                {"i": i, "j": j, "minus": m, "plus": p} for i, j, m, p in self.pair_rows()
            ],
        }
        if include_points:
            out["points"] = [p.to_json() for p in self.points]
        return out

    def to_csv(self, tolerance: float = EXACT_TOL) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "norm_minus", "norm_plus", "sym_dist", f"tolerance={tolerance:g}"])
        for i, j, m, p in self.pair_rows():
            w.writerow([i, j, repr(m), repr(p), repr(min(m, p)), tolerance])
        return buf.getvalue()


def _pair_matrices(P: np.ndarray, d: NormDescriptor) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(d, Lp):
        return _kernels.sym_pairs_lp(P, d.p)
    if isinstance(d, Sup):
        return _kernels.sym_pairs_lp(P, math.inf)
    n = P.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    diff = norm_rows(P[iu] - P[ju], d)
    summ = norm_rows(P[iu] + P[ju], d)
    minus = np.zeros((n, n))
    plus = np.zeros((n, n))
    minus[iu, ju] = diff
    minus[ju, iu] = diff
    plus[iu, ju] = summ
    plus[ju, iu] = summ
    return minus, plus


def symmetric_separation(points, d: NormDescriptor) -> SeparationReport:
    """Exact pairwise scan of min(||x_i - x_j||, ||x_i + x_j||)."""
    points = tuple(points)
    if len(points) < 2:
        raise ValueError("symmetric separation needs at least 2 points")
    n_dim = max([p.max_index for p in points if not p.is_zero()] + [relevant_dim(d), 1])
    P = stack_dense(points, n_dim)
    minus, plus = _pair_matrices(P, d)
    best = (math.inf, (0, 1, -1))
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            for sign, val in ((-1, minus[i, j]), (1, plus[i, j])):
                if val < best[0]:
                    best = (float(val), (i, j, sign))
    norms = norm_rows(P, d)
    residual = float(np.max(np.abs(norms - 1.0)))
    return SeparationReport(points, d, best[0], best[1], residual, minus, plus)


def relevant_dim(d: NormDescriptor) -> int:
    idx = relevant_indices(d)
    return max(idx) if idx else 0


# ---------------------------------------------------------------------------
# Stability lemmas
# ---------------------------------------------------------------------------

def ball_to_sphere(x: CoordVector, y: CoordVector, d: NormDescriptor) -> tuple[float, float]:
    """Return (||x/||x|| - y/||y||||, ||x - y||) for x, y in the ball with ||x - y|| >= 1.

    The normalized distance is never smaller than the raw one.
    """
    if x.is_zero() or y.is_zero():
        raise PreconditionError("x and y must be nonzero")
    nx, ny = norm(x, d), norm(y, d)
    if nx > 1.0 + EXACT_TOL or ny > 1.0 + EXACT_TOL:
        raise PreconditionError(f"points must lie in the unit ball (||x||={nx}, ||y||={ny})")
    raw = norm(x - y, d)
    if raw < 1.0:
        raise PreconditionError(f"||x - y|| = {raw} < 1")
    lhs = norm(x / nx - y / ny, d)
    return lhs, raw


def stupid_bound_check(
    a: CoordVector, b: CoordVector, eps: float, d: NormDescriptor
) -> tuple[float, float]:
    """Return (||a + b||, ||a + b/||b|||| + eps) for 1 - eps <= ||b|| <= 1 + eps."""
    if b.is_zero():
        raise PreconditionError("b must be nonzero")
    nb = norm(b, d)
    if not (1.0 - eps - EXACT_TOL <= nb <= 1.0 + eps + EXACT_TOL):
        raise PreconditionError(f"||b|| = {nb} outside [1 - eps, 1 + eps]")
    return norm(a + b, d), norm(a + b / nb, d) + eps


def strict_convexity_witness(
    x: CoordVector, y: CoordVector, d: NormDescriptor
) -> tuple[CoordVector, float]:
    """Midpoint (x - y)/2 of the segment from x to -y and its distance to the sphere."""
    for name, v in (("x", x), ("y", y)):
        if abs(norm(v, d) - 1.0) > 1e-9:
            raise PreconditionError(f"{name} is not a unit vector")
    if _dependent(x, y):
        raise PreconditionError("x and y are linearly dependent")
    if abs(norm(x - y, d) - 2.0) > 1e-9:
        raise PreconditionError("||x - y|| != 2")
    m = (x - y) * 0.5
    return m, abs(norm(m, d) - 1.0)


def _dependent(x: CoordVector, y: CoordVector) -> bool:
    n = max(x.max_index, y.max_index)
    M = np.vstack([x.to_dense(n), y.to_dense(n)])
    return np.linalg.matrix_rank(M, tol=1e-12) < 2


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def disjoint_block_certificate(q: float, blocks) -> SeparationReport:
    """Separation of disjointly supported l_q-unit blocks; equals 2^(1/q)."""
    blocks = tuple(blocks)
    d = Lp(q)
    seen: set[int] = set()
    for b in blocks:
        if b.is_zero():
            raise PreconditionError("blocks must be nonzero")
        s = set(b.support())
        if s & seen:
            raise PreconditionError("blocks must have pairwise disjoint supports")
        seen |= s
        if abs(norm(b, d) - 1.0) > EXACT_TOL:
            raise PreconditionError(f"block {b!r} does not have l_{q:g} norm 1")
    return symmetric_separation(blocks, d)


def cotype_bound_check(report: SeparationReport, q: float) -> bool:
    """True iff the report's separation is at least 2^(1/q)."""
    if q < 1:
        raise ValueError("q must be at least 1")
    return report.value >= 2.0 ** (1.0 / q) - 1e-9


# ---------------------------------------------------------------------------
# Embedding lemma
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Distortion:
    """Estimated ||T|| * ||T^-1|| on a span: sampled value and refined value."""

    lower: float
    upper: float
    max_ratio: float
    min_ratio: float


def _apply(T: np.ndarray, x: CoordVector) -> CoordVector:
    return CoordVector.from_dense(T @ x.to_dense(T.shape[1]))


def estimate_distortion(
    points, T: np.ndarray, dX: NormDescriptor, dY: NormDescriptor, restarts: int = 64, seed: int = 0
) -> Distortion:
    """Multi-start estimate of max/min of ||Tx||_Y / ||x||_X over span(points).

    Random coefficient vectors give the sampled (lower) estimate; pattern
    search from the best samples refines it to the reported upper end.
    """
    T = np.asarray(T, dtype=float)
    n_in = T.shape[1]
    B = np.array([p.to_dense(n_in) for p in points])  # span basis, rows
    TB = B @ T.T
    if np.linalg.matrix_rank(TB, tol=1e-10) < np.linalg.matrix_rank(B, tol=1e-10):
        raise PreconditionError("T is not injective on the span of the points")
    rng = np.random.default_rng(seed)
    k = B.shape[0]

    def ratios(C):
        num = norm_rows(C @ TB, dY)
        den = norm_rows(C @ B, dX)
        return num / den

    C = np.vstack([np.eye(k), -np.eye(k), rng.standard_normal((restarts, k))])
    r = ratios(C)
    lo_max, lo_min = float(r.max()), float(r.min())

    moves = np.vstack([np.eye(k), -np.eye(k)])

    def refine(c, sign):
        c = c / np.linalg.norm(c)
        best = sign * ratios(c[None, :])[0]
        step = 0.5
        for _ in range(2000):
            if step <= 1e-7:
                break
            cand = c[None, :] + step * moves
            cand /= np.linalg.norm(cand, axis=1)[:, None]
            vals = sign * ratios(cand)
            j = int(np.argmax(vals))
            # the ratio is scale invariant; demand progress beyond rounding
            if vals[j] > best + 1e-14 * abs(best):
                best, c = vals[j], cand[j]
            else:
                step *= 0.5
        return sign * best

    order = np.argsort(r)
    hi_max = max(refine(C[j].copy(), 1.0) for j in order[-3:])
    hi_min = min(refine(C[j].copy(), -1.0) for j in order[:3])
    return Distortion(lo_max / lo_min, hi_max / hi_min, hi_max, hi_min)


def embed_and_renormalize(
    points,
    T: np.ndarray,
    dX: NormDescriptor,
    dY: NormDescriptor,
    eps: float,
    restarts: int = 64,
    seed: int = 0,
) -> SeparationReport:
    """Push a (1+eps)-separated unit family through T and renormalize.

    Requires the estimated distortion of T on the span to be at most
    1 + eps/(2 + eps); the image family is then (1 + eps/2)-separated.
    """
    points = tuple(points)
    T = np.asarray(T, dtype=float)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    for p in points:
        if abs(norm(p, dX) - 1.0) > 1e-9:
            raise PreconditionError("points must be unit vectors of the source norm")
    src = symmetric_separation(points, dX)
    if src.value < 1.0 + eps - 1e-9:
        raise PreconditionError(f"source family is only {src.value}-separated, need {1 + eps}")
    dist = estimate_distortion(points, T, dX, dY, restarts=restarts, seed=seed)
    limit = 1.0 + eps / (2.0 + eps)
    if dist.upper > limit + 1e-12:
        raise PreconditionError(f"distortion {dist.upper} exceeds 1 + eps/(2+eps) = {limit}")
    images = []
    for p in points:
        tp = _apply(T, p)
        images.append(tp / norm(tp, dY))
    return symmetric_separation(images, dY)
