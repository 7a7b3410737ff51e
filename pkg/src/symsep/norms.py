"""Norm descriptors, evaluation, norming functionals and dual norms.

A descriptor is a small immutable value (``Lp(1.5)``, ``Sup()``,
``Tsirelson()``, the two renormings built from a biorthogonal system, or
``MaxOf`` of other descriptors). :func:`norm` evaluates one on a
:class:`~symsep.vectors.CoordVector`; :func:`norm_rows` evaluates it on the
rows of a dense array whose column ``j`` is coordinate ``j + 1``.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.optimize import linprog

from symsep import _kernels
from symsep.tsirelson import tsirelson_norm, tsirelson_norming_functional, tsirelson_value
from symsep.vectors import CoordVector

BIORTHOGONAL_TOL = 1e-12
AUERBACH_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """A numerical search did not certify its answer within budget."""


# ---------------------------------------------------------------------------
# Biorthogonal systems and functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiorthogonalSystem:
    """Pairs (x_i, f_i) with <f_i, x_j> = 1 if i == j else 0.

    ``auerbach=True`` additionally asserts ||x_i|| = ||f_i||* = 1 under the
    base norm of whichever renorming uses the system; that part is checked
    when the renorming is built.
    """

    pairs: tuple[tuple[CoordVector, CoordVector], ...]
    auerbach: bool = False

    def __post_init__(self):
        pairs = tuple((x, f) for x, f in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            raise ValueError("a biorthogonal system needs at least one pair")
        for i, (_, fi) in enumerate(pairs):
            for j, (xj, _) in enumerate(pairs):
                want = 1.0 if i == j else 0.0
                if abs(fi.dot(xj) - want) > BIORTHOGONAL_TOL:
                    raise ValueError(f"<f_{i + 1}, x_{j + 1}> = {fi.dot(xj)!r}, expected {want}")

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def vectors(self) -> list[CoordVector]:
        return [x for x, _ in self.pairs]

    @property
    def functionals(self) -> list[CoordVector]:
        return [f for _, f in self.pairs]

    @classmethod
    def canonical(cls, n: int, start: int = 1) -> "BiorthogonalSystem":
        """e_i paired with e_i for i = start .. start+n-1 (Auerbach under any lattice norm)."""
        pairs = tuple((CoordVector({i: 1.0}), CoordVector({i: 1.0})) for i in range(start, start + n))
        return cls(pairs, auerbach=True)

    def indices(self) -> set[int]:
        out: set[int] = set()
        for x, f in self.pairs:
            out.update(x.support())
            out.update(f.support())
        return out

    def coefficients(self, x: CoordVector) -> np.ndarray:
        return np.array([f.dot(x) for _, f in self.pairs])

    def to_json(self) -> dict:
        return {
            "pairs": [{"x": x.to_json(), "f": f.to_json()} for x, f in self.pairs],
            "auerbach": self.auerbach,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BiorthogonalSystem":
        pairs = tuple(
            (CoordVector.from_json(p["x"]), CoordVector.from_json(p["f"])) for p in obj["pairs"]
        )
        return cls(pairs, auerbach=bool(obj.get("auerbach", False)))


@dataclass(frozen=True)
class Functional:
    """Linear functional acting by the dot product, with its dual norm."""

    coefficients: CoordVector
    dual_norm_value: float

    def __call__(self, x: CoordVector) -> float:
        return self.coefficients.dot(x)

    def dense(self, n: int) -> np.ndarray:
        return self.coefficients.to_dense(n)


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lp:
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (1.0 <= p < math.inf):
            raise ValueError(f"Lp needs 1 <= p < inf, got {self.p}")
        object.__setattr__(self, "p", p)

    kind = "lp"


@dataclass(frozen=True)
class Sup:
    kind = "sup"


@dataclass(frozen=True)
class Tsirelson:
    kind = "tsirelson"


@dataclass(frozen=True)
class AuerbachRenorm:
    """max(||x||_base, nu(x)) with nu(x) = max_{i != k} |<f_i,x>| + |<f_k,x>|."""

    base: "NormDescriptor"
    system: BiorthogonalSystem

    kind = "auerbach"

    def __post_init__(self):
        _check_renorm(self.base, self.system)


@dataclass(frozen=True)
class PhiRenorm:
    """max(||x||_base, max_{i != k} Phi(|<f_i,x>|, |<f_k,x>|)) for the eps-norm Phi."""

    base: "NormDescriptor"
    system: BiorthogonalSystem
    eps: float

    kind = "phi"

    def __post_init__(self):
        eps = float(self.eps)
        if not (0.0 < eps < 1.0):
            raise ValueError(f"PhiRenorm needs 0 < eps < 1, got {self.eps}")
        object.__setattr__(self, "eps", eps)
        _check_renorm(self.base, self.system)


@dataclass(frozen=True)
class MaxOf:
    parts: tuple = field(default=())

    kind = "max"

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("MaxOf needs at least one part")
        object.__setattr__(self, "parts", parts)


NormDescriptor = Union[Lp, Sup, Tsirelson, AuerbachRenorm, PhiRenorm, MaxOf]
DESCRIPTOR_TYPES = (Lp, Sup, Tsirelson, AuerbachRenorm, PhiRenorm, MaxOf)


def _check_renorm(base, system: BiorthogonalSystem) -> None:
    if not isinstance(base, DESCRIPTOR_TYPES):
        raise TypeError(f"base must be a norm descriptor, got {type(base).__name__}")
    if len(system) < 2:
        raise ValueError("renorming needs a system with at least 2 pairs")
    if system.auerbach:
        for i, (x, f) in enumerate(system.pairs, 1):
            nx = norm(x, base)
            nf = dual_norm(f, base)
            if abs(nx - 1.0) > AUERBACH_TOL or abs(nf - 1.0) > AUERBACH_TOL:
                raise ValueError(f"pair {i} is not Auerbach: ||x||={nx!r}, ||f||*={nf!r}")


def describe(d: NormDescriptor) -> str:
    if isinstance(d, Lp):
        return f"lp:{d.p:g}"
    if isinstance(d, (AuerbachRenorm, PhiRenorm)):
        extra = f",eps={d.eps:g}" if isinstance(d, PhiRenorm) else ""
        return f"{d.kind}({describe(d.base)},{len(d.system)} pairs{extra})"
    if isinstance(d, MaxOf):
        return "max(" + ",".join(describe(p) for p in d.parts) + ")"
    return d.kind


def descriptor_to_json(d: NormDescriptor) -> dict:
    if isinstance(d, Lp):
        return {"kind": "lp", "p": d.p}
    if isinstance(d, (Sup, Tsirelson)):
        return {"kind": d.kind}
    if isinstance(d, AuerbachRenorm):
        return {"kind": "auerbach", "base": descriptor_to_json(d.base), "system": d.system.to_json()}
    if isinstance(d, PhiRenorm):
        return {
            "kind": "phi",
            "base": descriptor_to_json(d.base),
            "system": d.system.to_json(),
            "eps": d.eps,
        }
    if isinstance(d, MaxOf):
        return {"kind": "max", "parts": [descriptor_to_json(p) for p in d.parts]}
    raise TypeError(f"not a norm descriptor: {d!r}")


def descriptor_from_json(obj: dict) -> NormDescriptor:
    kind = obj.get("kind")
    if kind == "lp":
        return Lp(obj["p"])
    if kind == "sup":
        return Sup()
    if kind == "tsirelson":
        return Tsirelson()
    if kind == "auerbach":
        return AuerbachRenorm(descriptor_from_json(obj["base"]), BiorthogonalSystem.from_json(obj["system"]))
    if kind == "phi":
        return PhiRenorm(
            descriptor_from_json(obj["base"]), BiorthogonalSystem.from_json(obj["system"]), obj["eps"]
        )
    if kind == "max":
        return MaxOf(tuple(descriptor_from_json(p) for p in obj["parts"]))
    raise ValueError(f"unknown norm kind {kind!r}")


def _load_system_file(path: str):
    obj = json.loads(Path(path).read_text())
    if "kind" in obj:
        d = descriptor_from_json(obj)
        if not isinstance(d, (AuerbachRenorm, PhiRenorm)):
            raise ValueError(f"{path} does not hold a renorming")
        return d.base, d.system
    if "base" not in obj:
        raise ValueError(f"{path}: system file needs a 'base' norm")
    base = obj["base"]
    base = parse_norm(base) if isinstance(base, str) else descriptor_from_json(base)
    return base, BiorthogonalSystem.from_json(obj)


def parse_norm(spec: str) -> NormDescriptor:
    """Parse a CLI norm spec: ``lp:P``, ``sup``, ``tsirelson``, ``auerbach:FILE``, ``phi:FILE:EPS``."""
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    head = head.lower()
    if head == "lp":
        return Lp(float(rest))
    if head == "sup" and not rest:
        return Sup()
    if head == "tsirelson" and not rest:
        return Tsirelson()
    if head == "auerbach" and rest:
        base, system = _load_system_file(rest)
        return AuerbachRenorm(base, system)
    if head == "phi" and rest:
        path, _, eps = rest.rpartition(":")
        if not path:
            raise ValueError("phi spec is phi:FILE:EPS")
        base, system = _load_system_file(path)
        return PhiRenorm(base, system, float(eps))
    raise ValueError(f"cannot parse norm spec {spec!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def phi(alpha: float, beta: float, eps: float) -> float:
    """max(||(alpha, beta)||_inf, (1 + eps) |alpha + beta| / 2)."""
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return max(abs(alpha), abs(beta), (1.0 + eps) * abs(alpha + beta) / 2.0)


def _top_two(a: np.ndarray) -> tuple[int, int]:
    """Positions of the two largest |a|, lowest position first on ties."""
    order = np.argsort(-np.abs(a), kind="stable")
    return int(order[0]), int(order[1])


def auerbach_renorm_nu(x: CoordVector, system: BiorthogonalSystem) -> float:
    """max over unordered pairs i != k of |<f_i, x>| + |<f_k, x>|."""
    if len(system) < 2:
        raise ValueError("nu needs at least 2 pairs")
    a = np.abs(system.coefficients(x))
    i, k = _top_two(a)
    return float(a[i] + a[k])


def phi_renorm_nu(x: CoordVector, system: BiorthogonalSystem, eps: float) -> float:
    if len(system) < 2:
        raise ValueError("nu needs at least 2 pairs")
    a = np.abs(system.coefficients(x))
    i, k = _top_two(a)
    return phi(float(a[i]), float(a[k]), eps)


def norm(x: CoordVector, d: NormDescriptor) -> float:
    """Evaluate ||x||_d."""
    if isinstance(d, Lp):
        if x.is_zero():
            return 0.0
        return float(_kernels.lp_rows(np.array([x.values()]), d.p)[0])
    if isinstance(d, Sup):
        return max((abs(v) for v in x.values()), default=0.0)
    if isinstance(d, Tsirelson):
        return tsirelson_norm(x)
    if isinstance(d, AuerbachRenorm):
        return max(norm(x, d.base), auerbach_renorm_nu(x, d.system))
    if isinstance(d, PhiRenorm):
        return max(norm(x, d.base), phi_renorm_nu(x, d.system, d.eps))
    if isinstance(d, MaxOf):
        return max(norm(x, p) for p in d.parts)
    raise TypeError(f"not a norm descriptor: {d!r}")


@functools.lru_cache(maxsize=256)
def _functional_matrix(system: BiorthogonalSystem, n: int) -> np.ndarray:
    return np.array([f.to_dense(n) for f in system.functionals])


def norm_rows(X: np.ndarray, d: NormDescriptor) -> np.ndarray:
    """||row||_d for each row of a dense array (column j is coordinate j+1)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(d, Lp):
        return _kernels.lp_rows(X, d.p)
    if isinstance(d, Sup):
        return _kernels.lp_rows(X, math.inf)
    if isinstance(d, Tsirelson):
        out = np.empty(X.shape[0])
        for r, row in enumerate(X):
            nz = np.flatnonzero(row)
            out[r] = tsirelson_value((nz + 1).astype(np.int64), np.abs(row[nz]))
        return out
    if isinstance(d, (AuerbachRenorm, PhiRenorm)):
        F = _functional_matrix(d.system, X.shape[1])
        A = np.abs(X @ F.T)
        A.sort(axis=1)
        top1, top2 = A[:, -1], A[:, -2]
        if isinstance(d, AuerbachRenorm):
            nu = top1 + top2
        else:
            nu = np.maximum(top1, (1.0 + d.eps) * (top1 + top2) / 2.0)
        return np.maximum(norm_rows(X, d.base), nu)
    if isinstance(d, MaxOf):
        return np.max([norm_rows(X, p) for p in d.parts], axis=0)
    raise TypeError(f"not a norm descriptor: {d!r}")


def is_lattice(d: NormDescriptor) -> bool:
    """True when |x| <= |y| coordinatewise implies ||x|| <= ||y||."""
    if isinstance(d, (Lp, Sup, Tsirelson)):
        return True
    if isinstance(d, (AuerbachRenorm, PhiRenorm)):
        canonical = all(
            len(x) == 1 and len(f) == 1 and x.support() == f.support() and x.values()[0] > 0
            for x, f in d.system.pairs
        )
        return canonical and is_lattice(d.base)
    if isinstance(d, MaxOf):
        return all(is_lattice(p) for p in d.parts)
    return False


def relevant_indices(d: NormDescriptor) -> set[int]:
    """Coordinates that enter a descriptor's definition beyond the vector itself."""
    if isinstance(d, (AuerbachRenorm, PhiRenorm)):
        return d.system.indices() | relevant_indices(d.base)
    if isinstance(d, MaxOf):
        out: set[int] = set()
        for p in d.parts:
            out |= relevant_indices(p)
        return out
    return set()


# ---------------------------------------------------------------------------
# Norming functionals
# ---------------------------------------------------------------------------

def _sign(v: float) -> float:
    return -1.0 if v < 0 else 1.0


def _exact_functional(x: CoordVector, d: NormDescriptor) -> CoordVector:
    """A subgradient of ``d`` at ``x`` built from the active piece of the norm."""
    if isinstance(d, Lp):
        idx, vals = x.arrays()
        if d.p == 1.0:
            return CoordVector(zip(idx.tolist(), np.sign(vals).tolist()))
        nx = norm(x, d)
        a = np.abs(vals) / nx
        coef = np.sign(vals) * a ** (d.p - 1.0)
        return CoordVector(zip(idx.tolist(), coef.tolist()))
    if isinstance(d, Sup):
        vals = np.abs(np.asarray(x.values()))
        pos = int(np.argmax(vals))
        i = x.support()[pos]
        return CoordVector({i: _sign(x[i])})
    if isinstance(d, Tsirelson):
        return tsirelson_norming_functional(x)
    if isinstance(d, (AuerbachRenorm, PhiRenorm)):
        base_val = norm(x, d.base)
        a = d.system.coefficients(x)
        i, k = _top_two(a)
        fi, fk = d.system.functionals[i], d.system.functionals[k]
        si, sk = _sign(a[i]), _sign(a[k])
        if isinstance(d, AuerbachRenorm):
            nu = abs(a[i]) + abs(a[k])
            piece = si * fi + sk * fk
        else:
            pair_sum = (1.0 + d.eps) * (abs(a[i]) + abs(a[k])) / 2.0
            if abs(a[i]) >= pair_sum:
                nu, piece = abs(a[i]), si * fi
            else:
                nu, piece = pair_sum, (1.0 + d.eps) / 2.0 * (si * fi + sk * fk)
        if base_val >= nu:
            return _exact_functional(x, d.base)
        return piece
    if isinstance(d, MaxOf):
        vals = [norm(x, p) for p in d.parts]
        return _exact_functional(x, d.parts[int(np.argmax(vals))])
    raise TypeError(f"not a norm descriptor: {d!r}")


def _numeric_functional(x: CoordVector, d: NormDescriptor, step: float = 1e-6) -> CoordVector:
    """Central finite-difference gradient of the norm, rescaled so <f, x> = ||x||."""
    dom = sorted(set(x.support()) | relevant_indices(d))
    base = x.to_dense(max(dom))
    n = len(base)
    X = np.repeat(base[None, :], 2 * len(dom), axis=0)
    for t, i in enumerate(dom):
        X[2 * t, i - 1] += step
        X[2 * t + 1, i - 1] -= step
    vals = norm_rows(X, d)
    grad = (vals[0::2] - vals[1::2]) / (2.0 * step)
    g = CoordVector(zip(dom, grad.tolist()))
    gx = g.dot(x)
    if gx <= 0:
        raise ConvergenceError("finite-difference gradient is not a norming direction")
    return g * (norm(x, d) / gx)


def norming_functional(x: CoordVector, d: NormDescriptor, method: str = "auto") -> Functional:
    """Dual-unit functional f with <f, x> = ||x||_d.

    ``method="auto"`` uses closed forms for lp and sup and the active piece
    of the norm for the composite kinds (both exact). ``method="numeric"``
    uses a central finite-difference gradient and certifies it afterwards,
    raising :class:`ConvergenceError` when either identity fails.
    """
    if x.is_zero():
        raise ValueError("zero vector has no norming functional")
    if method == "auto":
        return Functional(_exact_functional(x, d), 1.0)
    if method != "numeric":
        raise ValueError(f"unknown method {method!r}")
    f = _numeric_functional(x, d)
    nx = norm(x, d)
    if abs(f.dot(x) - nx) > 1e-9 * max(1.0, nx):
        raise ConvergenceError("numeric functional does not norm x")
    dn = dual_norm(f, d)
    if abs(dn - 1.0) > 1e-6:
        raise ConvergenceError(f"numeric functional has dual norm {dn!r}")
    return Functional(f, dn)


# ---------------------------------------------------------------------------
# Dual norms
# ---------------------------------------------------------------------------

def dual_norm_bracket(
    f: CoordVector, d: NormDescriptor, tol: float = 1e-10, max_iter: int = 2000
) -> tuple[float, float, bool]:
    """Lower and upper bounds for max <f, x> over ||x||_d <= 1.

    Kelley cutting planes: an LP over the box [-1, 1]^m (valid since every
    descriptor here dominates the sup norm) is tightened with the exact
    norming functional of each LP solution. The LP value is an upper bound;
    the normalized LP point gives a lower bound. The search domain is the
    support of ``f`` plus every coordinate the descriptor itself refers to.
    """
    dom = sorted(set(f.support()) | relevant_indices(d))
    if f.is_zero():
        return 0.0, 0.0, True
    c = np.array([f[i] for i in dom])
    rows: list[np.ndarray] = []
    lo, hi = 0.0, math.inf
    for _ in range(max_iter):
        res = linprog(
            -c,
            A_ub=np.array(rows) if rows else None,
            b_ub=np.ones(len(rows)) if rows else None,
            bounds=[(-1.0, 1.0)] * len(dom),
            method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        if res.status != 0:
            raise ConvergenceError(f"LP failed: {res.message}")
        x = res.x
        hi = min(hi, float(c @ x))
        xv = CoordVector(zip(dom, x.tolist()))
        nx = norm(xv, d)
        if nx > 0:
            lo = max(lo, float(c @ x) / nx)
        if hi - lo <= tol * max(1.0, hi):
            return lo, hi, True
        w = _exact_functional(xv, d)
        rows.append(np.array([w[i] for i in dom]))
    return lo, hi, False


def dual_norm(f: CoordVector, d: NormDescriptor) -> float:
    """Dual norm of ``f``: closed forms for lp and sup, cutting planes otherwise."""
    if isinstance(d, Lp):
        if f.is_zero():
            return 0.0
        if d.p == 1.0:
            return max(abs(v) for v in f.values())
        q = d.p / (d.p - 1.0)
        return float(_kernels.lp_rows(np.array([f.values()]), q)[0])
    if isinstance(d, Sup):
        return float(sum(abs(v) for v in f.values()))
    lo, hi, ok = dual_norm_bracket(f, d)
    if not ok:
        raise ConvergenceError(f"dual norm bracket [{lo!r}, {hi!r}] did not close")
    return lo
