"""Constructive searches for symmetrically separated families.

All procedures work on a finite truncation of the coordinate space and are
deterministic for a fixed :class:`SearchConfig`: every restart draws from
its own generator seeded by ``(seed, restart, salt)``, and reductions break
ties by restart order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from symsep import _kernels
from symsep.norms import (
    Functional,
    Lp,
    NormDescriptor,
    Sup,
    _exact_functional,
    norm,
    norm_rows,
    norming_functional,
)
from symsep.separation import SeparationReport, symmetric_separation
from symsep.vectors import CoordVector, is_block_sequence, stack_dense

_SALT_EXTEND = 11
_SALT_XBOX = 23
_SALT_MAZUR = 37
_SALT_PROJ = 41
_SALT_KOTTMAN = 53


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 0
    restarts: int = 32
    window: int = 8
    max_iter: int = 200
    tol_opt: float = 1e-6
    anneal_t0: float = 0.5
    anneal_cooling: float = 0.97
    anneal_steps: int = 2000
    grid_limit: int = 4096
    jobs: int = 1
    z: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        for name in ("restarts", "window", "max_iter", "anneal_steps", "jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.anneal_cooling <= 1.0):
            raise ValueError("anneal_cooling must lie in (0, 1]")

    def rng(self, restart: int, salt: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, restart, salt]))

    def to_json(self) -> dict:
        out = asdict(self)
        out["z"] = None if self.z is None else [list(p) for p in self.z]
        return out


def _map(cfg: SearchConfig, fn, items):
    if cfg.jobs == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


def _unit_rows(X: np.ndarray, d: NormDescriptor) -> np.ndarray:
    n = norm_rows(X, d)
    return X / n[:, None]


def _row_sym_dists(P: np.ndarray, r: int, y: np.ndarray, d: NormDescriptor) -> np.ndarray:
    if isinstance(d, Lp):
        return _kernels.row_sym_dists_lp(P, r, y, d.p)
    if isinstance(d, Sup):
        return _kernels.row_sym_dists_lp(P, r, y, math.inf)
    minus = norm_rows(y[None, :] - P, d)
    plus = norm_rows(y[None, :] + P, d)
    out = np.minimum(minus, plus)
    if 0 <= r < len(out):
        out[r] = np.inf
    return out


def _dense_functional(v: np.ndarray, d: NormDescriptor) -> np.ndarray:
    """Exact norming functional of a dense vector, as a dense array."""
    if isinstance(d, Lp) and d.p > 1.0:
        nv = _kernels.lp_rows(v[None, :], d.p)[0]
        a = np.abs(v) / nv
        return np.sign(v) * a ** (d.p - 1.0)
    f = _exact_functional(CoordVector.from_dense(v), d)
    return f.to_dense(len(v))


# ---------------------------------------------------------------------------
# Greedy block extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoExtension:
    """Budget-bounded stand-in for 'this family admits no separated extension'."""

    best_value: float
    threshold: float
    window: int
    start: int


def _family_dists(U: np.ndarray, F: np.ndarray, d: NormDescriptor) -> np.ndarray:
    """min_i min(||F_i - u||, ||F_i + u||) for each row u of ``U``."""
    if F.shape[0] == 0:
        return np.full(U.shape[0], np.inf)
    m, n = U.shape
    k = F.shape[0]
    if isinstance(d, (Lp, Sup)):
        p = d.p if isinstance(d, Lp) else math.inf
        out = np.empty(m)
        for r in range(m):
            out[r] = _kernels.row_sym_dists_lp(F, -1, U[r], p).min()
        return out
    diff = (U[:, None, :] - F[None, :, :]).reshape(m * k, n)
    summ = (U[:, None, :] + F[None, :, :]).reshape(m * k, n)
    vals = np.minimum(norm_rows(diff, d), norm_rows(summ, d)).reshape(m, k)
    return vals.min(axis=1)


def _sign_grid(w: int, limit: int) -> np.ndarray:
    rows = []
    for signs in product((0.0, 1.0, -1.0), repeat=w):
        nz = [s for s in signs if s != 0.0]
        if len(nz) < 2 or nz[0] < 0:
            continue
        rows.append(signs)
        if len(rows) >= limit:
            break
    return np.array(rows).reshape(-1, w)


def _hill_climb(objective, c0: np.ndarray, rng, iters: int, step: float, batch: int = 8):
    """Maximize a batched objective by Gaussian pattern search with shrinking steps."""
    c = c0.copy()
    best = objective(c[None, :])[0]
    for _ in range(iters):
        if step < 1e-9:
            break
        cand = c[None, :] + step * rng.standard_normal((batch, len(c)))
        vals = objective(cand)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, c = vals[j], cand[j]
            step *= 1.2
        else:
            step *= 0.7
    return c, best


def greedy_extension(family, threshold: float, d: NormDescriptor, cfg: SearchConfig = SearchConfig()):
    """Find a unit block b after ``family`` with min_i min(||b_i - b||, ||b_i + b||) >= threshold.

    Candidates are tried in a fixed order: unit vectors of the window, then
    normalized sign patterns, then ``cfg.restarts`` random starts improved by
    pattern search. Returns the block or a :class:`NoExtension`.
    """
    family = list(family)
    _check_family(family, d)
    start = family[-1].max_index if family else 0
    W = cfg.window
    n = start + W
    F = stack_dense(family, n) if family else np.zeros((0, n))
    target = threshold - cfg.tol_opt

    def embed(C):
        U = np.zeros((C.shape[0], n))
        U[:, start:] = C
        return U

    def objective(C):
        return _family_dists(_unit_rows(embed(C), d), F, d)

    stages = [np.eye(W)]
    grid = _sign_grid(W, cfg.grid_limit)
    if len(grid):
        stages.append(grid)
    best_val, best_c = -math.inf, None
    for C in stages:
        vals = objective(C)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_c = float(vals[j]), C[j]
        if best_val >= target:
            return _as_block(best_c, start, d)
    for r in range(cfg.restarts):
        rng = cfg.rng(r, _SALT_EXTEND)
        c, val = _hill_climb(objective, rng.standard_normal(W), rng, cfg.max_iter, 0.5)
        if val > best_val:
            best_val, best_c = float(val), c
        if best_val >= target:
            return _as_block(best_c, start, d)
    return NoExtension(best_val, threshold, W, start)


def _as_block(c: np.ndarray, start: int, d: NormDescriptor) -> CoordVector:
    u = np.zeros(start + len(c))
    u[start:] = c
    b = CoordVector.from_dense(u)
    return b / norm(b, d)


def _check_family(family, d) -> None:
    if not family:
        return
    if any(b.is_zero() for b in family):
        raise ValueError("family contains a zero block")
    if not is_block_sequence(family):
        raise ValueError("family is not strictly block ordered")
    for b in family:
        if abs(norm(b, d) - 1.0) > 1e-9:
            raise ValueError("family blocks must be unit vectors")


@dataclass(frozen=True)
class ChainResult:
    blocks: tuple[CoordVector, ...]
    threshold: float
    target_length: int
    report: SeparationReport | None
    stopped: NoExtension | None

    @property
    def certified(self) -> bool:
        if self.report is None:
            return len(self.blocks) >= 1
        return self.report.value >= self.threshold - 1e-6


def greedy_chain(
    threshold: float, d: NormDescriptor, cfg: SearchConfig = SearchConfig(), target_length: int = 10
) -> ChainResult:
    """Extend greedily from the empty family until ``target_length`` or no extension."""
    blocks: list[CoordVector] = []
    stopped = None
    while len(blocks) < target_length:
        nxt = greedy_extension(blocks, threshold, d, cfg)
        if isinstance(nxt, NoExtension):
            stopped = nxt
            break
        blocks.append(nxt)
    report = symmetric_separation(blocks, d) if len(blocks) >= 2 else None
    return ChainResult(tuple(blocks), threshold, target_length, report, stopped)


# ---------------------------------------------------------------------------
# (XBox) construction
# ---------------------------------------------------------------------------

class XBoxFailure(RuntimeError):
    """No unit y in the kernel intersection brought ||w + y|| down to 1 + tol."""

    def __init__(self, step: int, value: float, tol: float):
        super().__init__(f"step {step}: min ||w + y|| = {value!r} exceeds 1 + {tol:g}")
        self.step = step
        self.value = value
        self.tol = tol


@dataclass(frozen=True)
class XBoxTrace:
    dim: int
    z: np.ndarray
    psi: np.ndarray
    ys: tuple[np.ndarray, ...] = ()
    phis: tuple[np.ndarray, ...] = ()
    minima: tuple[float, ...] = ()

    @property
    def deltas(self) -> list[float]:
        return [2.0 ** -(n + 2) for n in range(1, len(self.ys) + 1)]

    def offset(self) -> np.ndarray:
        """z - delta_1 y_1 - ... - delta_n y_n."""
        w = self.z.copy()
        for delta, y in zip(self.deltas, self.ys):
            w = w - delta * y
        return w

    @property
    def xs(self) -> list[np.ndarray]:
        out = []
        w = self.z.copy()
        for n, y in enumerate(self.ys, start=1):
            out.append(w + y)
            w = w - 2.0 ** -(n + 2) * y
        return out

    def points(self) -> list[CoordVector]:
        return [CoordVector.from_dense(x) for x in self.xs]

    def to_json(self) -> dict:
        def cv(a):
            return CoordVector.from_dense(a).to_json()

        return {
            "dim": self.dim,
            "z": cv(self.z),
            "psi": cv(self.psi),
            "ys": [cv(y) for y in self.ys],
            "phis": [cv(f) for f in self.phis],
            "deltas": self.deltas,
            "xs": [cv(x) for x in self.xs],
            "minima": list(self.minima),
        }


def xbox_start(d: NormDescriptor, dim: int, cfg: SearchConfig = SearchConfig()) -> XBoxTrace:
    """Fix z with ||z|| = 3/4 (default (3/4) e_1) and a norming functional psi for it."""
    if cfg.z is None:
        z = CoordVector({1: 1.0})
    else:
        z = CoordVector(cfg.z)
    if z.is_zero() or z.max_index > dim:
        raise ValueError("z must be nonzero and live inside the truncation")
    z = z * (0.75 / norm(z, d))
    psi = norming_functional(z, d).coefficients
    return XBoxTrace(dim, z.to_dense(dim), psi.to_dense(dim))


def xbox_step(trace: XBoxTrace, d: NormDescriptor, cfg: SearchConfig = SearchConfig()) -> XBoxTrace:
    """Append y_{n+1} in ker psi and every ker phi_i with ||w + y_{n+1}|| <= 1 + tol_opt.

    Minimizes ||w + y|| over unit y in the kernel intersection: first over
    the projected unit vectors of the truncation, then by L-BFGS from
    ``cfg.restarts`` random starts in kernel coordinates. Raises
    :class:`XBoxFailure` when the best value stays above 1 + tol_opt.
    """
    D = trace.dim
    G = np.vstack([trace.psi, *trace.phis])
    K = null_space(G)
    if K.shape[1] == 0:
        raise XBoxFailure(len(trace.ys) + 1, math.inf, cfg.tol_opt)
    w = trace.offset()

    def value_of(Y):
        return norm_rows(w[None, :] + _unit_rows(Y, d), d)

    # projected coordinate vectors, lowest index first
    Pe = K @ K.T
    keep = np.linalg.norm(Pe, axis=0) > 1e-9
    cands = Pe[:, keep].T
    best_val, best_y = math.inf, None
    if len(cands):
        vals = value_of(cands)
        j = int(np.argmin(vals))
        best_val, best_y = float(vals[j]), cands[j] / norm_rows(cands[j][None, :], d)[0]

    def fun(c):
        v = K @ c
        s = norm_rows(v[None, :], d)[0]
        y = v / s
        u = w + y
        val = norm_rows(u[None, :], d)[0]
        g1 = _dense_functional(u, d)
        phi_y = _dense_functional(y, d)
        gv = (g1 - phi_y * (y @ g1)) / s
        return val, K.T @ gv

    if best_val > 1.0:
        for r in range(cfg.restarts):
            rng = cfg.rng(r, _SALT_XBOX)
            c0 = rng.standard_normal(K.shape[1])
            res = minimize(fun, c0, jac=True, method="L-BFGS-B", options={"maxiter": cfg.max_iter})
            v = K @ res.x
            y = v / norm_rows(v[None, :], d)[0]
            val = float(norm_rows((w + y)[None, :], d)[0])
            if val < best_val:
                best_val, best_y = val, y
            if best_val <= 1.0:
                break
    step = len(trace.ys) + 1
    if best_y is None or best_val > 1.0 + cfg.tol_opt:
        raise XBoxFailure(step, best_val, cfg.tol_opt)
    phi = _dense_functional(best_y, d)
    return replace(
        trace,
        ys=trace.ys + (best_y,),
        phis=trace.phis + (phi,),
        minima=trace.minima + (best_val,),
    )


def xbox_chain(d: NormDescriptor, dim: int, steps: int, cfg: SearchConfig = SearchConfig()) -> XBoxTrace:
    """Run the construction for ``steps + 1`` vectors y_1..y_{steps+1} (points x_1..x_{steps+1})."""
    trace = xbox_start(d, dim, cfg)
    for _ in range(steps + 1):
        trace = xbox_step(trace, d, cfg)
    return trace


def xbox_identities(trace: XBoxTrace) -> dict:
    """Worst residuals of the proof identities along a trace.

    ``psi_sum``: max |<psi, x_n + x_k> - 2||z|||; ``phi_gap``: max over
    k < n of |<phi_k, x_k - x_n> - (1 + delta_k)|; ``kernel``: max
    |<psi, y_i>| and |<phi_i, y_j>| for j > i; ``phi_unit``: max
    |<phi_i, y_i> - 1|.
    """
    xs = trace.xs
    zn = 0.75
    psi_sum = phi_gap = kernel = phi_unit = 0.0
    for i, y in enumerate(trace.ys):
        kernel = max(kernel, abs(trace.psi @ y))
        phi_unit = max(phi_unit, abs(trace.phis[i] @ y - 1.0))
        for j in range(i + 1, len(trace.ys)):
            kernel = max(kernel, abs(trace.phis[i] @ trace.ys[j]))
    for k in range(len(xs)):
        for n in range(k + 1, len(xs)):
            psi_sum = max(psi_sum, abs(trace.psi @ (xs[n] + xs[k]) - 2 * zn))
            delta_k = 2.0 ** -(k + 3)
            phi_gap = max(phi_gap, abs(trace.phis[k] @ (xs[k] - xs[n]) - (1 + delta_k)))
    return {"psi_sum": psi_sum, "phi_gap": phi_gap, "kernel": kernel, "phi_unit": phi_unit}


# ---------------------------------------------------------------------------
# Mazur cutoff and projection norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MazurCertificate:
    cutoff: int
    worst_ratio: float
    samples: int
    window: int


def _span_samples(k: int, n_random: int, rng) -> np.ndarray:
    rows = list(np.eye(k))
    if k <= 6:
        for signs in product((0.0, 1.0, -1.0), repeat=k):
            nz = [s for s in signs if s != 0.0]
            if len(nz) >= 2 and nz[0] > 0:
                rows.append(np.array(signs))
    rows.extend(rng.standard_normal((n_random, k)))
    return np.array(rows)


def mazur_subspace(E, eps: float, d: NormDescriptor, cfg: SearchConfig = SearchConfig()) -> MazurCertificate:
    """Smallest cutoff N with ||x|| <= (1 + eps)||x + v|| on sampled x in span E, v beyond N.

    For each sampled x the worst v in the next ``cfg.window`` coordinates is
    found by convex minimization of ||x + v||. Cutoffs from max support of E
    up to that plus ``cfg.window`` are tried.
    """
    E = list(E)
    if not E or any(e.is_zero() for e in E):
        raise ValueError("E must be a nonempty list of nonzero vectors")
    N0 = max(e.max_index for e in E)
    rng = cfg.rng(0, _SALT_MAZUR)
    C = _span_samples(len(E), cfg.restarts, rng)
    W = cfg.window
    worst = math.inf
    for N in range(N0, N0 + W + 1):
        n = N + W
        B = stack_dense(E, n)
        X = C @ B
        nx = norm_rows(X, d)
        X = X[nx > 0] / nx[nx > 0][:, None]
        worst = 1.0
        for x in X:
            def fun(v, x=x):
                u = x.copy()
                u[N:] += v
                val = norm_rows(u[None, :], d)[0]
                return val, _dense_functional(u, d)[N:]

            best = 1.0
            for v0 in (np.zeros(W), 0.1 * rng.standard_normal(W)):
                res = minimize(fun, v0, jac=True, method="L-BFGS-B", options={"maxiter": cfg.max_iter})
                best = min(best, float(res.fun))
            worst = max(worst, 1.0 / best)
        if worst <= 1.0 + eps + 1e-9:
            return MazurCertificate(N, worst, len(X), W)
    raise ValueError(f"no cutoff up to {N0 + W} certified (worst ratio {worst})")


def projection_norm(
    blocks, j: int, d: NormDescriptor, cfg: SearchConfig = SearchConfig()
) -> tuple[float, float]:
    """Interval estimate of the norm of the j-th basis projection on span(blocks).

    The lower end is the best ratio ||P_j x|| / ||x|| over grid and random
    samples; the upper end is where pattern-search ascent from the best
    samples converges.
    """
    blocks = list(blocks)
    k = len(blocks)
    if not (1 <= j <= k):
        raise ValueError(f"j must lie in 1..{k}")
    B = stack_dense(blocks)
    if np.linalg.matrix_rank(B, tol=1e-10) < k:
        raise ValueError("blocks are linearly dependent")
    mask = np.zeros(k)
    mask[:j] = 1.0

    def ratio(C):
        num = norm_rows((C * mask) @ B, d)
        den = norm_rows(C @ B, d)
        return num / den

    rng = cfg.rng(0, _SALT_PROJ)
    C = _span_samples(k, cfg.restarts, rng)
    r = ratio(C)
    lo = float(r.max())
    hi = lo
    for idx in np.argsort(-r, kind="stable")[:4]:
        _, val = _hill_climb(ratio, C[idx], rng, cfg.max_iter, 0.3)
        hi = max(hi, float(val))
    return lo, hi


# ---------------------------------------------------------------------------
# Empirical symmetric Kottman constant
# ---------------------------------------------------------------------------

@dataclass
class _AnnealState:
    P: np.ndarray
    S: np.ndarray

    def value(self) -> float:
        n = self.S.shape[0]
        return float(self.S[np.triu_indices(n, k=1)].min())


def _pair_table(P: np.ndarray, d: NormDescriptor) -> np.ndarray:
    n = P.shape[0]
    S = np.full((n, n), np.inf)
    for r in range(n):
        S[r] = _row_sym_dists(P, r, P[r], d)
    return np.minimum(S, S.T)


def _seed_family(kind: str, d: NormDescriptor, dim: int, n: int, rng) -> np.ndarray:
    if kind == "basis" and dim >= n:
        P = np.eye(n, dim)
    elif kind == "staircase" and dim >= n + 1:
        P = np.zeros((n, dim))
        for r in range(n):
            P[r, : r + 1] = 1.0
            P[r, r + 1] = -1.0
    else:
        P = rng.standard_normal((n, dim))
    return _unit_rows(P, d)


def _anneal(P: np.ndarray, d: NormDescriptor, cfg: SearchConfig, rng) -> tuple[float, np.ndarray]:
    n, dim = P.shape
    S = _pair_table(P, d)
    cur = float(S[np.triu_indices(n, k=1)].min())
    best_val, best_P = cur, P.copy()
    T = cfg.anneal_t0
    for t in range(cfg.anneal_steps):
        frac = T / cfg.anneal_t0 if cfg.anneal_t0 > 0 else 0.0
        sigma = 0.3 * math.sqrt(frac) + 0.02 * (1.0 - t / cfg.anneal_steps) + 1e-4
        if rng.random() < 0.5:
            i, j = np.unravel_index(int(np.argmin(S)), S.shape)
            r = int(i if rng.random() < 0.5 else j)
        else:
            r = int(rng.integers(n))
        y = P[r] + sigma * rng.standard_normal(dim)
        y = y / norm_rows(y[None, :], d)[0]
        row = _row_sym_dists(P, r, y, d)
        old_row = S[r].copy()
        S[r] = row
        S[:, r] = row
        new = float(S[np.triu_indices(n, k=1)].min())
        if new >= cur or (T > 0 and rng.random() < math.exp((new - cur) / T)):
            P[r] = y
            cur = new
            if cur > best_val:
                best_val, best_P = cur, P.copy()
        else:
            S[r] = old_row
            S[:, r] = old_row
        T *= cfg.anneal_cooling
    return _polish(best_P, d, cfg, rng)


def _polish(P: np.ndarray, d: NormDescriptor, cfg: SearchConfig, rng) -> tuple[float, np.ndarray]:
    """Greedy max-min ascent: move a row of the worst pair, keep only improvements."""
    P = P.copy()
    n, dim = P.shape
    S = _pair_table(P, d)
    cur = float(S[np.triu_indices(n, k=1)].min())
    step = 0.05
    for _ in range(cfg.max_iter * 4):
        if step < 1e-8:
            break
        i, j = np.unravel_index(int(np.argmin(S)), S.shape)
        improved = False
        for r in (int(i), int(j)):
            y = P[r] + step * rng.standard_normal(dim)
            y = y / norm_rows(y[None, :], d)[0]
            row = _row_sym_dists(P, r, y, d)
            old_row = S[r].copy()
            S[r] = row
            S[:, r] = row
            new = float(S[np.triu_indices(n, k=1)].min())
            if new > cur:
                P[r] = y
                cur = new
                improved = True
                break
            S[r] = old_row
            S[:, r] = old_row
        step = step * 1.1 if improved else step * 0.9
    return cur, P


def empirical_kottman(
    d: NormDescriptor,
    dim: int,
    n_points: int,
    cfg: SearchConfig = SearchConfig(),
    structured_seeds: bool = True,
) -> SeparationReport:
    """Best symmetric separation of ``n_points`` unit vectors in the ``dim``-truncation.

    Restart 0 starts from the unit vector basis and restart 1 from the
    staircase family when ``structured_seeds`` is set; all other restarts
    start from Gaussian families. Each restart anneals and then polishes;
    the best family (ties: lowest restart) is re-certified exactly.
    """
    if n_points < 2:
        raise ValueError("need at least 2 points")
    if dim < 1:
        raise ValueError("dim must be positive")

    def run(r: int):
        rng = cfg.rng(r, _SALT_KOTTMAN)
        kind = "random"
        if structured_seeds and r == 0:
            kind = "basis"
        elif structured_seeds and r == 1:
            kind = "staircase"
        P = _seed_family(kind, d, dim, n_points, rng)
        return _anneal(P, d, cfg, rng)

    results = _map(cfg, run, range(cfg.restarts))
    best_r = max(range(len(results)), key=lambda r: (results[r][0], -r))
    claimed, P = results[best_r]
    family = [CoordVector.from_dense(row) for row in P]
    report = symmetric_separation(family, d)
    if abs(report.value - claimed) > 1e-9:
        raise RuntimeError(f"optimizer value {claimed!r} disagrees with certificate {report.value!r}")
    return report
