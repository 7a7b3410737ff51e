"""Experiment runner and command line interface.

Every subcommand is turned into an :class:`ExperimentConfig` and handed to
:func:`run`, which returns a :class:`RunRecord`. The payload part of a
record is a pure function of the config, so reruns can be diffed byte for
byte; timestamps live outside it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from symsep import __version__
from symsep.norms import (
    AuerbachRenorm,
    BiorthogonalSystem,
    Lp,
    NormDescriptor,
    PhiRenorm,
    Sup,
    Tsirelson,
    descriptor_from_json,
    descriptor_to_json,
    describe,
    dual_norm,
    norm,
    norming_functional,
    parse_norm,
)
from symsep.search import (
    SearchConfig,
    XBoxFailure,
    empirical_kottman,
    greedy_chain,
    xbox_chain,
    xbox_identities,
)
from symsep.separation import (
    EXACT_TOL,
    PreconditionError,
    ball_to_sphere,
    embed_and_renormalize,
    stupid_bound_check,
    symmetric_separation,
)
from symsep.tsirelson import tsirelson_certificate, tsirelson_norm, tsirelson_oracle
from symsep.vectors import CoordVector, basis, staircase_c0

SCHEMA_VERSION = 1
TASKS = (
    "separation-check",
    "chain",
    "kottman",
    "xbox",
    "tsirelson-eval",
    "renorm-demo",
    "lemma-suite",
)
_SEARCH_KEYS = {f.name for f in fields(SearchConfig)} - {"seed", "jobs", "z"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config and record types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    norm: NormDescriptor
    task: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "norm": descriptor_to_json(self.norm),
            "task": self.task,
            "params": self.params,
            "seed": self.seed,
            "output": self.output,
            "jobs": self.jobs,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        allowed = {"schema_version", "name", "norm", "task", "params", "seed", "output", "jobs"}
        unknown = set(obj) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
        for key in ("name", "norm", "task"):
            if key not in obj:
                raise ConfigError(f"missing config field {key!r}")
        nd = obj["norm"]
        nd = parse_norm(nd) if isinstance(nd, str) else descriptor_from_json(nd)
        return cls(
            name=obj["name"],
            norm=nd,
            task=obj["task"],
            params=dict(obj.get("params", {})),
            seed=int(obj.get("seed", 0)),
            output=obj.get("output"),
            jobs=int(obj.get("jobs", 1)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_json(json.loads(text))

    def hash(self) -> str:
        body = self.to_json()
        body.pop("output")
        body.pop("jobs")
        canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class Assertion:
    name: str
    value: float
    bound: float
    op: str  # one of ">=", "<=", "=="
    tolerance: float

    @property
    def passed(self) -> bool:
        if self.op == ">=":
            return self.value >= self.bound - self.tolerance
        if self.op == "<=":
            return self.value <= self.bound + self.tolerance
        return abs(self.value - self.bound) <= self.tolerance

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": _num(self.value),
            "op": self.op,
            "bound": _num(self.bound),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class RunRecord:
    config: ExperimentConfig
    payload: dict
    assertions: list[Assertion]
    started: float
    finished: float
    tables: dict[str, str] = field(default_factory=dict)
    plots: dict[str, str] = field(default_factory=dict)
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def payload_json(self) -> str:
        body = {"payload": self.payload, "assertions": [a.to_json() for a in self.assertions]}
        return json.dumps(body, sort_keys=True, indent=2)

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "config_hash": self.config.hash(),
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "passed": self.passed,
            "assertions": [a.to_json() for a in self.assertions],
            "payload": self.payload,
        }

    def write(self, directory: str) -> list[str]:
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output path {directory!r} is not writable: {exc}") from exc
        if not os.access(directory, os.W_OK):
            raise ConfigError(f"output path {directory!r} is not writable")
        written = []

        def put(name, text):
            path = os.path.join(directory, name)
            with open(path, "w") as fh:
                fh.write(text)
            written.append(path)

        put("config.json", self.config.dumps() + "\n")
        put("record.json", json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n")
        put("payload.json", self.payload_json() + "\n")
        for name, text in sorted(self.tables.items()):
            put(f"{name}.csv", text)
        for name, text in sorted(self.plots.items()):
            put(f"{name}.svg", text)
        return written


def _num(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(c) if isinstance(c, float) else str(c) for c in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG plots
# ---------------------------------------------------------------------------

def svg_line_plot(xs, ys, title: str, xlabel: str, ylabel: str, hline: float | None = None) -> str:
    """Standalone SVG polyline plot with axes, ticks and an optional reference line."""
    W, H, L, R, T, B = 480, 320, 60, 20, 36, 44
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    lo_y = min(ys + ([hline] if hline is not None else []))
    hi_y = max(ys + ([hline] if hline is not None else []))
    if hi_y - lo_y < 1e-9:
        lo_y, hi_y = lo_y - 0.5, hi_y + 0.5
    pad = 0.05 * (hi_y - lo_y)
    lo_y, hi_y = lo_y - pad, hi_y + pad
    lo_x, hi_x = min(xs), max(xs)
    if hi_x == lo_x:
        lo_x, hi_x = lo_x - 1, hi_x + 1

    def px(x):
        return L + (x - lo_x) / (hi_x - lo_x) * (W - L - R)

    def py(y):
        return H - B - (y - lo_y) / (hi_y - lo_y) * (H - T - B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{_esc(title)}</text>',
        f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
        f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>',
    ]
    for k in range(5):
        yv = lo_y + k * (hi_y - lo_y) / 4
        out.append(
            f'<text x="{L - 6}" y="{py(yv) + 4:.1f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{yv:.4g}</text>'
        )
    for xv in sorted(set(xs)):
        out.append(
            f'<text x="{px(xv):.1f}" y="{H - B + 14}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="10">{xv:g}</text>'
        )
    out.append(
        f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-family="sans-serif" font-size="12">{_esc(xlabel)}</text>'
    )
    out.append(
        f'<text x="14" y="{H / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {H / 2})">{_esc(ylabel)}</text>'
    )
    if hline is not None:
        out.append(
            f'<line x1="{L}" y1="{py(hline):.1f}" x2="{W - R}" y2="{py(hline):.1f}" '
            f'stroke="gray" stroke-dasharray="4 3"/>'
        )
    pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="steelblue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------

def _check_params(params: dict, allowed: set[str], task: str) -> None:
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"task {task} does not accept params {sorted(unknown)}")


def _search_cfg(cfg: ExperimentConfig, **overrides) -> SearchConfig:
    kw = {k: cfg.params[k] for k in _SEARCH_KEYS if k in cfg.params}
    kw.update(overrides)
    return SearchConfig(seed=cfg.seed, jobs=cfg.jobs, **kw)


def _family_from_params(params: dict) -> list[CoordVector]:
    if "points" in params:
        return [CoordVector.from_json(p) for p in params["points"]]
    fam = params.get("family", "basis")
    n = int(params.get("n", 10))
    if fam == "basis":
        return [basis(i) for i in range(1, n + 1)]
    if fam == "staircase":
        return [staircase_c0(i) for i in range(1, n + 1)]
    raise ConfigError(f"unknown family {fam!r}")


def _prefix_curve(points, d):
    xs, ys = [], []
    for m in range(2, len(points) + 1):
        xs.append(m)
        ys.append(symmetric_separation(points[:m], d).value)
    return xs, ys


def task_separation_check(cfg: ExperimentConfig):
    p = cfg.params
    _check_params(p, {"points", "family", "n", "expect", "threshold", "tol"}, cfg.task)
    tol = float(p.get("tol", EXACT_TOL))
    points = _family_from_params(p)
    rep = symmetric_separation(points, cfg.norm)
    asserts = []
    if "expect" in p:
        asserts.append(Assertion("separation", rep.value, float(p["expect"]), "==", tol))
    if "threshold" in p:
        asserts.append(Assertion("separation", rep.value, float(p["threshold"]), ">=", tol))
    asserts.append(Assertion("sphere_residual", rep.sphere_residual, 0.0, "<=", 1e-9))
    xs, ys = _prefix_curve(points, cfg.norm)
    plots = {
        "separation_vs_size": svg_line_plot(
            xs, ys, f"separation, {describe(cfg.norm)}", "family size", "symmetric separation"
        )
    }
    return rep.to_json(), asserts, {"pairs": rep.to_csv(tol)}, plots


def task_chain(cfg: ExperimentConfig):
    p = cfg.params
    _check_params(p, {"threshold", "length"} | _SEARCH_KEYS, cfg.task)
    threshold = float(p["threshold"])
    length = int(p.get("length", 6))
    scfg = _search_cfg(cfg)
    res = greedy_chain(threshold, cfg.norm, scfg, target_length=length)
    payload = {
        "norm": descriptor_to_json(cfg.norm),
        "search": scfg.to_json(),
        "threshold": threshold,
        "target_length": length,
        "length": len(res.blocks),
        "blocks": [b.to_json() for b in res.blocks],
        "separation": None if res.report is None else res.report.value,
        "stopped": None
        if res.stopped is None
        else {
            "best_value": _num(res.stopped.best_value),
            "window": res.stopped.window,
            "start": res.stopped.start,
        },
    }
    asserts = [Assertion("length", len(res.blocks), length, ">=", 0.0)]
    if res.report is not None:
        asserts.append(Assertion("separation", res.report.value, threshold, ">=", scfg.tol_opt))
    xs, ys = _prefix_curve(list(res.blocks), cfg.norm)
    tables = {
        "chain": _csv(
            ["n_blocks", "separation", "threshold", f"tolerance={scfg.tol_opt:g}"],
            [(m, v, threshold, scfg.tol_opt) for m, v in zip(xs, ys)],
        )
    }
    plots = {}
    if xs:
        plots["separation_vs_size"] = svg_line_plot(
            xs, ys, f"greedy chain, {describe(cfg.norm)}", "family size", "symmetric separation", threshold
        )
    return payload, asserts, tables, plots


def task_kottman(cfg: ExperimentConfig):
    p = cfg.params
    _check_params(p, {"dim", "points", "lower", "upper", "structured_seeds"} | _SEARCH_KEYS, cfg.task)
    dims = p.get("dim", 8)
    dims = [int(d) for d in (dims if isinstance(dims, list) else [dims])]
    n_points = int(p.get("points", 8))
    scfg = _search_cfg(cfg)
    rows, results, asserts = [], [], []
    for dim in dims:
        rep = empirical_kottman(cfg.norm, dim, n_points, scfg, bool(p.get("structured_seeds", True)))
        results.append({"dim": dim, "n_points": n_points, **rep.to_json()})
        rows.append((dim, n_points, rep.value, rep.sphere_residual, EXACT_TOL))
        asserts.append(Assertion(f"sphere_residual[dim={dim}]", rep.sphere_residual, 0.0, "<=", 1e-9))
        if "lower" in p:
            asserts.append(Assertion(f"value[dim={dim}]", rep.value, float(p["lower"]), ">=", 0.0))
        if "upper" in p:
            asserts.append(Assertion(f"value[dim={dim}]", rep.value, float(p["upper"]), "<=", 1e-9))
    payload = {"norm": descriptor_to_json(cfg.norm), "search": scfg.to_json(), "results": results}
    tables = {"kottman": _csv(["dim", "n_points", "value", "sphere_residual", "tolerance"], rows)}
    plots = {
        "value_vs_dim": svg_line_plot(
            dims, [r[2] for r in rows], f"empirical K^s, {describe(cfg.norm)}", "dimension", "separation"
        )
    }
    return payload, asserts, tables, plots


def task_xbox(cfg: ExperimentConfig):
    p = cfg.params
    _check_params(p, {"dim", "steps", "z"} | _SEARCH_KEYS, cfg.task)
    dim = int(p.get("dim", 64))
    steps = int(p.get("steps", 5))
    z = None if p.get("z") is None else tuple(CoordVector.from_json(p["z"]).items())
    scfg = _search_cfg(cfg, z=z)
    tol = max(scfg.tol_opt, 1e-4)
    try:
        trace = xbox_chain(cfg.norm, dim, steps, scfg)
    except XBoxFailure as exc:
        payload = {
            "norm": descriptor_to_json(cfg.norm),
            "search": scfg.to_json(),
            "failed_step": exc.step,
            "best_value": _num(exc.value),
        }
        return payload, [Assertion("xbox_min", exc.value, 1.0, "<=", scfg.tol_opt)], {}, {}
    xs = [CoordVector.from_dense(x) for x in trace.xs]
    zn = norm(CoordVector.from_dense(trace.z), cfg.norm)
    rows, asserts = [], []
    for k in range(len(xs)):
        for n in range(k + 1, len(xs)):
            s = norm(xs[n] + xs[k], cfg.norm)
            m = norm(xs[k] - xs[n], cfg.norm)
            bound = 1.0 + 2.0 ** -(k + 3)
            rows.append((k + 1, n + 1, s, 2 * zn, m, bound, tol))
            asserts.append(Assertion(f"sum[{k + 1},{n + 1}]", s, 2 * zn, ">=", tol))
            asserts.append(Assertion(f"diff[{k + 1},{n + 1}]", m, bound, ">=", tol))
    ident = xbox_identities(trace)
    for key, val in sorted(ident.items()):
        asserts.append(Assertion(f"identity:{key}", float(val), 0.0, "<=", 1e-9))
    payload = {
        "norm": descriptor_to_json(cfg.norm),
        "search": scfg.to_json(),
        "trace": trace.to_json(),
        "identities": {k: float(v) for k, v in ident.items()},
    }
    tables = {
        "xbox_pairs": _csv(["k", "n", "norm_sum", "bound_sum", "norm_diff", "bound_diff", "tolerance"], rows)
    }
    plots = {
        "minima_vs_step": svg_line_plot(
            list(range(1, len(trace.minima) + 1)),
            list(trace.minima),
            f"min ||w + y||, {describe(cfg.norm)}",
            "step",
            "norm",
            1.0,
        )
    }
    return payload, asserts, tables, plots


def task_tsirelson_eval(cfg: ExperimentConfig):
    p = cfg.params
    _check_params(p, {"vector", "certificate", "oracle"}, cfg.task)
    if not isinstance(cfg.norm, Tsirelson):
        raise ConfigError("tsirelson-eval needs the tsirelson norm")
    x = CoordVector.from_json(p["vector"])
    val = tsirelson_norm(x)
    payload = {"vector": x.to_json(), "norm": val}
    asserts = []
    if p.get("certificate", False):
        payload["certificate"] = tsirelson_certificate(x)
    if p.get("oracle", False):
        o = tsirelson_oracle(x)
        payload["oracle"] = o
        asserts.append(Assertion("oracle_agreement", val, o, "==", 0.0))
    return payload, asserts, {}, {}


def _renorm_pairs(d):
    return d.system.vectors


def task_renorm_demo(cfg: ExperimentConfig):
    p = cfg.params
    _check_params(p, {"random", "tol"}, cfg.task)
    d = cfg.norm
    if not isinstance(d, (AuerbachRenorm, PhiRenorm)):
        raise ConfigError("renorm-demo needs an auerbach or phi renorm")
    tol = float(p.get("tol", EXACT_TOL))
    xs = _renorm_pairs(d)
    rows, asserts = [], []
    target = 2.0 if isinstance(d, AuerbachRenorm) else 1.0 + d.eps
    op = "==" if isinstance(d, AuerbachRenorm) else ">="
    for i, x in enumerate(xs):
        v = norm(x, d)
        rows.append((i + 1, i + 1, "self", v, 1.0, tol))
        asserts.append(Assertion(f"unit[{i + 1}]", v, 1.0, "==", tol))
        for j in range(i + 1, len(xs)):
            for sign, label in ((1.0, "plus"), (-1.0, "minus")):
                v = norm(x + xs[j] * sign, d)
                rows.append((i + 1, j + 1, label, v, target, tol))
                asserts.append(Assertion(f"{label}[{i + 1},{j + 1}]", v, target, op, tol))
    payload = {"norm": descriptor_to_json(d), "pairs": [list(r[:5]) for r in rows]}
    if isinstance(d, PhiRenorm):
        rng = np.random.default_rng(cfg.seed)
        n = max(x.max_index for x in xs) + 2
        worst = 0.0
        for _ in range(int(p.get("random", 1000))):
            v = CoordVector.from_dense(rng.standard_normal(n))
            worst = max(worst, norm(v, d) / norm(v, d.base))
        payload["max_ratio_to_base"] = worst
        asserts.append(Assertion("ratio_to_base", worst, 1.0 + d.eps, "<=", tol))
    tables = {"renorm": _csv(["i", "j", "kind", "value", "target", "tolerance"], rows)}
    return payload, asserts, tables, {}


# lemma suite -----------------------------------------------------------------

def _suite_norms() -> list[NormDescriptor]:
    l2 = Lp(2.0)
    sysm = BiorthogonalSystem.canonical(4)
    return [
        Lp(1.0),
        Lp(1.5),
        l2,
        Lp(4.0),
        Sup(),
        Tsirelson(),
        AuerbachRenorm(l2, sysm),
        PhiRenorm(l2, sysm, 0.25),
    ]


def _rand_vec(rng, n: int) -> CoordVector:
    v = rng.standard_normal(n)
    v[rng.random(n) < 0.3] = 0.0
    if not v.any():
        v[int(rng.integers(n))] = 1.0
    return CoordVector.from_dense(v)


def _trial_ball(rng, d) -> bool | None:
    n = 6
    for _ in range(50):
        x, y = _rand_vec(rng, n), _rand_vec(rng, n)
        x = x * (rng.uniform(0.3, 1.0) / norm(x, d))
        y = y * (rng.uniform(0.3, 1.0) / norm(y, d))
        if norm(x - y, d) >= 1.0:
            lhs, raw = ball_to_sphere(x, y, d)
            return lhs < raw - 1e-12 * max(1.0, raw)
    return None


def _trial_stupid(rng, d) -> bool | None:
    n = 6
    eps = rng.uniform(0.0, 0.5)
    a, b = _rand_vec(rng, n) * rng.uniform(0.1, 3.0), _rand_vec(rng, n)
    b = b * (rng.uniform(1.0 - eps, 1.0 + eps) / norm(b, d))
    lhs, rhs = stupid_bound_check(a, b, eps, d)
    return lhs > rhs + 1e-12 * max(1.0, rhs)


def _source_family(d, k: int, rng):
    if isinstance(d, Sup):
        return [staircase_c0(i) for i in range(1, k + 1)]
    if isinstance(d, Tsirelson):
        # e_m + e_{m+1} blocks far out: admissible pairs make these 2-separated
        fam = [CoordVector({m: 1.0, m + 1: 1.0}) for m in range(4, 4 + 2 * k, 2)]
        return [b / norm(b, d) for b in fam]
    return [basis(i) / norm(basis(i), d) for i in range(1, k + 1)]


def _trial_embed(rng, d) -> bool | None:
    k = 3
    fam = _source_family(d, k, rng)
    sep = symmetric_separation(fam, d).value
    if sep <= 1.0 + 1e-6:
        return None
    eps = (sep - 1.0) * (1.0 if rng.random() < 0.5 else rng.uniform(0.2, 1.0))
    lam = 1.0 + eps / (2.0 + eps)
    n = max(b.max_index for b in fam)
    diag = rng.uniform(1.0, lam, n)
    diag[int(rng.integers(n))] = lam  # push distortion onto the boundary
    try:
        rep = embed_and_renormalize(fam, np.diag(diag), d, d, eps, restarts=8, seed=int(rng.integers(2**31)))
    except PreconditionError:
        return None
    return rep.value < 1.0 + eps / 2.0 - 1e-9


_VALIDATORS = (
    ("ball_to_sphere", _trial_ball),
    ("embed_and_renormalize", _trial_embed),
    ("stupid_bound_check", _trial_stupid),
)


def _lemma_payload(trials: int, seed: int) -> tuple[dict, list[Assertion], dict]:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    norms = _suite_norms()
    counts: dict[tuple[str, str], list[int]] = {}
    for t in range(trials):
        vname, fn = _VALIDATORS[t % len(_VALIDATORS)]
        d = norms[(t // len(_VALIDATORS)) % len(norms)]
        key = (vname, describe(d))
        c = counts.setdefault(key, [0, 0, 0])
        c[0] += 1
        outcome = fn(rng, d)
        if outcome is None:
            c[2] += 1
        elif outcome:
            c[1] += 1
    rows = [(v, n, c[0], c[1], c[2], "1e-12 (embed: 1e-9)") for (v, n), c in sorted(counts.items())]
    total_bad = sum(c[1] for c in counts.values())
    payload = {
        "trials": trials,
        "seed": seed,
        "counterexamples": total_bad,
        "skipped": sum(c[2] for c in counts.values()),
        "by_validator": [
            {"validator": r[0], "norm": r[1], "trials": r[2], "counterexamples": r[3], "skipped": r[4]}
            for r in rows
        ],
    }
    asserts = [Assertion("counterexamples", total_bad, 0.0, "==", 0.0)]
    table = _csv(["validator", "norm", "trials", "counterexamples", "skipped", "tolerance"], rows)
    return payload, asserts, {"lemmas": table}


def lemma_suite(trials: int, seed: int) -> RunRecord:
    """Randomized lemma validators cycled across norm kinds; ``trials`` is the total count."""
    return run(ExperimentConfig("lemma-suite", Lp(2.0), "lemma-suite", {"trials": trials}, seed))


def task_lemma_suite(cfg: ExperimentConfig):
    _check_params(cfg.params, {"trials"}, cfg.task)
    payload, asserts, tables = _lemma_payload(int(cfg.params.get("trials", 1000)), cfg.seed)
    return payload, asserts, tables, {}


_DISPATCH = {
    "separation-check": task_separation_check,
    "chain": task_chain,
    "kottman": task_kottman,
    "xbox": task_xbox,
    "tsirelson-eval": task_tsirelson_eval,
    "renorm-demo": task_renorm_demo,
    "lemma-suite": task_lemma_suite,
}


def run(config: ExperimentConfig) -> RunRecord:
    """Dispatch ``config`` to its task; write outputs when ``config.output`` is set."""
    if config.output is not None:
        # fail before computing: the nearest existing ancestor must be a writable directory
        probe = os.path.abspath(config.output)
        while not os.path.exists(probe):
            probe = os.path.dirname(probe)
        if not os.path.isdir(probe) or not os.access(probe, os.W_OK):
            raise ConfigError(f"output path {config.output!r} is not writable")
    started = time.time()
    payload, asserts, tables, plots = _DISPATCH[config.task](config)
    rec = RunRecord(config, payload, asserts, started, time.time(), tables, plots)
    if config.output is not None:
        rec.write(config.output)
    return rec


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def _vector_arg(text: str) -> CoordVector:
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    return CoordVector.from_json(text)


def _points_arg(path: str) -> list:
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and "points" in obj:
        obj = obj["points"]
    return [CoordVector.from_json(p).to_json() for p in obj]


def _add_search_flags(p):
    p.add_argument("--restarts", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol-opt", type=float, dest="tol_opt")


def _search_params(args) -> dict:
    return {k: getattr(args, k) for k in ("restarts", "window", "max_iter", "tol_opt") if getattr(args, k) is not None}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=None, help="directory for record, CSV and SVG files")
    common.add_argument("--json", action="store_true", help="print the full record as JSON")

    ap = argparse.ArgumentParser(prog="symsep", description="Symmetric separation experiments", parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    p_norm = sub.add_parser("norm", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_norm.add_parser("eval", parents=[common], help="norm, norming functional and dual norm")
    p.add_argument("--norm", required=True)
    p.add_argument("--vector", required=True, help='JSON such as {"1": 1.0, "3": -2} or a file')
    p.add_argument("--dual", action="store_true", help="also evaluate the dual norm of the vector")

    p_sep = sub.add_parser("separation", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_sep.add_parser("check", parents=[common])
    p.add_argument("--norm", required=True)
    p.add_argument("--points", help="JSON file with a list of vectors")
    p.add_argument("--family", choices=["basis", "staircase"])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--expect", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--tol", type=float)

    p_search = sub.add_parser("search", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_search.add_parser("chain", parents=[common])
    p.add_argument("--norm", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--length", type=int, default=6)
    _add_search_flags(p)
    p = p_search.add_parser("kottman", parents=[common])
    p.add_argument("--norm", required=True)
    p.add_argument("--dim", type=int, nargs="+", required=True)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--lower", type=float)
    p.add_argument("--upper", type=float)
    p.add_argument("--steps", type=int, dest="anneal_steps")
    _add_search_flags(p)
    p = p_search.add_parser("xbox", parents=[common])
    p.add_argument("--norm", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--steps", type=int, default=5)
    _add_search_flags(p)

    p_ts = sub.add_parser("tsirelson", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_ts.add_parser("eval", parents=[common])
    p.add_argument("--vector", required=True)
    p.add_argument("--certificate", action="store_true")
    p.add_argument("--oracle", action="store_true", help="cross-check with the brute-force oracle")

    p_rn = sub.add_parser("renorm", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_rn.add_parser("demo", parents=[common])
    p.add_argument("--norm", help="auerbach:FILE or phi:FILE:EPS; overrides --kind")
    p.add_argument("--kind", choices=["auerbach", "phi"], default="auerbach")
    p.add_argument("--base", default="lp:2")
    p.add_argument("--pairs", type=int, default=5)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--random", type=int, default=1000)

    p_lm = sub.add_parser("lemmas", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_lm.add_parser("run", parents=[common])
    p.add_argument("--trials", type=int, default=1000)

    p_rep = sub.add_parser("report", parents=[common]).add_subparsers(dest="action", required=True)
    p = p_rep.add_parser("render", parents=[common], help="rerun a saved record's config and diff payloads")
    p.add_argument("record", help="record.json or config.json")

    p = sub.add_parser("run", parents=[common], help="run an experiment config file")
    p.add_argument("--config", required=True)
    return ap


def _config_from_args(args) -> ExperimentConfig | None:
    cmd, action = args.command, getattr(args, "action", None)
    base = dict(seed=args.seed, output=args.out, jobs=args.jobs)
    if cmd == "separation":
        params = {}
        if args.points:
            params["points"] = _points_arg(args.points)
        else:
            params["family"] = args.family or "basis"
            params["n"] = args.n
        for k in ("expect", "threshold", "tol"):
            if getattr(args, k) is not None:
                params[k] = getattr(args, k)
        return ExperimentConfig("separation-check", parse_norm(args.norm), "separation-check", params, **base)
    if cmd == "search":
        params = _search_params(args)
        if action == "chain":
            params.update(threshold=args.threshold, length=args.length)
            return ExperimentConfig("chain", parse_norm(args.norm), "chain", params, **base)
        if action == "kottman":
            params.update(dim=args.dim if len(args.dim) > 1 else args.dim[0], points=args.points)
            for k in ("lower", "upper", "anneal_steps"):
                if getattr(args, k) is not None:
                    params[k] = getattr(args, k)
            return ExperimentConfig("kottman", parse_norm(args.norm), "kottman", params, **base)
        params.update(dim=args.dim, steps=args.steps)
        return ExperimentConfig("xbox", parse_norm(args.norm), "xbox", params, **base)
    if cmd == "tsirelson":
        params = {"vector": _vector_arg(args.vector).to_json(), "certificate": args.certificate, "oracle": args.oracle}
        return ExperimentConfig("tsirelson-eval", Tsirelson(), "tsirelson-eval", params, **base)
    if cmd == "renorm":
        if args.norm:
            d = parse_norm(args.norm)
        else:
            sysm = BiorthogonalSystem.canonical(args.pairs)
            b = parse_norm(args.base)
            d = AuerbachRenorm(b, sysm) if args.kind == "auerbach" else PhiRenorm(b, sysm, args.eps)
        return ExperimentConfig("renorm-demo", d, "renorm-demo", {"random": args.random}, **base)
    if cmd == "lemmas":
        return ExperimentConfig("lemma-suite", Lp(2.0), "lemma-suite", {"trials": args.trials}, **base)
    if cmd == "run":
        with open(args.config) as fh:
            cfg = ExperimentConfig.loads(fh.read())
        overrides = {}
        if args.out is not None:
            overrides["output"] = args.out
        if args.jobs != 1:
            overrides["jobs"] = args.jobs
        if overrides:
            cfg = ExperimentConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(cfg)}, **overrides})
        return cfg
    return None


def _summary(rec: RunRecord) -> str:
    lines = [f"{rec.config.task} [{describe(rec.config.norm)}] seed={rec.config.seed}"]
    for a in rec.assertions:
        status = "PASS" if a.passed else "FAIL"
        lines.append(f"  {status} {a.name}: {a.value!r} {a.op} {a.bound!r} (tol {a.tolerance:g})")
    lines.append("passed" if rec.passed else "FAILED")
    return "\n".join(lines)


def _norm_eval(args) -> int:
    d = parse_norm(args.norm)
    x = _vector_arg(args.vector)
    out = {"norm_descriptor": descriptor_to_json(d), "vector": x.to_json(), "norm": norm(x, d)}
    if not x.is_zero():
        f = norming_functional(x, d)
        out["norming_functional"] = f.coefficients.to_json()
        out["functional_value"] = f(x)
    if args.dual:
        out["dual_norm"] = dual_norm(x, d)
    print(json.dumps(out, sort_keys=True, indent=2 if args.json else None))
    return 0


def _report_render(args) -> int:
    with open(args.record) as fh:
        obj = json.load(fh)
    cfg_obj = obj.get("config", obj)
    cfg = ExperimentConfig.from_json(cfg_obj)
    if args.out is not None:
        cfg = ExperimentConfig(cfg.name, cfg.norm, cfg.task, cfg.params, cfg.seed, args.out, cfg.jobs)
    rec = run(cfg)
    same = None
    if "payload" in obj:
        old = json.dumps(obj["payload"], sort_keys=True)
        new = json.dumps(json.loads(json.dumps(rec.payload)), sort_keys=True)
        same = old == new
    if args.json:
        print(json.dumps({"reproduced": same, "record": rec.to_json()}, sort_keys=True, indent=2))
    else:
        print(_summary(rec))
        if same is not None:
            print("payload reproduced" if same else "payload differs from saved record")
    return 0 if rec.passed and same is not False else 1


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "norm":
            return _norm_eval(args)
        if args.command == "report":
            return _report_render(args)
        cfg = _config_from_args(args)
        rec = run(cfg)
    except (ConfigError, PreconditionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(rec.to_json(), sort_keys=True, indent=2))
    else:
        print(_summary(rec))
    return 0 if rec.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
