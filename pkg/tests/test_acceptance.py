"""Acceptance criteria, one test each, at the stated tolerances.

Every test logs a single PASS/FAIL line through ``acceptance_log``; the
lines are repeated in the pytest terminal summary. Run standalone with
``python tests/test_acceptance.py`` for just the lines.
"""

import itertools
import math
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from symsep.cli import ExperimentConfig, lemma_suite, run  # noqa: E402
from symsep.norms import AuerbachRenorm, BiorthogonalSystem, Lp, PhiRenorm, Sup, norm  # noqa: E402
from symsep.search import SearchConfig, empirical_kottman, greedy_chain, xbox_chain  # noqa: E402
from symsep.separation import (  # noqa: E402
    cotype_bound_check,
    disjoint_block_certificate,
    symmetric_separation,
)
from symsep.tsirelson import l1_spreading_certificate, tsirelson_norm, tsirelson_oracle  # noqa: E402
from symsep.vectors import CoordVector, basis, staircase_c0  # noqa: E402
from tests.acceptance_log import record  # noqa: E402


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def _certificate_check(number, title, points, d):
    # the first call loads compiled kernels from the numba cache; time a warm call
    _, cold = _timed(lambda: symmetric_separation(points, d))
    rep, warm = _timed(lambda: symmetric_separation(points, d))
    ok = abs(rep.value - 2.0) <= 1e-12 and warm < 0.1
    record(number, title, ok, f"value={rep.value!r} |err|<=1e-12, runtime {warm:.2e}s (<0.1s; cold {cold:.2e}s)")
    return ok


def test_ac01_l1_certificate():
    assert _certificate_check(1, "l1 basis certificate", [basis(i) for i in range(1, 11)], Lp(1))


def test_ac02_c0_certificate():
    assert _certificate_check(2, "c0 staircase certificate", [staircase_c0(n) for n in range(1, 11)], Sup())


def test_ac03_disjoint_blocks():
    worst, all_ok = 0.0, True
    for q in (1, 1.5, 2, 3, 4):
        c = 2 ** (1 / q)
        blocks = [basis(1), CoordVector({2: 1 / c, 3: 1 / c}), basis(4), CoordVector({5: 0.6, 6: (1 - 0.6**q) ** (1 / q)})]
        rep = disjoint_block_certificate(q, blocks)
        err = abs(rep.value - c)
        worst = max(worst, err)
        all_ok &= err <= 1e-12 and cotype_bound_check(rep, q)
    record(3, "disjoint block bound 2^(1/q)", all_ok, f"q in 1,1.5,2,3,4: max |value-2^(1/q)| = {worst:.1e} (<=1e-12), cotype check passes")
    assert all_ok


def test_ac04_l2_ceiling():
    rep, dt = _timed(lambda: empirical_kottman(Lp(2), 16, 8, SearchConfig()))
    lo, hi = math.sqrt(2) - 0.05, math.sqrt(2) + 1e-9
    ok = lo <= rep.value <= hi and dt < 60
    record(4, "l2 ceiling", ok, f"value={rep.value!r} in [{lo:.6f}, {hi:.10f}], runtime {dt:.1f}s (<60s)")
    assert ok


def test_ac05_lq_attainment():
    ok, parts = True, []
    for q in (1, 3):
        t = 2 ** (1 / q) - 0.01
        res, dt = _timed(lambda: greedy_chain(t, Lp(q), SearchConfig(), target_length=6))
        value = res.report.value if res.report else float("nan")
        good = len(res.blocks) == 6 and value >= t and dt < 60
        ok &= good
        parts.append(f"q={q}: length {len(res.blocks)}, cert {value:.6f} >= {t:.6f}, {dt:.2f}s")
    record(5, "lq chain attainment", ok, "; ".join(parts))
    assert ok


def test_ac06_xbox_construction():
    cfg = SearchConfig(tol_opt=1e-3)
    d = Lp(20)
    tr, dt = _timed(lambda: xbox_chain(d, 64, 5, cfg))
    xs = tr.points()
    worst_sum, worst_diff = math.inf, math.inf
    for k in range(len(xs)):
        for n in range(k + 1, len(xs)):
            worst_sum = min(worst_sum, norm(xs[n] + xs[k], d) - 1.5)
            # x_k is the (k+1)-th point, so delta is 2^-((k+1)+2)
            worst_diff = min(worst_diff, norm(xs[k] - xs[n], d) - (1 + 2.0 ** -(k + 3)))
    ok = len(xs) == 6 and worst_sum >= -1e-4 and worst_diff >= -1e-4 and dt < 120
    record(
        6,
        "xbox construction in l20",
        ok,
        f"{len(xs)} points, min(||x_n+x_k||-1.5)={worst_sum:.2e}, "
        f"min(||x_k-x_n||-1-d_k)={worst_diff:.2e} (>=-1e-4), runtime {dt:.2f}s (<120s)",
    )
    assert ok


def test_ac07_renorming_demos():
    base = Lp(2.0)
    sysm = BiorthogonalSystem.canonical(5)
    A = AuerbachRenorm(base, sysm)
    xs = sysm.vectors
    exact = all(norm(x, A) == 1.0 for x in xs)
    exact &= all(norm(xs[i] + s * xs[j], A) == 2.0 for i, j in itertools.combinations(range(5), 2) for s in (1, -1))
    P = PhiRenorm(base, sysm, 0.25)
    pm = min(norm(xs[i] + s * xs[j], P) for i, j in itertools.combinations(range(5), 2) for s in (1, -1))
    rng = np.random.default_rng(0)
    ratio = 0.0
    for _ in range(1000):
        v = CoordVector.from_dense(rng.standard_normal(7))
        ratio = max(ratio, norm(v, P) / norm(v, base))
    ok = exact and pm >= 1.25 and ratio <= 1.25
    record(7, "renorming demos", ok, f"auerbach exact={exact}, phi min |||x_i+-x_j|||={pm!r} (>=1.25), max ratio on 1e3 vectors={ratio:.6f} (<=1.25)")
    assert ok


def test_ac08_tsirelson():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(500):
        k = int(rng.integers(1, 11))
        idx = np.sort(rng.choice(np.arange(1, 16), size=k, replace=False))
        x = CoordVector({int(i): float(rng.choice([-2, -1, 1, 2])) for i in idx})
        mismatches += tsirelson_norm(x) != tsirelson_oracle(x)
    runs = all(tsirelson_norm(CoordVector({i: 1.0 for i in range(k, 2 * k)})) >= k / 2 for k in range(1, 9))
    spreading_fail, count = 0, 0
    for k in range(1, 7):
        for idx in itertools.combinations(range(k, 13), k):
            for signs in itertools.product((1, -1), repeat=k):
                count += 1
                spreading_fail += not l1_spreading_certificate(idx, signs, 0.5)[0]
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and runs and spreading_fail == 0 and dt < 120
    record(
        8,
        "tsirelson oracle and spreading",
        ok,
        f"oracle mismatches {mismatches}/500, run sums >= k/2: {runs}, "
        f"spreading failures {spreading_fail}/{count} (indices <= 12), runtime {dt:.1f}s (<120s)",
    )
    assert ok


def test_ac09_lemma_suite():
    rec = lemma_suite(10_000, 42)
    p = rec.payload
    ok = p["counterexamples"] == 0 and rec.passed
    record(9, "lemma suite", ok, f"{p['trials']} trials, {p['counterexamples']} counterexamples, {p['skipped']} skipped")
    assert ok


def test_ac10_determinism():
    configs = [
        ExperimentConfig("c", Lp(1.5), "chain", {"threshold": 1.5, "length": 4, "restarts": 4}, seed=5),
        ExperimentConfig("k", Lp(3.0), "kottman", {"dim": [4, 6], "points": 4, "restarts": 3, "anneal_steps": 300}, seed=5),
        ExperimentConfig("x", Lp(20.0), "xbox", {"dim": 24, "steps": 3, "tol_opt": 1e-3}, seed=5),
    ]
    same = []
    for cfg in configs:
        a = run(cfg).payload_json().encode()
        b = run(cfg).payload_json().encode()
        same.append(a == b)
    ok = all(same)
    record(10, "determinism", ok, f"chain/kottman/xbox payloads byte-identical: {same}")
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_ac"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
