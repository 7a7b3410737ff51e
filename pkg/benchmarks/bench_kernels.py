"""Time the numba kernels against their pure-numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]

Both variants are called from the same process (the env flag only decides
which one the package binds by default), results are checked for equality
first, and the best of ``--repeat`` timings is reported.
"""

from __future__ import annotations

import argparse
import json
import math
import time

import numpy as np

from symsep import _kernels as K


def _best(fn, args, repeat):
    fn(*args)  # warm up, includes jit compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def cases(rng):
    idx = np.arange(3, 15, dtype=np.int64)
    vals = rng.integers(1, 4, size=len(idx)).astype(float)
    P = rng.standard_normal((16, 32))
    X = rng.standard_normal((2000, 32))
    y = rng.standard_normal(32)
    return [
        ("tsirelson_history n=12", K.tsirelson_history_py, K.tsirelson_history_nb, (idx, vals)),
        ("lp_rows 2000x32 p=3", K.lp_rows_py, K.lp_rows_nb, (X, 3.0)),
        ("lp_rows 2000x32 sup", K.lp_rows_py, K.lp_rows_nb, (X, math.inf)),
        ("sym_pairs_lp 16x32 p=2", K.sym_pairs_lp_py, K.sym_pairs_lp_nb, (P, 2.0)),
        ("row_sym_dists_lp 16x32 p=2", K.row_sym_dists_lp_py, K.row_sym_dists_lp_nb, (P, 0, y, 2.0)),
    ]


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1
    rows = []
    for name, py, nb, a in cases(np.random.default_rng(args.seed)):
        ok = _same(py(*a), nb(*a))
        t_py = _best(py, a, args.repeat)
        t_nb = _best(nb, a, args.repeat)
        rows.append({"kernel": name, "numpy_s": t_py, "numba_s": t_nb, "speedup": t_py / t_nb, "equal": ok})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'kernel':32s} {'numpy [s]':>11s} {'numba [s]':>11s} {'speedup':>8s}  equal")
        for r in rows:
            print(
                f"{r['kernel']:32s} {r['numpy_s']:11.2e} {r['numba_s']:11.2e} "
                f"{r['speedup']:8.1f}  {r['equal']}"
            )
    return 0 if all(r["equal"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
