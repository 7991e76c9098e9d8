"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_core.py [--repeat 5]
"""

import argparse
import statistics
import time

import numpy as np

from sepconvex import _core_py, catalog_get
from sepconvex.assemble import touching_family

try:
    from sepconvex import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), statistics.median(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--grid", type=int, default=201)
    ap.add_argument("--D", type=int, default=201)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled extension not built; run pip install -e . first")

    rng = np.random.default_rng(0)
    s = np.sort(rng.uniform(0.0, 4.0, 200_000))
    v = np.minimum.accumulate(-np.sqrt(s) * rng.uniform(0.5, 1.5, s.size))
    fam = touching_family(catalog_get("neg_square"), (-1.0, 1.0), args.D)
    xs = np.linspace(-0.8, 0.8, args.grid)
    X, Y = np.meshgrid(xs, xs)
    fargs = (X, Y, fam.u, fam.gu, fam.dgu, fam.Cu, fam.seg_ptr, fam.knots, fam.a, fam.c, fam.cum)

    cases = [
        ("lower_hull 2e5 points", lambda m: m.lower_hull(s, v)),
        (f"family_sup {args.grid}^2 x D={args.D}, pruned", lambda m: m.family_sup(*fargs, True)),
        (f"family_sup {args.grid}^2 x D={args.D}, full", lambda m: m.family_sup(*fargs, False)),
    ]
    print(f"{'case':<40} {'compiled':>10} {'numpy':>10} {'speedup':>8}  agree")
    for name, call in cases:
        tc, _, oc = best_of(lambda: call(_core), args.repeat)
        tp, _, op = best_of(lambda: call(_core_py), max(1, args.repeat // 2))
        agree = np.array_equal(oc, op) if oc.dtype.kind == "i" else float(np.max(np.abs(oc - op)))
        print(f"{name:<40} {tc:>9.4f}s {tp:>9.4f}s {tp / tc:>7.1f}x  {agree}")


if __name__ == "__main__":
    main()
