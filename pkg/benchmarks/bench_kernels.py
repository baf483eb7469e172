#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 1024,4096] [--repeats 3]

Each kernel runs on identical inputs under both backends; the table reports
best-of-N wall times, the speedup, and the maximum result discrepancy
(which must be at machine precision).
"""

import argparse
import time

import numpy as np

from roughmarket import GeneratorSpec, generate
from roughmarket._kernels import (
    HAVE_NUMBA,
    PHI_POWER,
    PHI_PSI,
    doob_grid_trace,
    qvar_dp,
    var_dp,
    warmup,
)


def best_of(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_case(name, make_call, repeats):
    t_numba, out_numba = best_of(lambda: make_call("numba"), repeats)
    t_numpy, out_numpy = best_of(lambda: make_call("numpy"), repeats)
    a = np.atleast_1d(np.asarray(out_numba, dtype=np.float64))
    b = np.atleast_1d(np.asarray(out_numpy, dtype=np.float64))
    diff = float(np.max(np.abs(a - b)))
    print(
        f"{name:<34} numba {t_numba * 1e3:9.2f} ms   numpy {t_numpy * 1e3:9.2f} ms   "
        f"speedup {t_numpy / t_numba:6.2f}x   max diff {diff:.2e}"
    )


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="1024,4096")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    warmup()
    sizes = [int(s) for s in args.sizes.split(",")]
    for n in sizes:
        path = generate(
            GeneratorSpec(kind="exp-fractional", n_samples=n + 1, hurst=0.4, sigma=0.5, seed=1)
        )
        values = path.values
        times = path.times
        print(f"\n== {n + 1} samples ==")
        bench_case(
            f"variation DP (p=2.5, n={n + 1})",
            lambda b: var_dp(values, PHI_POWER, 2.5, backend=b),
            args.repeats,
        )
        bench_case(
            f"variation DP (psi, n={n + 1})",
            lambda b: var_dp(values, PHI_PSI, 0.0, backend=b),
            args.repeats,
        )
        bench_case(
            f"mesh DP (delta=0.01, n={n + 1})",
            lambda b: qvar_dp(times, values, 0.01, backend=b),
            args.repeats,
        )
        for j in (10, 14):
            k_cap = int(np.ceil(path.sup * 2.0**j))
            bench_case(
                f"band grid (j={j}, {k_cap} cells)",
                lambda b, j=j, k=k_cap: doob_grid_trace(values, j, k, backend=b)[0][-1],
                args.repeats,
            )


if __name__ == "__main__":
    main()
