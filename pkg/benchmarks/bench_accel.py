#!/usr/bin/env python3
"""Benchmark the numba hot kernels against their pure-numpy fallbacks.

The same comparisons drive the NLPARAB_NUMBA=0 escape hatch: if the numba
path is not faster on your machine, run with the flag off.

Usage: python3 benchmarks/bench_accel.py [K]
where K is the number of grid nodes (default 1024).
"""

import sys
import time

import numpy as np

from nlparab import accel


def timeit(fn, *args, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def main() -> int:
    k = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
    rng = np.random.default_rng(0)
    points = np.ascontiguousarray(rng.uniform(-4, 4, (k, 1)))
    values = rng.standard_normal((8, k))
    psi = rng.uniform(0, 1, k)

    if not accel.USING_NUMBA:
        print("numba path unavailable or disabled (NLPARAB_NUMBA=0); "
              "nothing to compare")
        return 0

    cases = [
        ("pairwise_power_matrix",
         lambda: accel._pairwise_power_matrix_numba(points, 1.0, 2.0),
         lambda: accel._pairwise_power_matrix_numpy(points, 1.0, 2.0)),
        ("seminorm_sq_levels",
         lambda: accel._seminorm_sq_levels_numba(values, points, 2.0),
         lambda: accel._seminorm_sq_levels_numpy(values, points, 2.0)),
        ("weighted_seminorm_sq",
         lambda: accel._weighted_seminorm_sq_numba(values[0], points, psi, 2.0),
         lambda: accel._weighted_seminorm_sq_numpy(values[0], points, psi, 2.0)),
    ]

    print(f"K = {k} nodes, best of 5 runs")
    print(f"{'kernel':28s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, fast, ref in cases:
        fast()  # jit warmup
        t_fast, out_fast = timeit(fast)
        t_ref, out_ref = timeit(ref)
        ok = np.allclose(np.asarray(out_fast), np.asarray(out_ref),
                         rtol=1e-10)
        print(f"{name:28s} {t_fast * 1e3:9.2f}ms {t_ref * 1e3:9.2f}ms "
              f"{t_ref / t_fast:7.2f}x {'' if ok else '  MISMATCH'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
