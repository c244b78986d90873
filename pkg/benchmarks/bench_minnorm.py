"""Benchmark: compiled vs pure-Python min-norm-point kernel.

The min-norm projection is the hot kernel of every certification sweep
(one or more calls per grid point).  This script times both kernels on
random vertex sets of varying size and prints the speedup.

Run:  python3 benchmarks/bench_minnorm.py
"""

from __future__ import annotations

import time

import numpy as np

from wsharp.geometry._minnorm_py import wolfe_min_norm as py_kernel

try:
    from wsharp import _kernels

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def time_call(fn, reps: int) -> float:
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def main():
    rng = np.random.default_rng(7)
    cases = [(4, 2), (12, 2), (12, 3), (32, 3), (64, 6), (256, 8)]
    print(f"{'vertices':>9} {'dim':>4} {'python (us)':>12} {'compiled (us)':>14} {'speedup':>8}")
    for m, n in cases:
        V = np.ascontiguousarray(rng.normal(size=(m, n)) + 0.5)
        cap = max(10 * m * n, 10)
        reps = max(20, 20000 // (m * n))
        t_py = time_call(lambda: py_kernel(V, 1e-10, cap), reps)
        if HAVE_COMPILED:
            out = np.empty(n)
            t_c = time_call(lambda: _kernels.wolfe_min_norm(V, 1e-10, cap, out), reps)
            print(f"{m:>9} {n:>4} {t_py * 1e6:>12.2f} {t_c * 1e6:>14.2f} {t_py / t_c:>8.1f}x")
        else:
            print(f"{m:>9} {n:>4} {t_py * 1e6:>12.2f} {'n/a':>14} {'n/a':>8}")
    if not HAVE_COMPILED:
        print("compiled kernel not built; install with `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
