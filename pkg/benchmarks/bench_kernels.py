"""Timing comparison of the compiled kernels against the numpy fallbacks.

Runs each hot kernel on both backends over a ladder of sizes and prints the
per-call times with the speedup. The history-sum kernels do O(M^2) work per
trajectory, so doubling M should roughly quadruple their times; the last
column reports that observed ratio.

Usage:
    python benchmarks/bench_kernels.py --sizes 1024,2048,4096 --repeats 5
"""

import argparse
import time

import numpy as np

from subdiff import _kernels
from subdiff.mesh import build_graded


def best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def kernel_cases(M):
    mesh = build_graded(M, 2.0, 1.0)
    t, tau = mesh.points, mesh.tau
    rng = np.random.default_rng(0)
    values = rng.normal(size=M + 1)
    rhs = rng.normal(size=M)
    lower = -rng.uniform(0.5, 1.0, M)
    upper = -rng.uniform(0.5, 1.0, M)
    diag = np.abs(lower) + np.abs(upper) + 1.0

    def all_rows(l1_row):
        def run():
            for m in range(1, M + 1):
                l1_row(t, tau, 0.4, m)
        return run

    return [
        ("l1_row (all m)", all_rows(_kernels.l1_row_numba), all_rows(_kernels._l1_row_numpy)),
        (
            "caputo_l1_profile",
            lambda: _kernels.caputo_l1_profile_numba(t, tau, 0.4, values),
            lambda: _kernels._caputo_l1_profile_numpy(t, tau, 0.4, values),
        ),
        (
            "fode_linear_solve",
            lambda: _kernels.fode_linear_numba(t, tau, 0.4, 0.5, 0.5, rhs, 1.0),
            lambda: _kernels._fode_linear_numpy(t, tau, 0.4, 0.5, 0.5, rhs, 1.0),
        ),
        (
            "thomas_solve",
            lambda: _kernels.thomas_numba(lower, diag, upper, rhs),
            lambda: _kernels._thomas_scipy(lower, diag, upper, rhs),
        ),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1024,2048,4096", help="comma-separated M ladder")
    parser.add_argument("--repeats", type=int, default=5, help="timed repetitions, best kept")
    args = parser.parse_args(argv)
    sizes = [int(tok) for tok in args.sizes.split(",")]

    if not _kernels.USING_NUMBA:
        print("numba backend unavailable (or disabled via SUBDIFF_NO_NUMBA);")
        print("timing the numpy fallbacks only\n")

    # first calls trigger JIT compilation; keep them out of the timings
    if _kernels.USING_NUMBA:
        for _, numba_fn, _ in kernel_cases(64):
            numba_fn()

    header = f"{'kernel':<20} {'M':>6} {'numba':>12} {'numpy':>12} {'speedup':>8} {'xM ratio':>9}"
    print(header)
    print("-" * len(header))
    previous = {}
    for M in sizes:
        for name, numba_fn, numpy_fn in kernel_cases(M):
            t_numpy = best_time(numpy_fn, args.repeats)
            if _kernels.USING_NUMBA:
                t_numba = best_time(numba_fn, args.repeats)
                fast = t_numba
                numba_col = f"{t_numba * 1e3:9.3f} ms"
                speedup = f"{t_numpy / t_numba:7.1f}x"
            else:
                fast = t_numpy
                numba_col = f"{'-':>12}"
                speedup = f"{'-':>8}"
            ratio = ""
            if name in previous:
                prev_M, prev_t = previous[name]
                if M == 2 * prev_M and prev_t > 0.0:
                    ratio = f"{fast / prev_t:8.2f}"
            previous[name] = (M, fast)
            print(f"{name:<20} {M:>6} {numba_col} {t_numpy * 1e3:9.3f} ms {speedup} {ratio:>9}")
    print()
    print("xM ratio: time growth from the previous (halved) M; ~4 means O(M^2) per trajectory,")
    print("~2 means O(M) per call (thomas_solve).")


if __name__ == "__main__":
    main()
