"""Benchmark the compiled flood kernel against the NumPy fallback.

Runs the same simulation through both backends on synthetic grids, reports
wall time and speedup, and verifies the outputs are bit-identical.

Usage: python benchmarks/bench_kernels.py [--sizes 50,100,150] [--repeat 3]
"""

import argparse
import time

import numpy as np

from bgiopt.flood import available_backends
from bgiopt.flood import kernel_py


def build_case(n, seed=3):
    rng = np.random.default_rng(seed)
    z = np.add.outer(np.arange(n)[::-1], np.arange(n)[::-1]) * 0.05
    z = np.ascontiguousarray(z + rng.random((n, n)) * 0.1)
    wall = np.zeros((n, n), dtype=np.uint8)
    wall[rng.random((n, n)) < 0.05] = 1
    flow = wall == 0
    rain_w = np.where(flow, 1.0, 0.0)
    rain_w[0, 0] += wall.sum()
    infil = np.where(rng.random((n, n)) < 0.3, 1.4e-5, 0.0) * flow
    manning = np.full((n, n), 0.03)
    rain_rates = np.array([3e-5] * 6 + [0.0])
    phase_ends = np.array([300.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0, 2400.0])
    d0 = np.zeros((n, n))
    return [
        z, wall, np.ascontiguousarray(rain_w), np.ascontiguousarray(infil), manning,
        rain_rates, phase_ends, d0,
        5.0, 0.7, 1e-4, 0.01, 30.0, False, float(rain_w.sum()),
    ]


def run(kernel, args, repeat):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = kernel(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="50,100,150")
    ap.add_argument("--repeat", type=int, default=3)
    opts = ap.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; only timing the NumPy fallback")
    print(f"{'grid':>8} {'steps':>7} {'python':>10} {'compiled':>10} {'speedup':>8}  identical")
    for n in [int(s) for s in opts.sizes.split(",")]:
        args = build_case(n)
        t_py, r_py = run(kernel_py.run_simulation, args, opts.repeat)
        if "compiled" in backends:
            t_cy, r_cy = run(backends["compiled"], args, opts.repeat)
            same = all(
                np.array_equal(np.asarray(a), np.asarray(b))
                for a, b in zip(r_py[:4], r_cy[:4])
            ) and r_py[4] == r_cy[4] and r_py[5] == r_cy[5]
            print(
                f"{n:>5}x{n:<3} {r_py[5]:>7} {t_py:>9.2f}s {t_cy:>9.2f}s "
                f"{t_py / t_cy:>7.1f}x  {same}"
            )
        else:
            print(f"{n:>5}x{n:<3} {r_py[5]:>7} {t_py:>9.2f}s {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
