#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python reference.

Usage::

    python benchmarks/bench_kernels.py [--repeats N]

Times the two hot paths — the blocking-probability recursion and the
per-window event loop — in both backends and prints the speedup.
"""

import argparse
import statistics
import time

import numpy as np

from greenfarm import _fallback

try:
    from greenfarm import _speedups
except ImportError:
    _speedups = None


def timeit(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return min(samples), statistics.median(samples)


def bench_recursion(mod, n=100_000, rho=90_000.0):
    return lambda: mod.erlang_b_steps(1.0, 0.0, n, rho)


def bench_window(mod, seed=0, arrivals=200_000, servers=800):
    rng = np.random.default_rng(seed)
    t0, t1 = 0.0, 2.0
    arr = np.sort(rng.uniform(t0, t1, size=arrivals))
    svc = rng.exponential(50 / 60, size=arrivals)
    comp0 = np.sort(rng.exponential(0.4, size=servers))
    dur0 = rng.exponential(50 / 60, size=servers)
    return lambda: mod.simulate_window(arr, svc, comp0, dur0, servers, t0, t1)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    cases = [
        ("erlang recursion, 100k steps", bench_recursion),
        ("window event loop, 200k arrivals", bench_window),
    ]
    print(f"{'kernel':<36} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, make in cases:
        py_best, _ = timeit(make(_fallback), args.repeats)
        if _speedups is None:
            print(f"{name:<36} {py_best * 1e3:9.1f}ms {'(absent)':>10}")
            continue
        cy_best, _ = timeit(make(_speedups), args.repeats)
        print(f"{name:<36} {py_best * 1e3:9.1f}ms {cy_best * 1e3:9.1f}ms "
              f"{py_best / cy_best:7.1f}x")


if __name__ == "__main__":
    main()
