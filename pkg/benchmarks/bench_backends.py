#!/usr/bin/env python3
"""Benchmark the compiled recursion kernel against its pure-Python mirror.

Runs the documented dim-8 diagonal benchmark recursion on both backends,
reports steps/second, and verifies the two float streams are
bit-identical. Exits nonzero if they are not.

Usage:
    python benchmarks/bench_backends.py [--steps N] [--repeats R] [--csv PATH]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from mannlab import _core
from mannlab.schedules import ScheduleSet, constant, harmonic, power

BENCH_MU = np.array([1, 1, -1, 0.5, 0.9, -0.8, 0, 0.25], dtype=np.float64)
BENCH_U = np.array([1.0, -0.7, 0.03, 0.03, 0.02, 0.03, 0.03, 0.03])
BENCH_X0 = np.array([2.0, -1.0, 1.0, 0.5, -0.5, 1.0, -1.0, 0.5])


def kernel_args(steps: int):
    sched = ScheduleSet(constant(0.4), power(1.0, 0.5), harmonic())
    alphas, betas, gammas = sched.arrays(2, steps)
    t = 1e-6
    z = t * BENCH_U / (1.0 - (1.0 - t) * BENCH_MU)
    return (BENCH_X0, BENCH_U, alphas, betas, gammas,
            _core.OP_CODES["diagonal"], BENCH_MU, np.zeros((1, 1)), 0.0, 0.0,
            0.0, z, False, 0.0, 0.0, 1e6, steps)


def time_backend(name: str, args, repeats: int):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = _core.mann_run(*args, backend=name)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=100000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--csv", type=Path, help="append results as CSV")
    args = parser.parse_args(argv)

    backends = ["python"]
    try:
        _core.get_backend("compiled")
        backends.insert(0, "compiled")
    except RuntimeError:
        print("compiled kernel unavailable; benchmarking the mirror only")

    kargs = kernel_args(args.steps)
    rows = []
    results = {}
    for name in backends:
        secs, res = time_backend(name, kargs, args.repeats)
        results[name] = res
        rows.append((name, secs, args.steps / secs))

    print(f"{'backend':>10} {'seconds':>10} {'steps/s':>14}")
    for name, secs, rate in rows:
        print(f"{name:>10} {secs:>10.4f} {rate:>14.0f}")
    if len(rows) == 2:
        print(f"speedup: {rows[1][1] / rows[0][1]:.1f}x")

    if args.csv:
        new = not args.csv.exists()
        with open(args.csv, "a") as fh:
            if new:
                fh.write("backend,steps,seconds,steps_per_s\n")
            for name, secs, rate in rows:
                fh.write(f"{name},{args.steps},{secs:.6f},{rate:.0f}\n")

    if len(results) == 2:
        Xc, Rc, Dc, sc = results["compiled"]
        Xp, Rp, Dp, sp = results["python"]
        identical = (sc == sp and np.array_equal(Xc, Xp)
                     and np.array_equal(Rc, Rp) and np.array_equal(Dc, Dp))
        print(f"bit-identical across backends: {identical}")
        if not identical:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
