"""Timing comparison of the compiled and pure-numpy evaluation backends.

Runs the same integrations through both backends and reports per-step
times.  The first jit pass is a warmup so compilation cost stays out of
the numbers.

Usage: python benchmarks/bench_backends.py [--steps N] [--repeats R]
"""

import argparse
import time

import numpy as np

from routhian import backends, dynamics, reduction, scenario


def time_case(label, fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return label, best


def build_jobs(steps):
    jobs = []

    sc = scenario.load("charged_particle")
    red = reduction.reduce_system(sc.sys, sc.sym, sc.mu)
    jobs.append(
        (
            "full flow, planar magnetic (n=2, m=2)",
            lambda: dynamics.run_full(sc.sys, sc.initial, sc.dt, steps, sym=sc.sym),
        )
    )
    jobs.append(
        (
            "magnetic flow (first order)",
            lambda: dynamics.run_reduced(red, sc.initial.q, [], sc.dt, steps),
        )
    )

    sg = scenario.load("curved_gamma")
    redg = reduction.reduce_system(sg.sys, sg.sym, sg.mu)
    shape = list(sg.sym.shape_indices)
    jobs.append(
        (
            "full flow, curved connection (n=3)",
            lambda: dynamics.run_full(sg.sys, sg.initial, sg.dt, steps, sym=sg.sym),
        )
    )
    jobs.append(
        (
            "reduced flow, curved connection (k=2)",
            lambda: dynamics.run_reduced(
                redg, sg.initial.q[shape], sg.initial.qd[shape], sg.dt, steps
            ),
        )
    )
    return jobs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    names = [n for n in ("numpy", "jit") if n in backends.available()]
    results = {}
    for name in names:
        backends.use(name)
        jobs = build_jobs(args.steps)
        if name == "jit":
            for _, fn in jobs:
                fn()  # warmup: trigger compilation
        results[name] = dict(
            time_case(label, fn, args.repeats) for label, fn in jobs
        )

    width = max(len(label) for label in results[names[0]])
    header = f"{'case':<{width}}"
    for name in names:
        header += f"  {name + ' (us/step)':>16}"
    if len(names) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label in results[names[0]]:
        row = f"{label:<{width}}"
        per_step = []
        for name in names:
            us = results[name][label] / args.steps * 1e6
            per_step.append(us)
            row += f"  {us:>16.3f}"
        if len(per_step) == 2:
            row += f"  {per_step[0] / per_step[1]:>7.1f}x"
        print(row)

    # sanity: both backends must agree bit-for-bit on a short run
    backends.use("numpy")
    sc = scenario.load("curved_gamma")
    a = dynamics.run_full(sc.sys, sc.initial, sc.dt, 200, sym=sc.sym).samples
    if "jit" in names:
        backends.use("jit")
        b = dynamics.run_full(sc.sys, sc.initial, sc.dt, 200, sym=sc.sym).samples
        print(f"\ncross-backend max deviation: {np.max(np.abs(a - b)):.3e}")


if __name__ == "__main__":
    main()
