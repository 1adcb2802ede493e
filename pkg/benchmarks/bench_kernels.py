#!/usr/bin/env python3
"""Benchmark: compiled stepping kernel vs the pure-Python fallback.

Times the three workloads that dominate toolkit runtime: an adaptive
two-level protocol run, the fixed-step RK4 oracle at 2^16 steps, and an
adaptive oscillator run in a 128-dimensional number basis.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from stakit import fock, ho_design, tls_design
from stakit.curves import TimeGrid
from stakit.propagation import kernels, propagate, rk4_reference, schedules

KET1 = np.array([0.0, 1.0], dtype=complex)


def time_best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def workloads():
    fig1 = tls_design.preset_fig1(1.0)
    tls_schedule = schedules.tls_invariant_schedule(fig1)
    tls_grid = TimeGrid.uniform(1.0, 201)

    design = ho_design.design_expansion(1.0, 0.1, 2.0)
    ho_schedule = schedules.ho_invariant_schedule(design, 128)
    ho_grid = TimeGrid.uniform(2.0, 201)
    psi_ho = fock.StateVector.basis_state(128, 0)

    return {
        "tls adaptive (fig1, 201 nodes)": lambda kernel: propagate(
            tls_schedule, KET1, tls_grid, kernel=kernel
        ),
        "tls rk4 oracle (2^16 steps)": lambda kernel: rk4_reference(
            tls_schedule, KET1, 1.0, 2**16, kernel=kernel
        ),
        "ho adaptive (N=128, 201 nodes)": lambda kernel: propagate(
            ho_schedule, psi_ho, ho_grid, kernel=kernel
        ),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions (best-of)")
    args = parser.parse_args()

    names = kernels.available()
    print(f"kernels available: {', '.join(names)}")
    if "compiled" not in names:
        print("compiled kernel not built; timing the fallback only")

    rows = []
    for label, run in workloads().items():
        timings = {}
        for kernel in names:
            timings[kernel] = time_best(lambda: run(kernel), args.repeat)
        rows.append((label, timings))

    width = max(len(label) for label, _ in rows)
    header = f"{'workload':<{width}}  " + "".join(f"{k:>12}" for k in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, timings in rows:
        line = f"{label:<{width}}  " + "".join(f"{timings[k] * 1e3:>10.1f}ms" for k in names)
        if len(names) == 2:
            line += f"{timings['pure'] / timings['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
