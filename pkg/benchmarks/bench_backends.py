"""Benchmark the compiled core against the NumPy fallback.

Runs the hot kernels on representative workloads:

* Lindblad right-hand side on a full fundamental-matrix stack (map build)
* one RK4-propagated period of a single density matrix (state evolution)
* classical mean-field trajectories (bifurcation scans)

Usage: python benchmarks/bench_backends.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import drivendimer as dd
from drivendimer import _core_py

try:
    from drivendimer import _core
except ImportError:
    _core = None


def params_for(n):
    return dd.ModelParams.from_scaled(
        n, un=0.2, gamma_n=0.1, mu0=1.0, mu1=3.4, omega=1.0
    )


def time_call(fn, min_time=0.4):
    fn()  # warm up
    reps = 0
    start = time.perf_counter()
    while True:
        fn()
        reps += 1
        elapsed = time.perf_counter() - start
        if elapsed > min_time and reps >= 3:
            return elapsed / reps


def bench_rhs(kern, n, stack_size):
    params = params_for(n)
    ops = dd.build_operators(params)
    d = ops.dim
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(
        rng.standard_normal((stack_size, d, d)) + 1j * rng.standard_normal((stack_size, d, d))
    )
    out = np.empty_like(x)
    return time_call(lambda: kern.lindblad_rhs(out, x, ops.band_table, 1.0, params.gamma))


def bench_period(kern, n, steps):
    params = params_for(n)
    ops = dd.build_operators(params)
    d = ops.dim
    x = np.zeros((1, d, d), dtype=complex)
    x[0, 0, 0] = 1.0
    h = params.period / steps

    def run():
        kern.rk4_lindblad(
            x, ops.band_table, 0.0, h, steps,
            params.mu0, params.mu1, params.omega, params.gamma,
        )

    return time_call(run)

def bench_meanfield(kern, periods, steps_per_period):
    params = params_for(100)
    h = params.period / steps_per_period
    empty = np.empty(0)

    def run():
        kern.mf_propagate(
            2.0, -3.0, 0.0, h, periods * steps_per_period,
            params.j, params.un, params.gamma_n,
            params.mu0, params.mu1, params.omega, 0, empty, empty,
        )

    return time_call(run)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    if args.quick:
        cases = [
            ("rhs, map stack N=6", lambda k: bench_rhs(k, 6, 49)),
            ("rhs, map stack N=10", lambda k: bench_rhs(k, 10, 121)),
            ("one period, state N=25 (500 steps)", lambda k: bench_period(k, 25, 500)),
            ("mean-field, 50 periods x 500 steps", lambda k: bench_meanfield(k, 50, 500)),
        ]
    else:
        cases = [
            ("rhs, map stack N=10", lambda k: bench_rhs(k, 10, 121)),
            ("rhs, map stack N=25", lambda k: bench_rhs(k, 25, 676)),
            ("rhs, state N=100", lambda k: bench_rhs(k, 100, 1)),
            ("one period, state N=25 (2000 steps)", lambda k: bench_period(k, 25, 2000)),
            ("one period, state N=100 (2000 steps)", lambda k: bench_period(k, 100, 2000)),
            ("mean-field, 500 periods x 2000 steps", lambda k: bench_meanfield(k, 500, 2000)),
        ]

    backends = [("python", _core_py)]
    if _core is not None:
        backends.insert(0, ("c", _core))
    else:
        print("compiled extension not available; benchmarking fallback only")

    width = max(len(name) for name, _ in cases)
    print(f"{'case':<{width}}  " + "".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    for name, fn in cases:
        times = [fn(kern) for _, kern in backends]
        row = f"{name:<{width}}  " + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[1] / times[0]:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
