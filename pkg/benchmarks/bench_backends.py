#!/usr/bin/env python3
"""Throughput comparison of the numba and numpy path kernels.

Runs the same Monte Carlo batch on both backends and reports steps/second,
plus a single-path run with dense storage.  The numba numbers include a
warm-up call so JIT compilation is not billed.

    python benchmarks/bench_backends.py --trials 2000 --horizon 5.0
"""

import argparse
import time

import numpy as np

from ovsde._backend import NUMBA_AVAILABLE
from ovsde._kernels import run_batch
from ovsde._rng import stream_keys
from ovsde.model import ModelParams


def kernel_args(p, n_steps, dt, eps, delta):
    c = p.derived
    return dict(
        x0=p.x_circ, y0=p.y_circ, n_steps=n_steps, dt=dt, eps=eps, delta=delta,
        alpha=p.alpha, beta=p.beta, d=p.d, v_circ=p.v_circ, x_inf=c.x_inf,
        h_budget=c.h_circ + 1.0, phi_half=0.5 * c.phi_lower, absorb=True,
    )


def bench(backend, keys, args, store_stride, repeats):
    run_batch(keys[:8], store_stride=store_stride, backend=backend, **args)  # warm-up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = run_batch(keys, store_stride=store_stride, backend=backend, **args)
        best = min(best, time.perf_counter() - t0)
    steps = int(res.end_step.sum())
    return best, steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--horizon", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--repeats", type=int, default=3)
    ns = ap.parse_args()

    p = ModelParams(alpha=1.0, beta=1.0, d=1.0, v_circ=0.9, x_circ=1.0, y_circ=0.0)
    n_steps = int(round(ns.horizon / ns.dt))
    args = kernel_args(p, n_steps, ns.dt, ns.epsilon, 1e-3)
    keys = stream_keys(1, np.arange(ns.trials, dtype=np.uint64))

    backends = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]
    print(f"batch: {ns.trials} trials x {n_steps} steps (eps={ns.epsilon})")
    rates = {}
    for backend in backends:
        elapsed, steps = bench(backend, keys, args, store_stride=0, repeats=ns.repeats)
        rates[backend] = steps / elapsed
        print(f"  {backend:>6}: {elapsed:8.3f}s  {steps / elapsed / 1e6:8.2f} Msteps/s")
    if len(rates) == 2:
        print(f"  speedup numba/numpy: {rates['numba'] / rates['numpy']:.1f}x")

    print(f"single stored path: 1 x {n_steps} steps, stride 1")
    for backend in backends:
        elapsed, steps = bench(backend, keys[:1], args, store_stride=1, repeats=ns.repeats)
        print(f"  {backend:>6}: {elapsed:8.3f}s  {steps / elapsed / 1e6:8.2f} Msteps/s")


if __name__ == "__main__":
    main()
