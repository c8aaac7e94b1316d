#!/usr/bin/env python3
"""Benchmark the compiled propagation/recursion core against the numpy fallback.

Run from the repository root after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from enspulse import kernels
from enspulse.kernels import pyref

try:
    from enspulse.kernels import _fastcore
except ImportError:
    _fastcore = None


def timeit(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_propagation(impl, nsteps, npts, hard):
    rng = np.random.default_rng(0)
    u = rng.uniform(-3000, 3000, nsteps)
    v = rng.uniform(-3000, 3000, nsteps)
    omega = rng.uniform(-2000, 2000, npts)
    eps = rng.uniform(0.8, 1.2, npts)
    a0 = np.ones(npts, dtype=complex)
    b0 = np.zeros(npts, dtype=complex)
    return timeit(impl.spinor_propagate, u, v, 1e-4, omega, eps, None, a0, b0, hard)


def bench_bloch(impl, nsteps, npts):
    rng = np.random.default_rng(1)
    u = rng.uniform(-3000, 3000, nsteps)
    v = rng.uniform(-3000, 3000, nsteps)
    omega = rng.uniform(-2000, 2000, npts)
    eps = rng.uniform(0.8, 1.2, npts)
    xyz = np.tile([0.0, 0.0, 1.0], (npts, 1))
    return timeit(impl.bloch_propagate, u, v, 1e-4, omega, eps, None, xyz)


def bench_slr(impl, n):
    rng = np.random.default_rng(2)
    phi = rng.uniform(0.01, 1.2, n)
    theta = rng.uniform(-np.pi, np.pi, n)
    c = np.cos(phi / 2)
    s = -1j * np.exp(1j * theta) * np.sin(phi / 2)
    t_fwd = timeit(impl.slr_forward, c, s)
    p, q = impl.slr_forward(c, s)
    t_inv = timeit(impl.slr_inverse, p, q)
    return t_fwd, t_inv


def main():
    print(f"active implementation: {kernels.IMPLEMENTATION}")
    if _fastcore is None:
        print("compiled core not available; showing fallback timings only")

    rows = []
    cases = [
        ("spinor 512 steps x 4096 pts (exact)", lambda i: bench_propagation(i, 512, 4096, False)),
        ("spinor 512 steps x 4096 pts (hard)", lambda i: bench_propagation(i, 512, 4096, True)),
        ("bloch  512 steps x 4096 pts", lambda i: bench_bloch(i, 512, 4096)),
        ("slr forward n=2048", lambda i: bench_slr(i, 2048)[0]),
        ("slr inverse n=2048", lambda i: bench_slr(i, 2048)[1]),
    ]
    for name, fn in cases:
        t_py = fn(pyref)
        if _fastcore is not None:
            t_c = fn(_fastcore)
            rows.append((name, t_py, t_c, t_py / t_c))
        else:
            rows.append((name, t_py, None, None))

    width = max(len(r[0]) for r in rows)
    header = f"{'case':<{width}}  {'numpy':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, t_py, t_c, ratio in rows:
        if t_c is None:
            print(f"{name:<{width}}  {t_py * 1e3:9.2f}ms  {'-':>10}  {'-':>8}")
        else:
            print(f"{name:<{width}}  {t_py * 1e3:9.2f}ms  {t_c * 1e3:9.2f}ms  {ratio:7.1f}x")


if __name__ == "__main__":
    main()
