"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel under both backends in a single process: the numpy
implementations are always importable from the module regardless of the
selected backend, so no subprocess juggling is needed.

Usage::

    python3 benchmarks/bench_accel.py [--n 3000] [--k 10] [--repeat 200]
"""

import argparse
import time

import numpy as np

from fexpsmc import _accel
from fexpsmc.approx import prepare_dataset
from fexpsmc.fourier import fracdiff_acf


def _timeit(fn, repeat):
    fn()  # warm-up (triggers JIT compilation on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=3000, help="series length")
    parser.add_argument("--k", type=int, default=10, help="cosine order")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = rng.standard_normal(args.n)
    ctx = prepare_dataset(x)
    cosb = ctx.cos_basis(args.k)
    xi = rng.standard_normal(args.k) * 0.1
    lam = np.linspace(1e-3, np.pi, 512)
    acf = fracdiff_acf(0.3, np.arange(2048))
    z = rng.standard_normal(2048)

    pairs = [
        ("whittle_quadform",
         lambda: _accel._whittle_quadform_nb(0.3, xi, ctx.pgram, ctx.logweight, cosb, args.n),
         lambda: _accel._whittle_quadform_np(0.3, xi, ctx.pgram, ctx.logweight, cosb, args.n)),
        ("cosine_series",
         lambda: _accel._cosine_series_nb(xi, lam),
         lambda: _accel._cosine_series_np(xi, lam)),
        ("durbin_levinson_sample",
         lambda: _accel._durbin_levinson_nb(acf, z),
         lambda: _accel._durbin_levinson_np(acf, z)),
    ]

    print(f"installed backend: {_accel.BACKEND}")
    print(f"n = {args.n}, k = {args.k}, repeat = {args.repeat}")
    print(f"{'kernel':<26}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, fn_nb, fn_np in pairs:
        if _accel.HAVE_NUMBA:
            t_nb = _timeit(fn_nb, args.repeat)
        else:
            t_nb = float("nan")
        t_np = _timeit(fn_np, args.repeat)
        ratio = t_np / t_nb if t_nb == t_nb else float("nan")
        print(f"{name:<26}{t_nb * 1e6:>10.1f}us{t_np * 1e6:>10.1f}us{ratio:>9.2f}x")

    # correctness cross-check between the two paths
    if _accel.HAVE_NUMBA:
        q_nb = _accel._whittle_quadform_nb(0.3, xi, ctx.pgram, ctx.logweight, cosb, args.n)
        q_np = _accel._whittle_quadform_np(0.3, xi, ctx.pgram, ctx.logweight, cosb, args.n)
        rel = abs(q_nb - q_np) / abs(q_np)
        print(f"\nwhittle_quadform agreement: rel diff {rel:.3e}")


if __name__ == "__main__":
    main()
