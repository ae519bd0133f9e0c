"""Time each kernel under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Numba timings exclude compilation (one warm-up call per kernel). The last
column is numpy time over numba time.
"""

import argparse
import timeit

import numpy as np

from softening.kernels import backends


def cases(rng):
    z = rng.standard_normal(20_000)
    samples = rng.standard_normal(2000)
    grid = np.linspace(-4, 4, 256)
    x = rng.standard_normal(5000)
    u = np.arange(501) / 100.0
    lag_w = np.exp(-0.5 * u * u)
    fp_x = np.linspace(-7, 7, 200_001)
    k2 = np.arange(1, 1024, dtype=float) ** 2
    a2 = rng.random(1023) * np.exp(-k2 / 1e4)
    n_ens = 100_000
    x_ens = np.ones(n_ens)
    z_ens = rng.standard_normal(n_ens)
    escaped = np.empty(n_ens, dtype=np.int64)
    groups = rng.integers(0, 50, n_ens)
    sums = np.zeros((50, 4))
    counts = np.zeros(401, dtype=np.int64)

    def ensemble_step(m):
        xs = x_ens.copy()
        k = m.ensemble_advance(xs, z_ens, 1.0, 0.01, 0.1, -2.0, escaped)
        m.ensemble_accumulate(xs, 1.0, groups, sums, -2.0, 0.02, counts)
        return k

    return {
        "snf_path  n=20000": lambda m: m.snf_path(2.0, 4.0, 0.0, 0.5, 0.1, z, -np.inf),
        "ou_path   n=20000": lambda m: m.ou_path(0.8, 0.3, z, 0.0),
        "kde_eval  2000x256": lambda m: m.kde_eval(samples, grid, 0.2),
        "smooth    n=5000 lags=500": lambda m: m.smooth_uniform(x, lag_w),
        "fp_log_density n=2e5": lambda m: m.fp_log_density(fp_x, 2.0, 1.0),
        "isj_fixed_point": lambda m: m.isj_fixed_point(1e-3, 2000.0, k2, a2),
        "ensemble step n=1e5": ensemble_step,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name in mods) + "     speedup")
    for label, fn in cases(rng).items():
        times = {}
        for name, m in mods.items():
            fn(m)
            number = 3
            times[name] = min(timeit.repeat(lambda: fn(m), number=number, repeat=args.repeat)) / number
        row = f"{label:28s}" + "".join(f"{times[n] * 1e3:10.3f}ms" for n in mods)
        if "numba" in times:
            row += f"  {times['numpy'] / times['numba']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
