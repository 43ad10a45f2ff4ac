#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure NumPy fallback.

Times the hot kernels on representative workloads:

* Chebyshev evaluation (the inner loop of every map application),
* stable difference evaluation (the thickening propagation primitive),
* long orbit iteration (attractor sampling).

Run as ``python3 benchmarks/bench_kernels.py``; the selected default backend
is whatever a plain import picks (set RENORMLAB_NUMBA=0 to force the
fallback at import time inside the package itself).
"""

import time

import numpy as np

from renormlab import _kernels_numpy as np_impl

try:
    from renormlab import _kernels_numba as nb_impl
except ImportError:
    nb_impl = None


def timeit(fn, *args, repeat=5):
    fn(*args)                      # warm up (numba compiles here)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(42)
    c = rng.standard_normal(65) * np.exp(-0.4 * np.arange(65))
    C = np.ascontiguousarray(np.outer(np.exp(-0.3 * np.arange(49)),
                                      np.exp(-0.8 * np.arange(17))))
    x = rng.uniform(0.0, 1.0, 100_000)
    y = rng.uniform(0.0, 1.0, 100_000)
    base = rng.uniform(0.2, 0.8, 100_000)
    da = rng.uniform(-1e-9, 1e-9, 100_000)
    db = np.zeros_like(da)

    cases = [
        ("cheb_eval (1e5 pts)",
         lambda impl: impl.cheb_eval(c, 0.0, 1.0, x)),
        ("cheb2_eval (1e5 pts)",
         lambda impl: impl.cheb2_eval(C, 0.0, 1.0, 0.0, 1.0, x, y)),
        ("cheb_diff_rel (1e5 pts)",
         lambda impl: impl.cheb_diff_rel(c, 0.0, 1.0, base, da, db)),
        ("henon_orbit (1e5 steps)",
         lambda impl: impl.henon_orbit(c * 0.1, 0.0, 1.0, C * 1e-3,
                                       0.0, 1.0, 0.0, 1.0, 1.0,
                                       0.4, 0.4, 100_000)),
        ("logistic_orbit (1e6 steps)",
         lambda impl: impl.logistic_orbit(3.5699, 0.5, 1_000_000)),
    ]

    print(f"{'kernel':30s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, runner in cases:
        t_np = timeit(lambda: runner(np_impl))
        if nb_impl is None:
            print(f"{name:30s} {t_np*1e3:9.2f}ms {'n/a':>10s}")
            continue
        t_nb = timeit(lambda: runner(nb_impl))
        print(f"{name:30s} {t_np*1e3:9.2f}ms {t_nb*1e3:9.2f}ms "
              f"{t_np/t_nb:7.1f}x")


if __name__ == "__main__":
    main()
