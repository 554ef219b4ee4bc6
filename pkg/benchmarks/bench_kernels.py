"""Compare the compiled and pure-Python hot kernels.

Run with ``python3 benchmarks/bench_kernels.py``; prints best-of-N wall time
for each kernel under both backends and the speed-up.
"""
import argparse
import timeit

import numpy as np

from optdep import _pykernels

try:
    from optdep import _ckernels
except ImportError:  # extension not built
    _ckernels = None

CLAYTON, FRANK, GUMBEL = 1, 2, 3


def cases(n, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.uniform(1e-6, 1 - 1e-6, n)
    v = rng.uniform(1e-6, 1 - 1e-6, n)
    grid = (np.arange(50) + 0.5) / 50
    return {
        "h_inverse gumbel(3)": lambda k: k.h_inverse(GUMBEL, 3.0, u, v),
        "h_inverse frank(5)": lambda k: k.h_inverse(FRANK, 5.0, u, v),
        "log_density_sum clayton(2)": lambda k: k.log_density_sum(CLAYTON, 2.0, u, v),
        "empirical_copula_grid 50x50": lambda k: k.empirical_copula_grid(u, v, grid, grid),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=100_000, help="points per call")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension unavailable; timing the Python kernels only")
    print(f"{'kernel':32s} {'python s':>10s} {'cython s':>10s} {'speed-up':>9s}")
    for name, fn in cases(args.n).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:32s} {t_py:10.4f} {'-':>10s} {'-':>9s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:32s} {t_py:10.4f} {t_c:10.4f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
