"""Time the numba kernels against their pure-numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Both variants are imported directly, so the SELBIAS_DISABLE_NUMBA flag does
not matter here. The first numba call (compilation) is excluded from timing.
"""

import argparse
import timeit

import numpy as np

from selbias import _kernels
from selbias._accel import HAVE_NUMBA
from selbias.clustering import fit_tree
from selbias.kernels import KernelSpec, cross_gram


def cases(scale, rng):
    n = int(2000 * scale)
    X, Y = rng.normal(size=(n, 13)), rng.normal(size=(n // 2, 13))
    yield "sq_dists", (X, Y)

    m = int(300 * scale)
    S, U = rng.normal(size=(m, 5)) + 0.3, rng.normal(size=(3 * m, 5))
    spec = KernelSpec(2.0)
    K = cross_gram(spec, S, S)
    r = cross_gram(spec, S, U).sum(axis=1)
    step = m**2 / (2 * np.linalg.eigvalsh(K)[-1])
    yield "kmm_pgd", (K, r, U.shape[0], 1000.0, float(m), float(m), np.ones(m), step, 1e-10, 2000, False)

    Xt = rng.normal(size=(int(1000 * scale), 13))
    yt = Xt[:, 0] ** 2 + rng.normal(size=Xt.shape[0])
    yield "best_split", (Xt, yt, 4)

    tree = fit_tree(Xt, yt)
    Xr = rng.normal(size=(int(50_000 * scale), 13))
    yield "route", (Xr, tree.feature, tree.threshold, tree.left, tree.right, tree.leaf)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy variants are timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for name, inputs in cases(args.scale, rng):
        f_np = getattr(_kernels, f"{name}_np")
        t_np = min(timeit.repeat(lambda: f_np(*inputs), number=1, repeat=args.repeat))
        if HAVE_NUMBA:
            f_nb = getattr(_kernels, f"{name}_nb")
            f_nb(*inputs)  # compile
            t_nb = min(timeit.repeat(lambda: f_nb(*inputs), number=1, repeat=args.repeat))
            print(f"{name:<12} {1e3 * t_np:12.2f} {1e3 * t_nb:12.2f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{name:<12} {1e3 * t_np:12.2f} {'-':>12} {'-':>8}")


if __name__ == "__main__":
    main()
