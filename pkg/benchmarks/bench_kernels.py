"""Time each hot kernel under numba and numpy on realistic sizes.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from diurnalvol import _kernels as K


def cases(rng):
    n, k = 23400, 51
    r = rng.standard_normal(n) * 1e-3
    w = np.minimum(np.arange(1, k) / k, 1 - np.arange(1, k) / k)
    v = K.preaverage_numpy(r, w)
    N = n - 2 * k + 2
    y = np.abs(v[:N]) * np.abs(v[k:k + N])
    d = K.block_increments_numpy(y, 1700)
    u = rng.standard_normal((199, d.size))
    panel = rng.standard_normal((500, 4680))
    z1, z2 = rng.standard_normal((2, 23400))
    fargs = (z1, z2, 1 / 23400, 0.1, 0.0, -0.00137, -1.386, 0.25)
    return {
        "preaverage n=23400 k=51": ("preaverage", (r, w)),
        "power_products n=23400": ("power_products", (v, k, N, 2.0, 2.0, 0.01)),
        "block_increments b=1700": ("block_increments", (y, 1700)),
        "bootstrap_sums B=199": ("bootstrap_sums", (u, d, d * 0.5)),
        "bin_autocov 500x4680 m=78": ("bin_autocov", (panel, 78, 4)),
        "factor_paths 23400 steps": ("factor_paths", (*fargs,)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, (name, a) in cases(rng).items():
        f_np = getattr(K, name + "_numpy")
        f_nb = getattr(K, name + "_numba")
        f_nb(*a)  # compile
        t_np = min(timeit.repeat(lambda: f_np(*a), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*a), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:28s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
