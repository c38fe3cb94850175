"""Benchmark the compiled kernels against their pure-numpy mirrors.

Run: python benchmarks/bench_kernels.py [--repeats N]

The compiled path must be available; the numpy mirrors are imported directly,
so the comparison works regardless of the CLEANGUIDE_NUMBA flag.
"""

import argparse
import time

import numpy as np

from cleanguide.models import kernels


def timeit(fn, *args, repeats=5):
    fn(*args)  # warm up (and trigger compilation on the numba path)
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - started)
    return best, out


def flatten(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(np.asarray(o, dtype=float))
                               for o in out])
    return np.ravel(np.asarray(out, dtype=float))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        raise SystemExit("numba path unavailable (is CLEANGUIDE_NUMBA=0 set?)")

    rng = np.random.default_rng(7)
    train_x = rng.normal(0, 1, size=(4000, 12))
    train_y = rng.integers(0, 3, size=4000)
    test_x = rng.normal(0, 1, size=(1000, 12))
    logit_x = rng.normal(0, 1, size=(4000, 12))
    logit_y = (logit_x[:, 0] - 0.5 * logit_x[:, 1]
               + rng.normal(0, 0.6, 4000) > 0).astype(np.float64)
    hinge_y = 2.0 * logit_y - 1.0
    tree_g = rng.normal(0, 1, 4000)

    cases = [
        ("knn_predict (4000x12, k=9)",
         kernels.np_knn_predict, kernels.nb_knn_predict,
         (train_x, train_y, test_x, 9, 3)),
        ("logistic_newton (4000x12)",
         kernels.np_logistic_newton, kernels.nb_logistic_newton,
         (logit_x, logit_y, 1e-3, 50, 1e-10)),
        ("hinge_gd (4000x12, 800 epochs)",
         kernels.np_hinge_gd, kernels.nb_hinge_gd,
         (logit_x, hinge_y, 10.0, 0.5, 800, 1e-12)),
        ("tree_fit (4000x12, depth 3)",
         kernels.np_tree_fit, kernels.nb_tree_fit,
         (logit_x, tree_g, 3, 5)),
    ]

    print(f"{'kernel':35s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, np_fn, nb_fn, fn_args in cases:
        t_np, out_np = timeit(np_fn, *fn_args, repeats=args.repeats)
        t_nb, out_nb = timeit(nb_fn, *fn_args, repeats=args.repeats)
        if not np.allclose(flatten(out_np), flatten(out_nb), atol=1e-8):
            raise SystemExit(f"{name}: paths disagree")
        print(f"{name:35s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.1f}x")
    print("all kernels agree across paths (atol 1e-8)")


if __name__ == "__main__":
    main()
