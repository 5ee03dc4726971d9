"""Compare the compiled and plain numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--n 100000] [--d 32] [--k 32]
                                        [--repeats 5]

Agreement between the backends is asserted on the benchmark inputs before
anything is timed: bitwise for nearest_centers, cluster_mean_std,
vlad_sums and gmm_log_joint (both paths accumulate in the same order),
1e-12 relative for fv_accumulate. Reported times are best-of-N wall
clock; the compiled path is called once beforehand so JIT compilation is
not timed.
"""

import argparse
import time

import numpy as np

from setenc._kernels import get_backend


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _assert_bitwise(a, b, name):
    if isinstance(a, tuple):
        pairs = zip(a, b)
    else:
        pairs = [(a, b)]
    for x, y in pairs:
        if np.asarray(x).tobytes() != np.asarray(y).tobytes():
            raise AssertionError(f"{name}: backends disagree bitwise")


def _assert_close(a, b, name):
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12,
                                   err_msg=f"{name}: backends disagree")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=100_000,
                        help="number of instance vectors")
    parser.add_argument("--d", type=int, default=32,
                        help="vector dimension")
    parser.add_argument("--k", type=int, default=32,
                        help="number of clusters / components")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; best is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    pts = rng.normal(size=(args.n, args.d))
    centers = rng.normal(scale=2.0, size=(args.k, args.d))
    stds = rng.uniform(0.3, 1.5, size=(args.k, args.d))
    inv_std = 1.0 / stds
    weights = rng.uniform(0.2, 1.0, size=args.k)
    weights /= weights.sum()
    comp_const = np.log(weights) - np.log(stds).sum(axis=1) \
        - 0.5 * args.d * np.log(2.0 * np.pi)

    np_k = get_backend("numpy")
    try:
        nb_k = get_backend("numba")
    except RuntimeError as exc:
        print(f"cannot benchmark: {exc}")
        return 1

    assign, _ = np_k["nearest_centers"](pts, centers)
    post = rng.uniform(0.0, 1.0, size=(args.n, args.k))
    post /= post.sum(axis=1, keepdims=True)

    cases = [
        ("nearest_centers", (pts, centers), _assert_bitwise),
        ("cluster_mean_std", (pts, assign, args.k), _assert_bitwise),
        ("vlad_sums", (pts, assign, centers), _assert_bitwise),
        ("gmm_log_joint", (pts, centers, inv_std, comp_const),
         _assert_bitwise),
        ("fv_accumulate", (pts, post, centers, inv_std), _assert_close),
    ]

    print(f"n={args.n} d={args.d} k={args.k} repeats={args.repeats}")
    print(f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call_args, check in cases:
        small = tuple(a[:64] if isinstance(a, np.ndarray)
                      and a.ndim >= 1 and a.shape[0] == args.n else a
                      for a in call_args)
        nb_k[name](*small)  # compile outside the timed region
        result_np = np_k[name](*call_args)
        result_nb = nb_k[name](*call_args)
        check(result_np, result_nb, name)
        t_np = _best_of(lambda: np_k[name](*call_args), args.repeats)
        t_nb = _best_of(lambda: nb_k[name](*call_args), args.repeats)
        print(f"{name:<18} {t_np:>9.4f}s {t_nb:>9.4f}s "
              f"{t_np / t_nb:>7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
