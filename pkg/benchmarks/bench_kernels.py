"""Time the numba kernels against the pure-numpy fallback.

Runs every kernel under both implementations on the same inputs, checks
they agree, and prints per-kernel medians with the speedup. The numba
functions are called once before timing so JIT compilation stays out of
the numbers.

    python3 benchmarks/bench_kernels.py --n 2000 --dim 64 --repeats 5
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from provdetect._kernels import numpy_impl
from provdetect.baselines import iforest_fit

try:
    from provdetect._kernels import numba_impl
except ImportError:
    numba_impl = None


def _median_time(fn, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return float(np.median(samples))


def build_cases(n: int, dim: int, seed: int) -> dict:
    """One (name -> (impl -> closure, checker)) entry per kernel."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, dim))
    D2 = numpy_impl.pairwise_sq_dists(X)
    target = math.log(30.0)
    P, _ = numpy_impl.perplexity_search(D2, target)
    P_joint = np.maximum((P + P.T) / (2.0 * n), 1e-12)
    Y = 1e-4 * rng.standard_normal((n, 2))

    forest = iforest_fit(X, psi=min(256, n), n_trees=50, seed=seed)
    trees = forest.trees

    def depths(impl):
        total = np.zeros(n)
        for t in trees:
            total += impl.iforest_depths(
                t.feature, t.threshold, t.left, t.right, t.adjust, X
            )
        return total

    return {
        "pairwise_sq_dists": lambda impl: impl.pairwise_sq_dists(X),
        "perplexity_search": lambda impl: impl.perplexity_search(D2, target),
        "tsne_forces": lambda impl: impl.tsne_forces(P_joint, P_joint, Y),
        "iforest_depths": depths,
    }


def _first_array(result):
    if isinstance(result, tuple):
        return result[0]
    return result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--n", type=int, default=2000, help="number of rows")
    parser.add_argument("--dim", type=int, default=64, help="row width")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cases = build_cases(args.n, args.dim, args.seed)
    print(f"n={args.n} dim={args.dim} repeats={args.repeats}")
    if numba_impl is None:
        print("numba not importable; timing the numpy fallback only\n")
    header = f"{'kernel':<20} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, run in cases.items():
        t_np = _median_time(lambda: run(numpy_impl), args.repeats)
        if numba_impl is None:
            print(f"{name:<20} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
            continue
        run(numba_impl)  # JIT warm-up
        np.testing.assert_allclose(
            _first_array(run(numba_impl)),
            _first_array(run(numpy_impl)),
            atol=1e-8,
        )
        t_nb = _median_time(lambda: run(numba_impl), args.repeats)
        print(
            f"{name:<20} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms "
            f"{t_np / t_nb:>7.1f}x"
        )


if __name__ == "__main__":
    main()
