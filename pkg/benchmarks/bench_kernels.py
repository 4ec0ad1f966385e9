"""Compare the numba kernels with their pure-numpy twins.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Both paths are called directly, so ALLUVIAL_NO_NUMBA does not matter here.
Outputs are checked for agreement before anything is timed.
"""
import argparse
import time

import numpy as np

from alluvial_lab import _kernels


def crossing_case(rng, flows, gaps=5, height=5):
    gap = rng.integers(0, gaps, flows)
    src = rng.integers(0, height, flows)
    tgt = rng.integers(0, height, flows)
    return gap, src, tgt


def likelihood_case(rng, rows, classes=3, features=4):
    X = rng.normal(size=(rows, features)) * 10
    means = rng.normal(size=(classes, features)) * 10
    variances = rng.uniform(0.5, 5.0, size=(classes, features))
    log_priors = np.log(np.full(classes, 1.0 / classes))
    return X, means, variances, log_priors


def best_time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)

    rows = []
    for flows in (50, 500, 5000):
        case = crossing_case(rng, flows, height=max(5, flows // 10))
        a, b = _kernels.crossings_numba(*case), _kernels.crossings_numpy(*case)
        assert a == b, (flows, a, b)
        rows.append((f"crossings f={flows}", best_time(_kernels.crossings_numba, case, args.repeat),
                     best_time(_kernels.crossings_numpy, case, args.repeat)))
    for n in (45, 5000, 200000):
        case = likelihood_case(rng, n)
        np.testing.assert_allclose(
            _kernels.joint_log_likelihood_numba(*case), _kernels.joint_log_likelihood_numpy(*case), rtol=1e-12
        )
        rows.append((f"nb likelihood n={n}", best_time(_kernels.joint_log_likelihood_numba, case, args.repeat),
                     best_time(_kernels.joint_log_likelihood_numpy, case, args.repeat)))

    print(f"{'kernel':<26}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, tn, tp in rows:
        print(f"{name:<26}{1e3 * tn:>12.4f}{1e3 * tp:>12.4f}{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
