"""Compare the compiled and numpy Monte Carlo kernels on the same workload.

    python benchmarks/bench_kernels.py [--targets 72] [--trials 100000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from profilerisk._backend import get_kernels


def workload(n_targets: int, seed: int):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 11, size=n_targets).astype(np.int64)
    truth = np.array([rng.integers(0, s) for s in sizes], dtype=np.int64)
    return sizes, truth


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--targets", type=int, default=72)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    sizes, truth = workload(args.targets, 0)
    results = {}
    for name in ("compiled", "python"):
        try:
            k = get_kernels(name)
        except ImportError as exc:
            print(f"{name:9s} unavailable ({exc})")
            continue
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            out = k.mc_failures(sizes, truth, args.trials, 12345)
            best = min(best, time.perf_counter() - t0)
        results[name] = np.asarray(out)
        draws = args.targets * args.trials
        print(f"{name:9s} best {best * 1e3:8.1f} ms  ({draws / best / 1e6:6.1f} M draws/s)")
    if len(results) == 2:
        same = np.array_equal(results["compiled"], results["python"])
        print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()
