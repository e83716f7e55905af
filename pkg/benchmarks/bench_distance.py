"""Compare the compiled edit-distance kernel against the pure-Python twin.

Usage: python benchmarks/bench_distance.py [--pairs N]

The evaluation suite calls the kernel millions of times (exhaustive
oracle checks run ~15M pairs), so per-call cost dominates; this prints
per-call latency for both implementations across workload shapes.
"""

import argparse
import random
import time

from duplexkit.evaluation.distance import KERNEL, levenshtein, levenshtein_py


def workload(rng, n_pairs, length, alphabet):
    return [("".join(rng.choice(alphabet) for _ in range(length)),
             "".join(rng.choice(alphabet) for _ in range(length)))
            for _ in range(n_pairs)]


def timed(fn, pairs, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a, b in pairs:
            fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best / len(pairs)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=20_000)
    args = parser.parse_args()

    rng = random.Random(1)
    shapes = [
        ("tiny ascii (len 5)", workload(rng, args.pairs, 5, "abcde")),
        ("short cjk (len 12)", workload(rng, args.pairs, 12, "你好嗎早安晚")),
        ("medium mixed (len 40)", workload(rng, args.pairs // 4, 40,
                                           "abc你好嗎123")),
        ("long ascii (len 200)", workload(rng, max(200, args.pairs // 50),
                                          200, "abcdef")),
    ]

    print(f"active kernel: {KERNEL}")
    header = f"{'workload':<24} {'compiled us':>12} {'pure us':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, pairs in shapes:
        sample = pairs
        fast = timed(levenshtein, sample) * 1e6
        slow = timed(levenshtein_py, sample[:max(200, len(sample) // 10)]) * 1e6
        print(f"{name:<24} {fast:>12.3f} {slow:>10.3f} {slow / fast:>7.1f}x")

    for name, pairs in shapes:
        for a, b in pairs[:200]:
            assert levenshtein(a, b) == levenshtein_py(a, b)
    print("agreement spot-check: ok")


if __name__ == "__main__":
    main()
