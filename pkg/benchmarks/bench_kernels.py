"""Time the compiled and numpy kernel backends on synthetic data.

    python benchmarks/bench_kernels.py [--rows 13000] [--repeats 3]
"""

import argparse
import statistics
import time

import numpy as np

from crfdspam import kernels
from crfdspam.features import build_matrix
from crfdspam.synth import generate


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def fit_tree_with(impl, X, y, max_depth):
    # same loop as classifiers.fit_tree, kernel passed explicitly
    stack = [(np.arange(X.shape[0], dtype=np.int64), 0)]
    nodes = 0
    while stack:
        idx, depth = stack.pop()
        nodes += 1
        if depth >= max_depth or idx.size < 2 or y[idx].min() == y[idx].max():
            continue
        f, t, gain = impl.best_split(X, y, idx)
        if f < 0 or not gain > 1e-10:
            continue
        go_left = X[idx, f] <= t
        stack.append((idx[~go_left], depth + 1))
        stack.append((idx[go_left], depth + 1))
    return nodes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reviewers", type=int, default=2000)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    m = build_matrix(generate(args.reviewers, seed=0))
    X = np.ascontiguousarray(m.X)
    y = np.ascontiguousarray(m.y, dtype=np.int64)
    q = X[: args.queries]
    idx = np.arange(X.shape[0], dtype=np.int64)
    print(f"{X.shape[0]} rows x {X.shape[1]} features, {q.shape[0]} kNN queries, best/median of {args.repeats}")

    impls = kernels.available_backends()
    if "cython" not in impls:
        print("compiled backend not built; only the numpy fallback is timed")
    tasks = {
        "best_split (root)": lambda impl: impl.best_split(X, y, idx),
        "tree fit depth 10": lambda impl: fit_tree_with(impl, X, y, 10),
        "kneighbors k=10": lambda impl: impl.kneighbors(X, q, 10),
    }
    print(f"{'kernel':<20}" + "".join(f"{name:>22}" for name in impls) + f"{'speedup':>10}")
    for label, task in tasks.items():
        row = {name: best_of(lambda: task(impl), args.repeats) for name, impl in impls.items()}
        cells = "".join(f"{best * 1e3:>11.1f} / {med * 1e3:>6.1f} ms" for best, med in row.values())
        speed = row["python"][0] / row["cython"][0] if "cython" in row else float("nan")
        print(f"{label:<20}{cells}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
