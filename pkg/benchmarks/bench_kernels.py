"""Compare the compiled and interpreted grid kernels.

Usage: python3 benchmarks/bench_kernels.py [--sizes 50x30,200x50,576x23] [--repeat 5] [--json]

Each kernel runs on random code grids with long same-code runs, the shape
that the inverted index and the aggregation step produce.  Compilation
happens once before timing.  Reports the best of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from gridcompress import _kernels


def code_grid(rng: np.random.RandomState, m: int, n: int, distinct: int = 6) -> np.ndarray:
    # per-column runs of repeated codes, with some empties
    grid = np.zeros((m, n), dtype=np.int32)
    for j in range(n):
        i = 0
        while i < m:
            run = rng.randint(1, 40)
            grid[i:i + run, j] = rng.randint(0, distinct + 1)
            i += run
    return grid


def best_of(fn, arg, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(arg)
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="50x30,200x50,576x23,1000x100")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print JSON rows instead of a table")
    args = p.parse_args(argv)

    rng = np.random.RandomState(args.seed)
    pairs = [("rect_cover", _kernels.greedy_rect_cover_py, _kernels.greedy_rect_cover),
             ("label_components", _kernels.label_components_py, _kernels.label_components)]
    warm = code_grid(rng, 4, 4)
    for _, _, fast in pairs:
        fast(warm)

    rows = []
    for size in args.sizes.split(","):
        m, n = (int(x) for x in size.lower().split("x"))
        grid = code_grid(rng, m, n)
        for name, slow, fast in pairs:
            t_py = best_of(slow, grid, args.repeat)
            t_fast = best_of(fast, grid, args.repeat)
            rows.append({"kernel": name, "shape": f"{m}x{n}", "python_s": t_py, _kernels.BACKEND + "_s": t_fast,
                         "speedup": t_py / t_fast if t_fast else float("inf")})

    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    fast_col = _kernels.BACKEND + "_s"
    print(f"backend: {_kernels.BACKEND}")
    print(f"{'kernel':<18}{'shape':>10}{'python (ms)':>14}{_kernels.BACKEND + ' (ms)':>14}{'speedup':>10}")
    for r in rows:
        print(f"{r['kernel']:<18}{r['shape']:>10}{r['python_s'] * 1e3:>14.3f}{r[fast_col] * 1e3:>14.3f}"
              f"{r['speedup']:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
