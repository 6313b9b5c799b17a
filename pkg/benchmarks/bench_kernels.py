"""Compiled versus pure-Python kernels.

Run with ``python benchmarks/bench_kernels.py``; prints best-of-N wall
times and the speedup for batch projection and a long alternating run.
"""

import argparse
import math
import timeit

import numpy as np

from setclash import _kernels_py
from setclash.sets import AbsEpigraph, AffineSubspace, Ball, Box

try:
    from setclash import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_projection(n_points, repeat):
    rng = np.random.default_rng(0)
    X = rng.normal(scale=3, size=(n_points, 2))
    rows = []
    for s in (Ball([1, 2], 1.5), Box([-1, 0], [2, 0.5]), AbsEpigraph(0.7)):
        kind, params = s.kernel_spec()
        tp = _time(lambda: _kernels_py.dist_points(kind, params, X), repeat)
        tc = _time(lambda: compiled.dist_points(kind, params, X), repeat) if compiled else math.nan
        rows.append((f"dist_points {type(s).__name__} x{n_points}", tp, tc))
    return rows


def bench_alternating(max_iter, repeat):
    # nearly parallel lines and tangent balls converge slowly and use the full budget
    th = 1e-3
    (ka, pa), (kb, pb) = (AffineSubspace.line([0, 0], [1, 0]).kernel_spec(),
                          AffineSubspace.line([0, 0], [math.cos(th), math.sin(th)]).kernel_spec())
    cases = {
        "lines": ((ka, pa), (kb, pb), [1.0, 0.0]),
        "tangent balls": (Ball([0, 0], 1).kernel_spec(), Ball([2, 0], 1).kernel_spec(), [0.0, 3.0]),
    }
    rows = []
    for name, (a, b, x0) in cases.items():
        args = (a[0], a[1], b[0], b[1], np.array(x0), max_iter, 0.0)
        tp = _time(lambda: _kernels_py.alternating_projections(*args), repeat)
        steps = len(_kernels_py.alternating_projections(*args)[0]) - 1
        tc = _time(lambda: compiled.alternating_projections(*args), repeat) if compiled else math.nan
        rows.append((f"alternating_projections {name} x{steps}", tp, tc))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--iters", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'case':<48}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}")
    for name, tp, tc in bench_projection(args.points, args.repeat) + bench_alternating(args.iters, args.repeat):
        print(f"{name:<48}{tp:>12.4f}{tc:>14.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
