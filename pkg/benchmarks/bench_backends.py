"""Time the compiled and numpy kernels on the same inputs.

    python3 benchmarks/bench_backends.py [--repeat 3]

Compilation happens in a warm-up call and is not timed.
"""

import argparse
import time

import numpy as np

from yuletree import _numba_kernels as nb
from yuletree import _numpy_kernels as npk
from yuletree.geometry import hausdorff_grid


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    pts = hausdorff_grid(np.zeros(2), 0.45, 0.02)
    seg = nb.grow(2, 6.0, 1.0, 10**7, np.random.default_rng(0))
    return {
        "grow rate=8 x50": lambda k: [k.grow(2, 8.0, 1.0, 10**7, np.random.default_rng(s)) for s in range(50)],
        "min_distances 1517 pts": lambda k: k.min_distances(pts, seg[0], seg[1]),
        "branch max displacement 1e4 rate=16": lambda k: k.branch_max_displacement(
            16.0, 1.0, 2, 10**4, np.random.default_rng(1)),
        "fe_solve h=0.1 t=1": lambda k: k.fe_solve(1.0, 0.3, 0.1, 0.1, 10, 17, 16, 16, 0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'case':40s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        a = best_of(lambda: fn(nb), args.repeat)
        b = best_of(lambda: fn(npk), args.repeat)
        print(f"{name:40s} {a:10.4f} {b:10.4f} {b / a:8.1f}")


if __name__ == "__main__":
    main()
