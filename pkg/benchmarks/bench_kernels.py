"""Compiled vs numpy difference-norm kernel.

    python3 benchmarks/bench_kernels.py [--sizes 128 256 512] [--repeat 3]

Prints one row per grid size: best-of-N wall time for each backend, the
speedup, and the max relative disagreement.  Also times a full
``difference_norm`` call through the public API on the active backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from beltrami_lab import _ext
from beltrami_lab._ext import _core_py
from beltrami_lab.grid import Grid
from beltrami_lab.spaces import SobolevIndex, difference_norm
from beltrami_lab.spaces.differences import disk_pattern


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--M", type=int, default=1)
    args = ap.parse_args(argv)

    compiled = _ext.difference_disk_mean if _ext.BACKEND == "compiled" else None
    print(f"active backend: {_ext.BACKEND}")
    print(f"{'n':>6} {'numpy [s]':>11} {'compiled [s]':>13} {'speedup':>8} {'max rel diff':>13}")
    rng = np.random.default_rng(0)
    for n in args.sizes:
        f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        offsets = np.ascontiguousarray(disk_pattern() * (n / 16))  # t = half box at L = 4
        t_py, ref = best_of(lambda: _core_py.difference_disk_mean(f, offsets, args.M), args.repeat)
        if compiled is None:
            print(f"{n:>6} {t_py:>11.4f} {'-':>13} {'-':>8} {'-':>13}")
            continue
        t_c, got = best_of(lambda: compiled(f, offsets, args.M), args.repeat)
        diff = np.max(np.abs(got - ref)) / np.max(np.abs(ref))
        print(f"{n:>6} {t_py:>11.4f} {t_c:>13.4f} {t_py / t_c:>8.1f} {diff:>13.1e}")

    g = Grid(args.sizes[-1], 4.0)
    field = g.field(np.exp(-np.pi * np.abs(g.z) ** 2))
    t, rep = best_of(lambda: difference_norm(field, SobolevIndex(0.5, 2, 2), M=args.M), 1)
    print(f"difference_norm n={g.n} ({_ext.BACKEND}): {t:.2f} s, total {rep.total:.6g}")


if __name__ == "__main__":
    main()
