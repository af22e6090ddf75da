"""Compiled core against the numpy fallback on the gain quadrature.

    python benchmarks/bench_core.py [--n 512] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from coagkin._core import BACKEND, _fallback
from coagkin.grid import make_grid, pair_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    grid = make_grid(n=args.n)
    tab = pair_table(grid)
    f = np.ascontiguousarray(grid.sample(lambda x: np.exp(-x)).values)
    g = np.ascontiguousarray(grid.sample(lambda x: 4.0 * x * np.exp(-2.0 * x)).values)
    common = (tab.rows, tab.w, tab.pidx, tab.pcoef, tab.qidx, tab.qcoef)

    impls = {"numpy": _fallback}
    try:
        from coagkin._core import _kernels
        impls["cython"] = _kernels
    except ImportError:
        print("compiled extension not built; timing the fallback only")

    print(f"N = {args.n}, pairs = {tab.rows.size}, active backend = {BACKEND}")
    times = {}
    for name, mod in impls.items():
        t_apply = min(timeit.repeat(lambda: mod.pair_apply(*common, f, g, grid.n), number=1, repeat=args.repeat))
        t_jac = min(timeit.repeat(lambda: mod.pair_jacobian(*common, g, grid.n), number=1,
                                  repeat=max(3, args.repeat // 4)))
        times[name] = (t_apply, t_jac)
        print(f"{name:>7}: pair_apply {1e3 * t_apply:8.3f} ms   pair_jacobian {1e3 * t_jac:8.3f} ms")
    if len(times) == 2:
        a = _fallback.pair_apply(*common, f, g, grid.n)
        b = impls["cython"].pair_apply(*common, f, g, grid.n)
        print(f"max |cython - numpy| = {np.max(np.abs(a - b)):.3e}")
        print(f"speed-up: apply {times['numpy'][0] / times['cython'][0]:.1f}x, "
              f"jacobian {times['numpy'][1] / times['cython'][1]:.1f}x")


if __name__ == "__main__":
    main()
