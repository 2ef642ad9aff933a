"""Time the compiled and pure-Python loop solvers on the same workload.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

import argparse
import time

import numpy as np

from ptia import _kernels_py
from ptia.chain import NonlinearModelSpec, _build_loop
from ptia.profile import default_profile

try:
    from ptia import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    profile = default_profile()
    drive_i = np.linspace(4.2e-6, 180e-6, args.points)
    print(f"{'model':<14}{'backend':<10}{'time_s':>10}{'per_point_us':>14}{'speedup':>9}")
    for models in (NonlinearModelSpec(), NonlinearModelSpec(iv="single"), NonlinearModelSpec.linear()):
        loop = _build_loop(profile.chain, 3, models)
        drive = loop.drive(drive_i)
        call = (loop.iv, loop.inv_a, loop.vov, loop.ta, loop.gm2, loop.ib2, loop.lo, loop.hi, loop.g_lo, loop.g_hi)
        label = f"{models.iv}-{models.ta}"
        t_py = _best_of(lambda: _kernels_py.solve_loop(drive, *call, 1e-12, 200), args.repeat)
        print(f"{label:<14}{'python':<10}{t_py:>10.4f}{1e6 * t_py / args.points:>14.3f}{1.0:>9.1f}")
        if _kernels_cy is None:
            print(f"{label:<14}{'cython':<10}{'n/a':>10}")
            continue
        t_cy = _best_of(lambda: _kernels_cy.solve_loop(drive, *call, 1e-12, 200), args.repeat)
        v_py = _kernels_py.solve_loop(drive, *call, 1e-12, 200)[0]
        v_cy = _kernels_cy.solve_loop(drive, *call, 1e-12, 200)[0]
        diff = float(np.max(np.abs(v_py - v_cy)))
        print(f"{label:<14}{'cython':<10}{t_cy:>10.4f}{1e6 * t_cy / args.points:>14.3f}{t_py / t_cy:>9.1f}"
              f"   max |dv| {diff:.1e} V")


if __name__ == "__main__":
    main()
