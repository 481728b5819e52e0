"""Compare the compiled stencil core against the pure-numpy fallback.

Times the periodic central-difference kernel on tensor-field-sized arrays
and a full fd2 leapfrog step driven through each kernel.  Run as

    python3 benchmarks/bench_kernels.py [--sizes 16 32 48] [--repeats 20]
"""

import argparse
import time

import numpy as np

from micromorph import _kernels
from micromorph.dynamics import estimate_stable_dt, random_state, step_leapfrog
from micromorph.fields import Grid
from micromorph.materials import MaterialParams, Variant


def time_fn(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_diff(n, repeats):
    rng = np.random.default_rng(0)
    values = rng.standard_normal((n, n, n, 9))
    h = 2 * np.pi / n
    rows = {}
    rows["numpy"] = time_fn(lambda: [_kernels.numpy_diff_axis_periodic(values, a, h) for a in range(3)], repeats)
    if _kernels.HAVE_COMPILED:
        rows["compiled"] = time_fn(
            lambda: [_kernels._compiled_diff_axis_periodic(values, a, h) for a in range(3)], repeats
        )
    return rows


def bench_step(n, repeats, use_compiled):
    # swap the module-level kernel selection for the duration of the runs
    previous = _kernels.diff_axis_periodic
    _kernels.diff_axis_periodic = (
        _kernels._compiled_diff_axis_periodic if use_compiled else _kernels.numpy_diff_axis_periodic
    )
    try:
        grid = Grid(n, "fd2")
        p = MaterialParams(1, 0, 0, 1, 0, 1, 1, 1, Variant.RELAXED)
        s = random_state(grid, np.random.default_rng(0), 0.5)
        dt = 0.5 * estimate_stable_dt(p, grid)
        step_leapfrog(s, p, dt=dt)  # warm
        return time_fn(lambda: step_leapfrog(s, p, dt=dt), repeats)
    finally:
        _kernels.diff_axis_periodic = previous


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 48])
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    print(f"compiled extension available: {_kernels.HAVE_COMPILED}")
    print()
    print(f"{'n':>4}  {'kernel':>10}  {'3-axis diff (ms)':>17}  {'speedup':>8}")
    for n in args.sizes:
        rows = bench_diff(n, args.repeats)
        base = rows["numpy"]
        for name, t in rows.items():
            speed = f"{base / t:.2f}x" if name != "numpy" else ""
            print(f"{n:>4}  {name:>10}  {t * 1e3:>17.3f}  {speed:>8}")
    if not _kernels.HAVE_COMPILED:
        return

    print()
    print(f"{'n':>4}  {'kernel':>10}  {'fd2 leapfrog step (ms)':>23}  {'speedup':>8}")
    for n in args.sizes:
        if (n & (n - 1)) != 0:
            continue
        t_np = bench_step(n, max(3, args.repeats // 4), use_compiled=False)
        t_cy = bench_step(n, max(3, args.repeats // 4), use_compiled=True)
        print(f"{n:>4}  {'numpy':>10}  {t_np * 1e3:>23.3f}  {'':>8}")
        print(f"{n:>4}  {'compiled':>10}  {t_cy * 1e3:>23.3f}  {t_np / t_cy:>7.2f}x")


if __name__ == "__main__":
    main()
