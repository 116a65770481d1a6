"""Timing comparison of the compiled and pure-Python kernel backends.

Run as:  python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import time

import numpy as np

from localcap import (FieldContext, GridKind, MapExtent, SirParams,
                      generate_grid, origin_index)
from localcap.area_tracer import seed_boundary_point
from localcap.kernels import available_backends, get_impl


def timeit(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases():
    ts = generate_grid(GridKind.TRIANGULAR, 25.0, MapExtent(1000.0))
    ctx = FieldContext(ts, SirParams(10.0, 4.0))
    i0 = origin_index(ts)
    # seed exactly on the level set so the walk closes after one lap
    z0 = seed_boundary_point(ctx, i0)
    r0 = float(np.hypot(*z0))
    dt = r0 / 100.0
    rng = np.random.default_rng(0)
    n = 50_000
    xs = np.ascontiguousarray(rng.uniform(-500, 500, n))
    ys = np.ascontiguousarray(rng.uniform(-500, 500, n))
    order = np.ascontiguousarray(rng.permutation(n)).astype(np.intp)

    def trace(impl):
        verts, status, _ = impl.trace_levelset(
            ctx.xs, ctx.ys, i0, 10.0, 4.0, ctx.cutoff2,
            float(z0[0]), float(z0[1]), dt, 10_000, 10, 0.75 * dt,
            1e-10, 30, True)
        assert status == 0, f"trace did not close (status {status})"

    def raster(impl):
        impl.raster_count(ctx.xs, ctx.ys, i0, 10.0, 4.0, ctx.cutoff2,
                          0.0, 0.0, 0.2, 301)

    def exclusion(impl):
        impl.select_exclusion(xs, ys, order, 25.0)

    def csma(impl):
        r_int = (1e-3 * 1e-5) ** (-1.0 / 4.0)
        impl.select_csma(xs, ys, order, 1e-5, 4.0, r_int)

    def sir_batch(impl):
        for k in range(500):
            impl.sir_eval(ctx.xs, ctx.ys, i0, 0.1 * k, 7.0, 4.0,
                          ctx.cutoff2, True)

    return {
        "trace_levelset (1900 pts)": trace,
        "raster_count (301x301)": raster,
        "select_exclusion (50k nodes)": exclusion,
        "select_csma (50k nodes)": csma,
        "sir_eval x500 (1900 pts)": sir_batch,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    cases = build_cases()
    width = max(len(name) for name in cases)
    header = f"{'kernel':<{width}}" + "".join(
        f"  {b:>12}" for b in backends)
    if len(backends) > 1:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn in cases.items():
        times = [timeit(lambda impl=get_impl(b): fn(impl), args.repeat)
                 for b in backends]
        row = f"{name:<{width}}" + "".join(f"  {t * 1e3:>10.2f}ms"
                                           for t in times)
        if len(times) > 1:
            row += f"  {times[1] / times[0]:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
