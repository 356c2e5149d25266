"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--nodes 21] [--repeat 3]
"""

import argparse
import math
import time

import numpy as np

from safexplore import _fallback
from safexplore.dynamics import PlannerModel, TrackerModel
from safexplore.reachability.solver import default_axes, game_params

try:
    from safexplore import _core
except ImportError:  # extension not built
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=21, help="nodes per axis of the 4D grid")
    parser.add_argument("--points", type=int, default=20000, help="interpolation queries")
    parser.add_argument("--scenes", type=int, default=2000, help="disc coverage queries")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _core is None:
        parser.exit(1, "compiled extension not built; run `pip install -e . --no-build-isolation`\n")

    g = 9.81
    half = math.pi / 2
    tracker = TrackerModel(g, (half - 0.35, half + 0.35), (-0.35, 0.35), (g - 3, g + 3))
    axes = default_axes(1.0, 3.0, args.nodes)
    lo = tuple(a.lo for a in axes)
    step = tuple(a.step for a in axes)
    count = tuple(a.count for a in axes)
    periodic = tuple(a.periodic for a in axes)
    prm = game_params(PlannerModel(1.0, -1.0, 1.0), tracker)
    dt = 0.5 / _fallback.hj_max_rate(lo, step, count, prm)
    rng = np.random.default_rng(0)

    V = np.ascontiguousarray(axes[0].nodes()[:, None, None, None] + rng.uniform(0, 0.5, count))
    out = np.empty_like(V)
    drifts = _fallback.hj_drifts(lo, step, count, prm)
    pts = np.c_[rng.uniform(0, 3, args.points), rng.uniform(-3, 3, args.points), rng.uniform(-2, 2, (args.points, 2))]
    scenes = [
        (*rng.uniform(3, 7, 2), rng.uniform(0.05, 1.5), rng.uniform(3, 7, (k, 2)), rng.uniform(0.5, 2.5, k))
        for k in rng.integers(1, 6, args.scenes)
    ]

    cases = [
        (
            f"hj_sweep {args.nodes}^4",
            lambda: _core.hj_sweep(V, out, lo, step, count, prm, dt),
            lambda: _fallback.hj_sweep(V, out, lo, step, count, prm, dt, drifts),
        ),
        (
            f"interp_grad x{args.points}",
            lambda: _core.interp_grad4(V, lo, step, count, periodic, pts),
            lambda: _fallback.interp_grad(V, lo, step, count, periodic, pts),
        ),
        (
            f"disc_covered x{args.scenes}",
            lambda: [_core.disc_covered(*s) for s in scenes],
            lambda: [_fallback.disc_covered(*s) for s in scenes],
        ),
    ]
    print(f"{'kernel':<24}{'cython [s]':>12}{'python [s]':>12}{'speed-up':>10}")
    for name, fast, slow in cases:
        tc, tp = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<24}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
