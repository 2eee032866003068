"""Time the compiled GSR kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py --iters 200 --repeat 3
"""

import argparse
import math
import time

import numpy as np

from destripe import _backend
from destripe.gsr import GsrParams, SolverSettings, solve_gsr

CASES = [
    ("2D 128x128", (128, 128), (math.pi / 2,)),
    ("2D 256x256", (256, 256), (math.pi / 2,)),
    ("2D 256x256 oblique", (256, 256), (math.pi / 2 + 0.1,)),
    ("3D 16x128x128", (16, 128, 128), (math.pi / 2,)),
]


def time_case(shape, directions, backend, iters, repeat):
    u0 = np.random.default_rng(0).random(shape)
    params = GsrParams(directions=directions)
    settings = SolverSettings(max_iters=iters)
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        solve_gsr(u0, params, settings, backend=backend)
        best = min(best, time.perf_counter() - start)
    return 1e3 * best / iters


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    backends = ["python"] + (["compiled"] if _backend.HAVE_COMPILED else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'case':<22}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, shape, dirs in CASES:
        ms = [time_case(shape, dirs, b, args.iters, args.repeat) for b in backends]
        speed = f"{ms[0] / ms[-1]:9.2f}x" if len(ms) == 2 else ""
        print(f"{name:<22}" + "".join(f"{t:11.2f} ms" for t in ms) + speed)


if __name__ == "__main__":
    main()
