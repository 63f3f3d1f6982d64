"""Time one step of each solver backend on the same splashing pool.

    python benchmarks/bench_backends.py --sizes 31 61 121 --steps 200
"""

import argparse
import math
import time

import numpy as np

from splashsim import backend
from splashsim.engine import create_state, step
from splashsim.objects import RigidObject
from splashsim.params import FluidParams
from splashsim.volume import ColumnGrid


def make_state(n: int, name: str, workers: int):
    p = FluidParams(dx=2.0 / n, dy=2.0 / n)
    r = 0.07
    ball = RigidObject.sphere(r, 2500 * 4 / 3 * math.pi * r ** 3, 0.3 + r, s_dot=-5.0, xy=(1.0, 1.0))
    grid = ColumnGrid.from_depth(np.full((n, n), 0.3), p)
    return create_state(p, grid, [ball], backend=name, workers=workers)


def time_backend(n: int, name: str, steps: int, workers: int) -> float:
    state = make_state(n, name, workers)
    step(state)  # warm-up
    t0 = time.perf_counter()
    for _ in range(steps):
        step(state)
    return (time.perf_counter() - t0) / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[31, 61, 121])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--reference-steps", type=int, default=10,
                    help="steps for the scalar reference, which is orders of magnitude slower")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    names = backend.available()
    print(f"{'grid':>6} " + " ".join(f"{n + ' ms/step':>18}" for n in names) + "  speedup vs reference")
    for n in args.sizes:
        cost = {}
        for name in names:
            steps = args.reference_steps if name == "reference" else args.steps
            cost[name] = time_backend(n, name, steps, args.workers)
        row = f"{n:>6} " + " ".join(f"{1e3 * cost[name]:>18.3f}" for name in names)
        if "reference" in cost:
            row += "  " + ", ".join(f"{name} {cost['reference'] / cost[name]:.0f}x"
                                    for name in names if name != "reference")
        print(row)


if __name__ == "__main__":
    main()
