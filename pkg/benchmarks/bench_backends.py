"""Timing comparison of the compiled and the pure-numpy hypervolume kernels.

Runs itself once per backend in a subprocess (the backend is fixed at
import time by ``COMOCMA_BACKEND``) and prints one table: median
microseconds per call, numpy vs numba, per front size.

    python3 benchmarks/bench_backends.py [--sizes 10,100,1000] [--repeats 200]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

REF = (1.1, 1.1)


def staircase_points(rng, m):
    """m mutually non-dominated points strictly inside the reference box."""
    x = np.sort(rng.uniform(0.0, 1.05, size=m))
    y = np.sort(rng.uniform(0.0, 1.05, size=m))[::-1]
    return np.column_stack([x, y])


def median_micros(fn, repeats):
    fn()  # warm-up; also triggers JIT compilation on the numba backend
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples) * 1e6)


def run_worker(sizes, repeats, batch):
    from comocma import BACKEND, ParetoFront

    rng = np.random.default_rng(7)
    out = {"backend": BACKEND, "timings": {}}
    for m in sizes:
        front = ParetoFront(REF, staircase_points(rng, m))
        queries = rng.uniform(0.0, 1.2, size=(batch, 2))
        one = rng.uniform(0.0, 1.2, size=2)
        fresh = staircase_points(rng, m)
        out["timings"][str(m)] = {
            "hypervolume": median_micros(front.hypervolume, repeats),
            "uhvi_batch(%d)" % batch:
                median_micros(lambda: front.uhvi_batch(queries), repeats),
            "distance": median_micros(
                lambda: front.distance_to_empirical_front(one), repeats),
            "insert_many(%d)" % m: median_micros(
                lambda: ParetoFront(REF).insert_many(fresh), repeats),
        }
    json.dump(out, sys.stdout)


def collect(backend, args):
    env = dict(os.environ, COMOCMA_BACKEND=backend)
    cmd = [sys.executable, __file__, "--worker",
           "--sizes", args.sizes, "--repeats", str(args.repeats),
           "--batch", str(args.batch)]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True,
                          check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="10,100,1000")
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    if args.worker:
        run_worker(sizes, args.repeats, args.batch)
        return 0

    results = {b: collect(b, args) for b in ("numpy", "numba")}
    for b in results:
        if results[b]["backend"] != b:
            raise RuntimeError("%s backend unavailable" % b)

    print("front size  operation            numpy us    numba us    speedup")
    for m in sizes:
        for op in results["numpy"]["timings"][str(m)]:
            a = results["numpy"]["timings"][str(m)][op]
            c = results["numba"]["timings"][str(m)][op]
            print("%9d  %-20s %9.1f  %9.1f  %8.1fx" % (m, op, a, c, a / c))
    return 0


if __name__ == "__main__":
    sys.exit(main())
