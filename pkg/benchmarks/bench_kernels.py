#!/usr/bin/env python3
"""Time the numba and pure-numpy kernel paths side by side.

Kernel rows call both implementations directly. The pipeline row runs one
fit + debias + top-K test in a subprocess per backend, selected with
RANKINFER_DISABLE_NUMBA, so it measures what a user of either path sees.

    python benchmarks/bench_kernels.py [--n 100 --p 0.2 --L 200 --B 2000] [--json]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from rankinfer import kernels
from rankinfer.simulate import simulate_dataset, uniform_scores

WARMUP = 2
RUNS = 7

PIPELINE = """
import time
from rankinfer import kernels
from rankinfer.debias import debias
from rankinfer.estimate import solve_mle
from rankinfer.inference import test_topk
from rankinfer.simulate import simulate_dataset, uniform_scores
theta = uniform_scores({n}, 8, 10, 0)
data = simulate_dataset(theta, {p}, {L}, 1)
def run():
    fit = solve_mle(data)
    res = debias(fit.theta, data, fit.lambda0)
    test_topk(res, data, 0, 10, 0.05, {B}, 0)
run()
best = float("inf")
for _ in range(5):
    t = time.perf_counter(); run(); best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def best_time(fn, *args):
    for _ in range(WARMUP):
        fn(*args)
    times = []
    for _ in range(RUNS):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def pipeline_time(disable, args):
    env = dict(os.environ, RANKINFER_DISABLE_NUMBA="1" if disable else "0")
    code = PIPELINE.format(n=args.n, p=args.p, L=args.L, B=args.B)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, t = out.stdout.split()
    return backend, float(t)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--p", type=float, default=0.2)
    ap.add_argument("--L", type=int, default=200)
    ap.add_argument("--B", type=int, default=2000)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    data = simulate_dataset(uniform_scores(args.n, 8, 10, 0), args.p, args.L, 1)
    g = data.graph
    theta = np.random.default_rng(0).normal(size=args.n)
    Y, ybar, n = data.outcomes, data.means, args.n
    G = np.random.default_rng(1).normal(size=(args.B, n))
    src, dst = np.nonzero(~np.eye(n, dtype=bool))

    cases = [
        ("loss", (theta, g.I, g.J, ybar)),
        ("gradient", (theta, g.I, g.J, ybar, n)),
        ("hessian", (theta, g.I, g.J, n)),
        ("residuals", (theta, g.I, g.J, Y, n)),
        ("star_max", (G, 0)),
        ("span_max", (G,)),
        ("pairs_max", (G, src, dst)),
    ]
    results = []
    for name, a in cases:
        t_np = best_time(getattr(kernels, name + "_np"), *a)
        t_nb = best_time(getattr(kernels, name + "_nb"), *a)
        results.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb})
    _, t_np = pipeline_time(True, args)
    _, t_nb = pipeline_time(False, args)
    results.append({"kernel": "pipeline", "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb})

    if args.json:
        print(json.dumps({"n": n, "m": g.m, "L": args.L, "B": args.B, "results": results}, indent=2))
        return
    print(f"n={n} edges={g.m} L={args.L} B={args.B}  (best of {RUNS})")
    print(f"{'kernel':<12}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for r in results:
        print(f"{r['kernel']:<12}{1e3 * r['numpy_s']:>12.3f}{1e3 * r['numba_s']:>12.3f}{r['speedup']:>9.1f}x")


if __name__ == "__main__":
    main()
