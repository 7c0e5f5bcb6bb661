"""Compiled vs numpy kernels, per kernel and end to end.

    python3 benchmarks/bench_kernels.py [--size 5000] [--repeat 5]

The per-kernel table times both namespaces in this process.  The end-to-end
rows run ``geots bench`` in a subprocess, once normally and once with
``GEOTS_DISABLE_NUMBA=1``.
"""
import argparse
import json
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from geots import kernels
from geots.core import place_checkpoints
from geots.data import random_walk_dataset, write_csv
from geots.index import build_index


def best_of(fn, repeat):
    fn()  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(index, tq, eps, delta):
    node = next(nd for nd in index.nodes() if nd.leaf)
    vals = index.values[node.start:node.stop]
    sm = node.segmented
    seg = (sm.upper, sm.lower, sm.seg_of, sm.seg_k, sm.links, tq, eps)
    cps = place_checkpoints(index.n, delta).positions
    return {
        "band_runs_sweep": lambda k: k.band_runs_sweep(vals, vals, tq, eps),
        "band_runs_checkpoint": lambda k: k.band_runs_checkpoint(vals, vals, tq, eps, cps),
        "band_verify": lambda k: k.band_verify(sm.upper, sm.lower, tq, eps, cps, delta),
        "seg_bound_sweep": lambda k: k.seg_bound_sweep(*seg),
        "seg_bound_checkpoint": lambda k: k.seg_bound_checkpoint(*seg, cps),
        "seg_verify": lambda k: k.seg_verify(*seg, cps, delta),
    }


def end_to_end(csv_path, disable):
    env = dict(os.environ, GEOTS_DISABLE_NUMBA="1" if disable else "0", GEOTS_THREADS="1")
    cmd = [sys.executable, "-m", "geots.cli", "bench", csv_path, "--index", "sbtsr",
           "--kind", "rr", "--queries", "50", "--eps-pct", "2.5"]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)["aggregate"]["mean_wall_ms"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    ds = random_walk_dataset(args.size, seed=1)
    index = build_index(ds, "sbtsr")
    tq = ds.values[0]
    lo, hi = ds.value_range
    eps, delta = 0.075 * (hi - lo), 20
    spaces = [kernels.numpy_kernels]
    if kernels.HAVE_NUMBA:
        spaces.append(kernels.jit_kernels)

    print(f"{'kernel':24s}" + "".join(f"{k.name + ' us':>14s}" for k in spaces) + f"{'speedup':>10s}")
    for name, call in kernel_cases(index, tq, eps, delta).items():
        t = [best_of(lambda k=k: call(k), args.repeat) * 1e6 for k in spaces]
        speed = f"{t[0] / t[-1]:9.1f}x" if len(t) > 1 else ""
        print(f"{name:24s}" + "".join(f"{v:14.1f}" for v in t) + speed)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "data.csv")
        write_csv(ds, path)
        numpy_ms = end_to_end(path, disable=True)
        jit_ms = end_to_end(path, disable=False)
    print(f"\nend to end rr workload, mean ms/query: numpy {numpy_ms:.2f}, "
          f"jit {jit_ms:.2f}, speedup {numpy_ms / jit_ms:.1f}x")


if __name__ == "__main__":
    main()
