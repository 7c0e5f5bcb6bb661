import os
import subprocess
import sys

import numpy as np
import pytest

from geots import kernels
from geots.core import place_checkpoints
from geots.mbts import SegmentedMBTS, build_mbts, cluster_k, segment_bounds

pytestmark = pytest.mark.skipif(kernels.jit_kernels is None, reason="numba not installed")

NP, JIT = kernels.numpy_kernels, kernels.jit_kernels


def random_case(rng):
    n = int(rng.integers(3, 50))
    k = int(rng.integers(1, 5))
    base = np.cumsum(rng.normal(size=(k, n)), axis=1)
    w = rng.uniform(0, 1.5, (k, n))
    tq = np.cumsum(rng.normal(size=n))
    eps = float(rng.uniform(0, 2))
    delta = int(rng.integers(1, n + 1))
    return base + w, base - w, tq, eps, place_checkpoints(n, delta).positions, delta


def random_segmented(rng):
    n = int(rng.integers(4, 50))
    s = int(rng.integers(1, min(n, 6) + 1))
    values = np.cumsum(rng.normal(size=(int(rng.integers(2, 15)), n)), axis=1)
    seg_start = segment_bounds(n, s)
    parts = []
    for t in range(s):
        lo, hi = seg_start[t], seg_start[t + 1]
        groups = cluster_k(values[:, lo:hi], int(rng.integers(1, 4)), seed=t)
        parts.append([build_mbts(values[g, lo:hi], members=g) for g in groups])
    sm = SegmentedMBTS.from_segments(seg_start, parts)
    tq = values[0] + rng.normal(0, 1, n)
    delta = int(rng.integers(1, n + 1))
    args = (sm.upper, sm.lower, sm.seg_of, sm.seg_k, sm.links, tq, float(rng.uniform(0.1, 2)))
    return args, place_checkpoints(n, delta).positions, delta


def same(a, b):
    return np.array_equal(np.asarray(a[0]), np.asarray(b[0])) and a[1] == b[1]


def test_band_kernels_agree():
    rng = np.random.default_rng(0)
    for _ in range(400):
        up, lo, tq, eps, cps, delta = random_case(rng)
        assert same(NP.band_runs_sweep(up, lo, tq, eps), JIT.band_runs_sweep(up, lo, tq, eps))
        assert same(NP.band_runs_checkpoint(up, lo, tq, eps, cps),
                    JIT.band_runs_checkpoint(up, lo, tq, eps, cps))
        assert same(NP.band_verify(up, lo, tq, eps, cps, delta),
                    JIT.band_verify(up, lo, tq, eps, cps, delta))


def test_segment_kernels_agree():
    rng = np.random.default_rng(1)
    for _ in range(300):
        args, cps, delta = random_segmented(rng)
        assert same(NP.seg_bound_sweep(*args), JIT.seg_bound_sweep(*args))
        assert same(NP.seg_bound_checkpoint(*args, cps), JIT.seg_bound_checkpoint(*args, cps))
        assert same(NP.seg_verify(*args, cps, delta), JIT.seg_verify(*args, cps, delta))


def test_checkpoint_runs_reach_delta_iff_sweep_does():
    rng = np.random.default_rng(2)
    for _ in range(300):
        up, lo, tq, eps, cps, delta = random_case(rng)
        full, _ = NP.band_runs_sweep(up, lo, tq, eps)
        cp, _ = NP.band_runs_checkpoint(up, lo, tq, eps, cps)
        assert np.array_equal(full >= delta, cp >= delta)
        assert np.all(cp <= full)
        # the checkpoint walk tests each cell at most once
        assert NP.band_runs_checkpoint(up, lo, tq, eps, cps)[1] <= up.size


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_path(flag, expected):
    env = {**os.environ, "GEOTS_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", "from geots import kernels; print(kernels.active.name)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
