import math

import numpy as np
import pytest

from geots.core import Dataset, GeoTimeSeries, InputError
from geots.data import random_walk_dataset
from geots.index import IndexConfig, build_index, range_scan
from geots.oracle import oracle
from geots.query import QuerySpec, run_query

from conftest import SMALL

KINDS = ["btsr", "sbtsr"]


def run_series(n, length, start=0):
    v = np.full(n, 9.0)
    v[start:start + length] = 0.0
    return v


@pytest.fixture(scope="module")
def scene():
    # Five series within distance 10 of the origin with run lengths 3, 5, 7,
    # 2, 4 and one far away with a full-length run.
    runs = [3, 5, 7, 2, 4, 12]
    locs = [(1, 0), (0, 2), (3, 3), (-4, 1), (0, -6), (50, 50)]
    values = np.stack([run_series(12, r, start=i % 3) for i, r in enumerate(runs)])
    ds = Dataset(np.arange(10, 16), np.array(locs, float), values)
    return ds, {kind: build_index(ds, kind, IndexConfig(m=2, M=4, k_mbts=2, segments=3))
                for kind in KINDS}


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("method", ["sweep", "checkpoint"])
def test_rr_scene(scene, kind, method, kern):
    ds, indexes = scene
    tq = GeoTimeSeries(0, (0, 0), np.zeros(12))
    spec = QuerySpec(tq, "rr", eps=0.5, rho=10.0, delta=5, method=method)
    res = run_query(indexes[kind], spec)
    assert res.ids == [11, 12]
    assert [h.sigma for h in res.hits] == [5, 7]
    assert res.hits == oracle(ds, spec).hits


@pytest.mark.parametrize("kind", KINDS)
def test_kr_scene_skips_nearest(scene, kind, kern):
    ds, indexes = scene
    tq = GeoTimeSeries(0, (0, 0), np.zeros(12))
    res = run_query(indexes[kind], QuerySpec(tq, "kr", eps=0.5, delta=5, k=2))
    # the nearest series (id 10, sigma 3) fails the threshold
    assert res.ids == [11, 12]
    res = run_query(indexes[kind], QuerySpec(tq, "kr", eps=0.5, delta=5, k=5))
    assert res.ids == [11, 12, 15] and res.exhausted


@pytest.mark.parametrize("kind", KINDS)
def test_rk_scene(scene, kind, kern):
    ds, indexes = scene
    tq = GeoTimeSeries(0, (0, 0), np.zeros(12))
    res = run_query(indexes[kind], QuerySpec(tq, "rk", eps=0.5, rho=10.0, k=3))
    assert res.ids == [12, 11, 14]
    assert [h.sigma for h in res.hits] == [7, 5, 4]
    res = run_query(indexes[kind], QuerySpec(tq, "rk", eps=0.5, rho=10.0, k=50))
    assert len(res.hits) == 5 and res.exhausted


@pytest.mark.parametrize("kind", KINDS)
def test_unbounded_rr_returns_everything(walk300, kind, btsr300, sbtsr300):
    index = {"btsr": btsr300, "sbtsr": sbtsr300}[kind]
    tq = walk300.series(0)
    res = run_query(index, QuerySpec(tq, "rr", eps=math.inf, rho=math.inf, delta=1))
    assert res.ids == sorted(walk300.ids.tolist())
    assert all(h.sigma == walk300.n for h in res.hits)


def test_rr_matches_range_scan(btsr300, walk300):
    tq = walk300.series(7)
    res = run_query(btsr300, QuerySpec(tq, "rr", eps=math.inf, rho=250.0, delta=1))
    assert res.ids == range_scan(btsr300, tq.loc, 250.0)


@pytest.mark.parametrize("kind", KINDS)
def test_rk_finds_identical_series(btsr300, sbtsr300, walk300, kind):
    index = {"btsr": btsr300, "sbtsr": sbtsr300}[kind]
    tq = walk300.series(42)
    res = run_query(index, QuerySpec(tq, "rk", eps=0.0, rho=0.0, k=1))
    assert res.ids == [tq.id] and res.hits[0].sigma == walk300.n


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("qkind", ["rr", "kr", "rk"])
def test_sweep_and_checkpoint_agree_with_oracle(btsr300, sbtsr300, walk300, kind, qkind, kern):
    index = {"btsr": btsr300, "sbtsr": sbtsr300}[kind]
    rng = np.random.default_rng(11)
    lo, hi = walk300.value_range
    for row in rng.choice(len(walk300), 15, replace=False):
        tq = walk300.series(int(row))
        kw = {"rr": dict(rho=300.0, delta=8), "kr": dict(delta=8, k=6),
              "rk": dict(rho=300.0, k=6)}[qkind]
        eps = 0.05 * (hi - lo)
        answers = [run_query(index, QuerySpec(tq, qkind, eps=eps, method=m, **kw))
                   for m in ("sweep", "checkpoint")]
        expected = oracle(walk300, QuerySpec(tq, qkind, eps=eps, **kw)).hits
        assert answers[0].hits == expected
        assert answers[1].hits == expected


def test_counters_populated(sbtsr300, walk300):
    res = run_query(sbtsr300, QuerySpec(walk300.series(1), "rr", eps=3.0, rho=300.0, delta=10))
    c = res.counters
    assert c.nodes_visited >= 1 and c.leaves_visited <= c.nodes_visited
    assert c.margin_comparisons > 0


def test_query_length_mismatch(btsr300):
    tq = GeoTimeSeries(0, (0, 0), np.zeros(5))
    with pytest.raises(InputError):
        run_query(btsr300, QuerySpec(tq, "rr", eps=1.0, rho=1.0, delta=1))


@pytest.mark.parametrize("kw", [
    dict(kind="rr", eps=1.0, rho=1.0),
    dict(kind="rr", eps=1.0, rho=1.0, delta=1, k=3),
    dict(kind="kr", eps=1.0, delta=1, k=3, rho=1.0),
    dict(kind="rk", eps=-1.0, rho=1.0, k=3),
    dict(kind="rk", eps=1.0, rho=1.0, k=0),
    dict(kind="xx", eps=1.0),
    dict(kind="rr", eps=1.0, rho=1.0, delta=1, method="fast"),
])
def test_spec_validation(kw):
    with pytest.raises(InputError):
        QuerySpec(GeoTimeSeries(0, (0, 0), [1.0]), **kw)


def test_single_series_index():
    ds = random_walk_dataset(1, n=10, seed=3)
    for kind in KINDS:
        index = build_index(ds, kind, SMALL if kind == "btsr" else IndexConfig(segments=2))
        res = run_query(index, QuerySpec(ds.series(0), "rk", eps=0.0, rho=1.0, k=3))
        assert res.ids == [0] and res.exhausted
