import math

import numpy as np

from geots.core import Dataset, GeoTimeSeries, local_similarity
from geots.data import random_walk_dataset
from geots.oracle import oracle, similarity_scores
from geots.query import QuerySpec

from conftest import tiny_dataset


def test_scores_match_local_similarity():
    ds = random_walk_dataset(60, n=30, seed=9)
    tq = ds.values[3] + 0.3
    got = similarity_scores(ds.values, tq, 1.0)
    assert got.tolist() == [local_similarity(v, tq, 1.0) for v in ds.values]


def test_empty_result():
    ds = tiny_dataset([[0, 0, 0], [1, 1, 1]])
    tq = GeoTimeSeries(0, (0, 0), [50, 50, 50])
    assert oracle(ds, QuerySpec(tq, "rr", eps=1.0, rho=100.0, delta=1)).hits == []
    assert oracle(ds, QuerySpec(tq, "rk", eps=1.0, rho=100.0, k=3)).hits == []


def test_single_series():
    ds = tiny_dataset([[1, 2, 3]])
    tq = GeoTimeSeries(0, (0, 0), [1, 2, 30])
    hits = oracle(ds, QuerySpec(tq, "kr", eps=0.0, delta=2, k=4)).hits
    assert [tuple(h) for h in hits] == [(0, 0.0, 2)]


def test_permutation_invariance():
    ds = random_walk_dataset(80, n=20, seed=4)
    perm = np.random.default_rng(0).permutation(80)
    shuffled = Dataset(ds.ids[perm], ds.locs[perm], ds.values[perm])
    tq = ds.series(5)
    for spec in (QuerySpec(tq, "rr", eps=2.0, rho=400.0, delta=4),
                 QuerySpec(tq, "kr", eps=2.0, delta=4, k=7),
                 QuerySpec(tq, "rk", eps=2.0, rho=400.0, k=7)):
        assert oracle(ds, spec).hits == oracle(shuffled, spec).hits


def test_rk_unbounded_radius_ranks_by_sigma_then_distance():
    ds = tiny_dataset([[0, 0, 9], [0, 9, 9], [0, 0, 9], [0, 0, 0]],
                      locs=[[5, 0], [1, 0], [2, 0], [9, 9]])
    tq = GeoTimeSeries(0, (0, 0), [0, 0, 0])
    hits = oracle(ds, QuerySpec(tq, "rk", eps=0.5, rho=math.inf, k=4)).hits
    assert [h.id for h in hits] == [3, 2, 0, 1]
