"""Linear-scan reference answers for the three LS-queries.

Nothing here touches the index or the kernels: every series is scored
directly, which makes these functions the ground truth for tests.
"""
from dataclasses import dataclass

import numpy as np

from .core import Hit, kr_key, rk_key, rr_key, spatial_distances


@dataclass
class OracleAnswer:
    hits: list

    @property
    def ids(self):
        return [h.id for h in self.hits]


def similarity_scores(values, tq, eps):
    """Local similarity of every row of ``values`` against ``tq``.

    Scans the time axis once, carrying the current run length per series.
    """
    close = np.abs(np.asarray(values) - np.asarray(tq)) <= eps
    run = np.zeros(close.shape[0], dtype=np.int64)
    best = np.zeros_like(run)
    for i in range(close.shape[1]):
        run = (run + 1) * close[:, i]
        np.maximum(best, run, out=best)
    return best


def _scan(dataset, spec):
    dist = spatial_distances(dataset.locs, spec.tq.loc)
    sigma = similarity_scores(dataset.values, spec.tq.values, spec.eps)
    return dist, sigma


def _hits(dataset, rows, dist, sigma):
    return [Hit(int(dataset.ids[r]), float(dist[r]), int(sigma[r])) for r in rows]


def oracle_rr(dataset, spec):
    dist, sigma = _scan(dataset, spec)
    rows = np.flatnonzero((dist <= spec.rho) & (sigma >= spec.delta))
    return OracleAnswer(sorted(_hits(dataset, rows, dist, sigma), key=rr_key))


def oracle_kr(dataset, spec):
    dist, sigma = _scan(dataset, spec)
    rows = np.flatnonzero(sigma >= spec.delta)
    hits = sorted(_hits(dataset, rows, dist, sigma), key=kr_key)
    return OracleAnswer(hits[: spec.k])


def oracle_rk(dataset, spec):
    dist, sigma = _scan(dataset, spec)
    rows = np.flatnonzero((dist <= spec.rho) & (sigma >= 1))
    hits = sorted(_hits(dataset, rows, dist, sigma), key=rk_key)
    return OracleAnswer(hits[: spec.k])


_DISPATCH = {"rr": oracle_rr, "kr": oracle_kr, "rk": oracle_rk}


def oracle(dataset, spec):
    return _DISPATCH[spec.kind](dataset, spec)
