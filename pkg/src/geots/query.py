"""The three LS-queries over a BTSR or SBTSR index.

* ``rr``: every series within ``rho`` whose local similarity is ``>= delta``.
* ``kr``: the ``k`` spatially nearest series with similarity ``>= delta``.
* ``rk``: the ``k`` most locally similar series within ``rho``.

``method="sweep"`` scans every timestamp; ``method="checkpoint"`` probes
only at checkpoints.  Both return identical hits, only the counters differ.
"""
import heapq
from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (GeoTimeSeries, Hit, InputError, kr_key, place_checkpoints, rk_key,
                   rr_key, spatial_distances)
from .index import mindist_sp_many

KINDS = ("rr", "kr", "rk")
METHODS = ("sweep", "checkpoint")


@dataclass(frozen=True)
class QuerySpec:
    tq: GeoTimeSeries
    kind: str
    eps: float
    rho: float = None
    delta: int = None
    k: int = None
    method: str = "checkpoint"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown query kind {self.kind!r}")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}")
        need = {"rr": ("rho", "delta"), "kr": ("k", "delta"), "rk": ("rho", "k")}[self.kind]
        for name in ("rho", "delta", "k"):
            given = getattr(self, name) is not None
            if given != (name in need):
                verb = "requires" if name in need else "does not take"
                raise InputError(f"{self.kind} query {verb} {name}")
        if not self.eps >= 0:
            raise InputError("eps must be >= 0")
        if self.rho is not None and not self.rho >= 0:
            raise InputError("rho must be >= 0")
        if self.delta is not None and self.delta < 1:
            raise InputError("delta must be >= 1")
        if self.k is not None and self.k < 1:
            raise InputError("k must be >= 1")


@dataclass
class Counters:
    nodes_visited: int = 0
    leaves_visited: int = 0
    series_verified: int = 0
    margin_comparisons: int = 0


@dataclass
class QueryResult:
    hits: list
    counters: Counters = field(default_factory=Counters)
    exhausted: bool = False  # fewer than k hits exist (kr / rk)

    @property
    def ids(self):
        return [h.id for h in self.hits]


class _Probe:
    """Similarity tests against one query, charged to ``counters``."""

    def __init__(self, index, spec, counters, delta):
        self.index = index
        self.tq = spec.tq.values
        if self.tq.shape != (index.n,):
            raise InputError(f"query length {self.tq.size} != index series length {index.n}")
        self.eps = float(spec.eps)
        self.checkpoint = spec.method == "checkpoint"
        self.segmented = index.kind == "sbtsr"
        self.counters = counters
        self.kern = kernels.active
        self.set_delta(delta)

    def set_delta(self, delta):
        self.delta = int(delta)
        self.cps = place_checkpoints(self.index.n, self.delta).positions

    def node_passes(self, node):
        """False only if no series under ``node`` can reach ``delta``."""
        kern, tq, eps = self.kern, self.tq, self.eps
        if self.segmented:
            sm = node.segmented
            args = (sm.upper, sm.lower, sm.seg_of, sm.seg_k, sm.links, tq, eps)
            if self.checkpoint:
                ok, tests = kern.seg_verify(*args, self.cps, self.delta)
            else:
                best, tests = kern.seg_bound_sweep(*args)
                ok = best >= self.delta
        elif self.checkpoint:
            ok, tests = kern.band_verify(node.upper, node.lower, tq, eps, self.cps, self.delta)
        else:
            runs, tests = kern.band_runs_sweep(node.upper, node.lower, tq, eps)
            ok = runs.max() >= self.delta
        self.counters.margin_comparisons += tests
        return ok

    def node_bound(self, node):
        """Similarity bound of ``node``; exact whenever it is ``>= delta``."""
        kern, tq, eps = self.kern, self.tq, self.eps
        if self.segmented:
            sm = node.segmented
            args = (sm.upper, sm.lower, sm.seg_of, sm.seg_k, sm.links, tq, eps)
            if self.checkpoint:
                best, tests = kern.seg_bound_checkpoint(*args, self.cps)
            else:
                best, tests = kern.seg_bound_sweep(*args)
        else:
            if self.checkpoint:
                runs, tests = kern.band_runs_checkpoint(node.upper, node.lower, tq, eps, self.cps)
            else:
                runs, tests = kern.band_runs_sweep(node.upper, node.lower, tq, eps)
            best = int(runs.max())
        self.counters.margin_comparisons += tests
        return best

    def leaf_scores(self, node, sel=None):
        """Local similarity of the leaf's series (optionally a subset)."""
        vals = self.index.values[node.start:node.stop]
        if sel is not None:
            vals = vals[sel]
        if self.checkpoint:
            sig, tests = self.kern.band_runs_checkpoint(vals, vals, self.tq, self.eps, self.cps)
        else:
            sig, tests = self.kern.band_runs_sweep(vals, vals, self.tq, self.eps)
        self.counters.series_verified += len(vals)
        self.counters.margin_comparisons += tests
        return sig


def query_rr(index, spec):
    counters = Counters()
    probe = _Probe(index, spec, counters, spec.delta)
    q = spec.tq.loc
    hits = []
    stack = [index.root]
    while stack:
        node = stack.pop()
        counters.nodes_visited += 1
        if node.leaf:
            counters.leaves_visited += 1
            dist = spatial_distances(index.locs[node.start:node.stop], q)
            sel = np.flatnonzero(dist <= spec.rho)
            if not sel.size:
                continue
            sig = probe.leaf_scores(node, sel)
            ok = np.flatnonzero(sig >= spec.delta)
            rows = sel[ok]
            hits.extend(map(Hit, index.ids[node.start:node.stop][rows].tolist(),
                            dist[rows].tolist(), sig[ok].tolist()))
            continue
        reach = mindist_sp_many(q, node.child_boxes)
        for child, d in zip(node.children, reach):
            if d <= spec.rho and probe.node_passes(child):
                stack.append(child)
    hits.sort(key=rr_key)
    return QueryResult(hits, counters)


def query_kr(index, spec):
    counters = Counters()
    probe = _Probe(index, spec, counters, spec.delta)
    q = spec.tq.loc
    hits = []
    seq = 0
    # (distance, 0 for nodes / 1 for series, tie key, payload); nodes first on ties
    heap = [(0.0, 0, seq, index.root)]
    while heap:
        dist, is_series, key, item = heapq.heappop(heap)
        if is_series:
            hits.append(Hit(key, dist, item))
            if len(hits) == spec.k:
                break
            continue
        node = item
        counters.nodes_visited += 1
        if node.leaf:
            counters.leaves_visited += 1
            sig = probe.leaf_scores(node)
            ok = np.flatnonzero(sig >= spec.delta)
            if ok.size:
                d = spatial_distances(index.locs[node.start:node.stop][ok], q)
                ids = index.ids[node.start:node.stop][ok]
                for j in range(ok.size):
                    heapq.heappush(heap, (float(d[j]), 1, int(ids[j]), int(sig[ok[j]])))
            continue
        reach = mindist_sp_many(q, node.child_boxes)
        for child, d in zip(node.children, reach):
            if probe.node_passes(child):
                seq += 1
                heapq.heappush(heap, (float(d), 0, seq, child))
    return QueryResult(hits, counters, exhausted=len(hits) < spec.k)


def query_rk(index, spec):
    counters = Counters()
    probe = _Probe(index, spec, counters, 1)
    q = spec.tq.loc
    best = []  # kept sorted by rk_key, at most k long
    ranked = []
    seq = 0
    heap = [(-index.n, seq, index.root)]
    while heap:
        if -heap[0][0] < probe.delta:
            break
        _, _, node = heapq.heappop(heap)
        counters.nodes_visited += 1
        if node.leaf:
            counters.leaves_visited += 1
            dist = spatial_distances(index.locs[node.start:node.stop], q)
            sel = np.flatnonzero(dist <= spec.rho)
            if not sel.size:
                continue
            sig = probe.leaf_scores(node, sel)
            ids = index.ids[node.start:node.stop]
            for j in range(sel.size):
                if sig[j] < probe.delta:
                    continue
                hit = Hit(int(ids[sel[j]]), float(dist[sel[j]]), int(sig[j]))
                insort(ranked, (rk_key(hit), hit))
                if len(ranked) > spec.k:
                    ranked.pop()
                if len(ranked) == spec.k and ranked[-1][1].sigma > probe.delta:
                    probe.set_delta(ranked[-1][1].sigma)
            continue
        reach = mindist_sp_many(q, node.child_boxes)
        for child, d in zip(node.children, reach):
            if d > spec.rho:
                continue
            bound = probe.node_bound(child)
            if bound >= probe.delta:
                seq += 1
                heapq.heappush(heap, (-bound, seq, child))
    best = [hit for _, hit in ranked]
    return QueryResult(best, counters, exhausted=len(best) < spec.k)


_DISPATCH = {"rr": query_rr, "kr": query_kr, "rk": query_rk}


def run_query(index, spec):
    return _DISPATCH[spec.kind](index, spec)
