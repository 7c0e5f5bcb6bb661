"""Minimum bounding time series (MBTS), plain and segmented.

An MBTS is the elementwise max/min envelope of a set of series.  Nodes of a
BTSR-tree keep ``k`` of them, obtained by k-means over the series (leaves)
or over the children's envelopes (inner nodes).  The segmented variant keeps
``k`` envelopes per temporal segment plus bit-vectors that link envelopes of
consecutive segments sharing at least one series.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .core import GeoTimeSeries, InputError

KMEANS_MAX_ITER = 20
KMEANS_TOL = 1e-6


@dataclass
class MBTS:
    upper: np.ndarray
    lower: np.ndarray
    members: np.ndarray = None

    def __post_init__(self):
        self.upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        self.lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        if self.upper.shape != self.lower.shape or self.upper.ndim != 1:
            raise InputError("upper and lower must be 1-D and of equal length")

    def __len__(self):
        return self.upper.size

    @property
    def midpoint(self):
        return (self.upper + self.lower) / 2.0

    @property
    def area(self):
        return float(np.sum(self.upper - self.lower))

    def contains(self, other):
        """True if ``other`` (a series or MBTS) lies inside the band everywhere."""
        up, lo = _envelope(other)
        return bool(np.all(self.lower <= lo) and np.all(up <= self.upper))


def _envelope(item):
    if isinstance(item, MBTS):
        return item.upper, item.lower
    values = item.values if isinstance(item, GeoTimeSeries) else np.asarray(item, np.float64)
    return values, values


def _representative(item):
    if isinstance(item, MBTS):
        return item.midpoint
    return _envelope(item)[0]


def build_mbts(items, members=None):
    """Envelope of raw series and/or MBTSs.

    Member sets of MBTS inputs are merged.  ``members`` overrides the merged
    set, which is how callers attach series ids to raw inputs.
    """
    items = list(items)
    if not items:
        raise InputError("cannot build an MBTS from no series")
    ups, los = zip(*(_envelope(it) for it in items))
    if len({u.shape for u in ups}) != 1:
        raise InputError("all inputs must have the same length")
    upper = np.max(np.stack(ups), axis=0)
    lower = np.min(np.stack(los), axis=0)
    if members is None:
        parts = [it.members for it in items if isinstance(it, MBTS) and it.members is not None]
        members = np.unique(np.concatenate(parts)) if parts else None
    return MBTS(upper, lower, members)


def kmeans(points, k, seed=42, max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL):
    """Lloyd's k-means with k-means++ seeding; returns a label per point.

    Empty clusters are refilled with the point farthest from the centre of
    the currently largest cluster.  Requires ``k <= len(points)``.
    """
    X = np.asarray(points, dtype=np.float64)
    N = X.shape[0]
    rng = np.random.default_rng(seed)

    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(N))
    centers[0] = X[first]
    chosen = np.zeros(N, dtype=bool)
    chosen[first] = True
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            pick = int(rng.choice(N, p=d2 / total))
        else:
            pick = int(rng.choice(np.flatnonzero(~chosen)))
        chosen[pick] = True
        centers[c] = X[pick]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))

    x2 = np.sum(X * X, axis=1)[:, None]
    for _ in range(max_iter):
        dist = np.maximum(x2 - 2.0 * X @ centers.T + np.sum(centers * centers, axis=1), 0.0)
        labels = np.argmin(dist, axis=1)
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            big = int(np.argmax(counts))
            pool = np.flatnonzero(labels == big)
            far = pool[int(np.argmax(dist[pool, big]))]
            labels[far] = empty
            counts[big] -= 1
            counts[empty] += 1
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        new /= counts[:, None]
        shift = np.linalg.norm(new - centers)
        scale = max(np.linalg.norm(centers), 1e-12)
        centers = new
        if shift <= tol * scale:
            break
    return labels


def cluster_k(items, k, seed=42):
    """Group ``items`` into at most ``k`` non-empty clusters.

    Raw series are clustered as they are, MBTSs by their midpoint sequence.
    Groups are index arrays into ``items`` ordered by their smallest index.
    """
    items = list(items)
    if not items:
        raise InputError("nothing to cluster")
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if k >= len(items):
        return [np.array([i]) for i in range(len(items))]
    if k == 1:
        return [np.arange(len(items))]
    labels = kmeans(np.stack([_representative(it) for it in items]), k, seed)
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    groups.sort(key=lambda g: g[0])
    return groups


def segment_bounds(n, s):
    """Boundaries of ``s`` contiguous near-equal segments of ``[0, n)``.

    The first ``n % s`` segments get one extra timestamp.
    """
    if s < 1 or s > n:
        raise InputError(f"need 1 <= segments <= n, got s={s}, n={n}")
    size, extra = divmod(n, s)
    widths = np.full(s, size, dtype=np.int64)
    widths[:extra] += 1
    return np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)


@dataclass
class SegmentedMBTS:
    """Per-segment envelopes of one node packed into padded arrays.

    Row ``a`` of ``upper``/``lower`` restricted to the columns of segment
    ``t`` is envelope ``a`` of that segment, valid for ``a < seg_k[t]``.
    ``links[t, a, b]`` is bit ``b`` of the bit-vector of envelope ``a`` in
    segment ``t``: it is set when envelope ``b`` of segment ``t + 1`` shares
    a series with it.  The last segment's slab is all False.
    """

    seg_start: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    seg_k: np.ndarray
    links: np.ndarray
    members: list = field(default=None, repr=False)

    @cached_property
    def seg_of(self):
        widths = np.diff(self.seg_start)
        return np.repeat(np.arange(widths.size, dtype=np.int64), widths)

    @property
    def s(self):
        return self.seg_k.size

    def segment(self, t):
        lo, hi = self.seg_start[t], self.seg_start[t + 1]
        out = []
        for a in range(self.seg_k[t]):
            mem = self.members[t][a] if self.members is not None else None
            out.append(MBTS(self.upper[a, lo:hi], self.lower[a, lo:hi], mem))
        return out

    def bitvector(self, t, a):
        if t >= self.s - 1:
            raise IndexError("the last segment carries no bit-vectors")
        return self.links[t, a, : self.seg_k[t + 1]].copy()

    @property
    def area(self):
        total = 0.0
        for t in range(self.s):
            lo, hi = self.seg_start[t], self.seg_start[t + 1]
            k = self.seg_k[t]
            total += float(np.sum(self.upper[:k, lo:hi] - self.lower[:k, lo:hi]))
        return total

    def drop_members(self):
        self.members = None

    @classmethod
    def from_segments(cls, seg_start, segments):
        """Pack ``segments[t]`` (lists of segment-length MBTSs with members)."""
        seg_start = np.asarray(seg_start, dtype=np.int64)
        s = len(segments)
        n = int(seg_start[-1])
        seg_k = np.array([len(seg) for seg in segments], dtype=np.int64)
        kmax = int(seg_k.max())
        upper = np.zeros((kmax, n))
        lower = np.zeros((kmax, n))
        for t, seg in enumerate(segments):
            lo, hi = seg_start[t], seg_start[t + 1]
            for a, m in enumerate(seg):
                upper[a, lo:hi] = m.upper
                lower[a, lo:hi] = m.lower
        members = [[m.members for m in seg] for seg in segments]
        links = np.zeros((s, kmax, kmax), dtype=bool)
        if all(mem is not None for seg in members for mem in seg):
            labels = [_label_rows(seg) for seg in members]
            universe = labels[0][0]
            for t in range(s - 1):
                rows_a, lab_a = labels[t]
                rows_b, lab_b = labels[t + 1]
                if not (np.array_equal(rows_a, universe) and np.array_equal(rows_b, universe)):
                    raise InputError("segments must cover the same series")
                links[t, lab_a, lab_b] = True
        return cls(seg_start, upper, lower, seg_k, links, members)


def _label_rows(groups):
    rows = np.concatenate(groups)
    labels = np.concatenate([np.full(len(g), a) for a, g in enumerate(groups)])
    order = np.argsort(rows, kind="stable")
    rows, labels = rows[order], labels[order]
    if rows.size and np.any(rows[1:] == rows[:-1]):
        raise InputError("a series belongs to two envelopes of one segment")
    return rows, labels


def stack(mbts_list):
    """Stack MBTSs into ``(k, n)`` upper and lower arrays."""
    return (np.stack([m.upper for m in mbts_list]), np.stack([m.lower for m in mbts_list]))


def _query_values(tq):
    return tq.values if isinstance(tq, GeoTimeSeries) else np.ascontiguousarray(tq, np.float64)


def mindist_ts(tq, mbts, i):
    """Distance from the query value at ``i`` to the band at ``i``."""
    v = float(_query_values(tq)[i])
    up, lo = float(mbts.upper[i]), float(mbts.lower[i])
    if v > up:
        return v - up
    if v < lo:
        return lo - v
    return 0.0


def sigma_bound(tq, mbts, eps):
    """Longest run of timestamps where the band is within ``eps`` of the query.

    Upper-bounds the local similarity of every series inside the band.
    """
    tq = _query_values(tq)
    if tq.shape != mbts.upper.shape:
        raise InputError("query and MBTS lengths differ")
    runs, _ = kernels.active.band_runs_sweep(mbts.upper[None], mbts.lower[None], tq, float(eps))
    return int(runs[0])


def verify_mbts(tq, mbts_list, cp, eps, delta, count=False):
    """Checkpoint test: can any band host a run of ``delta`` passing timestamps?

    With ``count=True`` returns ``(verdict, margin_tests)``.
    """
    upper, lower = stack(mbts_list)
    ok, tests = kernels.active.band_verify(upper, lower, _query_values(tq), float(eps),
                                           cp.positions, int(delta))
    return (ok, tests) if count else ok


def verify_segmented(tq, smbts, cp, eps, delta, count=False):
    """Checkpoint test over a segmented MBTS, following bit-vector links."""
    ok, tests = kernels.active.seg_verify(smbts.upper, smbts.lower, smbts.seg_of, smbts.seg_k,
                                          smbts.links, _query_values(tq), float(eps),
                                          cp.positions, int(delta))
    return (ok, tests) if count else ok


def sigma_bound_segmented(tq, smbts, eps):
    """Longest run achievable by a bit-vector consistent chain of envelopes."""
    best, _ = kernels.active.seg_bound_sweep(smbts.upper, smbts.lower, smbts.seg_of,
                                             smbts.seg_k, smbts.links, _query_values(tq),
                                             float(eps))
    return int(best)
