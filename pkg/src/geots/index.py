"""R-tree skeleton and the BTSR / SBTSR hybrid indexes built on top of it.

The spatial tree is built by one-by-one Guttman insertion with quadratic
split.  Envelopes are then attached bottom-up: leaves cluster their series,
inner nodes cluster the envelopes of their children.
"""
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, InputError, spatial_distances
from .mbts import MBTS, SegmentedMBTS, build_mbts, cluster_k, segment_bounds, stack

KINDS = ("btsr", "sbtsr")

MBR = namedtuple("MBR", "xmin ymin xmax ymax")


@dataclass(frozen=True)
class IndexConfig:
    m: int = 40
    M: int = 100
    k_mbts: int = 10
    segments: int = 10
    seed: int = 42

    def __post_init__(self):
        if not 2 <= self.m <= self.M / 2:
            raise InputError(f"need 2 <= m <= M/2, got m={self.m}, M={self.M}")
        if self.k_mbts < 1:
            raise InputError("k_mbts must be >= 1")
        if self.segments < 1:
            raise InputError("segments must be >= 1")


def mindist_sp(q, mbr):
    """Distance from point ``q`` to the nearest point of ``mbr`` (0 inside)."""
    dx = max(mbr[0] - q[0], 0.0, q[0] - mbr[2])
    dy = max(mbr[1] - q[1], 0.0, q[1] - mbr[3])
    return float(np.hypot(dx, dy))


def mindist_sp_many(q, boxes):
    boxes = np.asarray(boxes, dtype=np.float64)
    dx = np.maximum(np.maximum(boxes[:, 0] - q[0], 0.0), q[0] - boxes[:, 2])
    dy = np.maximum(np.maximum(boxes[:, 1] - q[1], 0.0), q[1] - boxes[:, 3])
    return np.hypot(dx, dy)


# --------------------------------------------------------------------------
# Guttman R-tree


class _Node:
    __slots__ = ("leaf", "entries", "boxes")

    def __init__(self, leaf):
        self.leaf = leaf
        self.entries = []  # dataset rows (leaf) or _Node children
        self.boxes = []  # one (xmin, ymin, xmax, ymax) per entry

    def mbr(self):
        b = np.asarray(self.boxes)
        return (b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max())


def _area(b):
    return (b[..., 2] - b[..., 0]) * (b[..., 3] - b[..., 1])


def _margin(b):
    return (b[..., 2] - b[..., 0]) + (b[..., 3] - b[..., 1])


def _union(a, b):
    return np.stack([np.minimum(a[..., 0], b[..., 0]), np.minimum(a[..., 1], b[..., 1]),
                     np.maximum(a[..., 2], b[..., 2]), np.maximum(a[..., 3], b[..., 3])],
                    axis=-1)


def _choose_subtree(node, box):
    b = np.asarray(node.boxes)
    area = _area(b)
    growth = _area(_union(b, box)) - area
    return int(np.lexsort((area, growth))[0])


def _quadratic_split(node, m):
    boxes = np.asarray(node.boxes)
    count = len(boxes)
    joint = _union(boxes[:, None, :], boxes[None, :, :])
    waste = _area(joint) - _area(boxes)[:, None] - _area(boxes)[None, :]
    # perimeter waste only breaks ties, e.g. between collinear points
    spread = _margin(joint) - _margin(boxes)[:, None] - _margin(boxes)[None, :]
    iu, ju = np.triu_indices(count, k=1)
    best = np.lexsort((-spread[iu, ju], -waste[iu, ju]))[0]
    seeds = (int(iu[best]), int(ju[best]))

    groups = ([seeds[0]], [seeds[1]])
    cover = [boxes[seeds[0]].copy(), boxes[seeds[1]].copy()]
    rest = [i for i in range(count) if i not in seeds]
    while rest:
        for g in (0, 1):
            if len(groups[g]) + len(rest) == m:
                groups[g].extend(rest)
                rest = []
                break
        if not rest:
            break
        rb = boxes[rest]
        d = [_area(_union(cover[g][None, :], rb)) - _area(cover[g]) for g in (0, 1)]
        pick = int(np.argmax(np.abs(d[0] - d[1])))
        idx = rest.pop(pick)
        key = [(d[g][pick], _area(cover[g]), len(groups[g])) for g in (0, 1)]
        g = 0 if key[0] <= key[1] else 1
        groups[g].append(idx)
        cover[g] = _union(cover[g], boxes[idx])

    halves = []
    for g in groups:
        half = _Node(node.leaf)
        half.entries = [node.entries[i] for i in g]
        half.boxes = [node.boxes[i] for i in g]
        halves.append(half)
    return halves


class RTreeBuilder:
    """Incremental Guttman R-tree over 2-D points (quadratic split)."""

    def __init__(self, m=40, M=100):
        self.m, self.M = m, M
        self.root = _Node(leaf=True)

    def insert(self, row, point):
        box = (float(point[0]), float(point[1]), float(point[0]), float(point[1]))
        path = []
        node = self.root
        while not node.leaf:
            i = _choose_subtree(node, np.asarray(box))
            path.append((node, i))
            node = node.entries[i]
        node.entries.append(row)
        node.boxes.append(box)

        split = _quadratic_split(node, self.m) if len(node.entries) > self.M else None
        for parent, i in reversed(path):
            if split is None:
                parent.boxes[i] = _grow(parent.boxes[i], box)
                continue
            a, b = split
            parent.entries[i] = a
            parent.boxes[i] = a.mbr()
            parent.entries.append(b)
            parent.boxes.append(b.mbr())
            split = _quadratic_split(parent, self.m) if len(parent.entries) > self.M else None
        if split is not None:
            root = _Node(leaf=False)
            root.entries = list(split)
            root.boxes = [h.mbr() for h in split]
            self.root = root


def _grow(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


# --------------------------------------------------------------------------
# finished index


@dataclass(eq=False)
class IndexNode:
    mbr: MBR
    leaf: bool
    children: list = field(default_factory=list)
    start: int = 0  # leaf: slice of HybridIndex.order
    stop: int = 0
    upper: np.ndarray = None  # btsr: (k, n) stacked envelopes
    lower: np.ndarray = None
    segmented: SegmentedMBTS = None  # sbtsr
    members: list = field(default=None, repr=False)  # btsr, build time only
    child_boxes: np.ndarray = field(default=None, repr=False)

    def mbts(self):
        if self.segmented is not None:
            raise TypeError("segmented node: use .segmented.segment(t)")
        mem = self.members or [None] * len(self.upper)
        return [MBTS(u, l, m) for u, l, m in zip(self.upper, self.lower, mem)]

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


def build_rtree(dataset, config=IndexConfig()):
    """Spatial tree only; returns ``(root, order)`` with leaves in BFS order.

    ``order`` lists dataset rows leaf by leaf, so leaf ``[start, stop)``
    slices refer to ``order``.
    """
    builder = RTreeBuilder(config.m, config.M)
    for row, loc in enumerate(dataset.locs):
        builder.insert(row, loc)

    root = IndexNode(MBR(*map(float, builder.root.mbr())), builder.root.leaf)
    queue = [(builder.root, root)]
    order = []
    head = 0
    while head < len(queue):
        raw, node = queue[head]
        head += 1
        if raw.leaf:
            node.start = len(order)
            order.extend(raw.entries)
            node.stop = len(order)
            continue
        for child, box in zip(raw.entries, raw.boxes):
            sub = IndexNode(MBR(*map(float, box)), child.leaf)
            node.children.append(sub)
            queue.append((child, sub))
        node.child_boxes = np.array([c.mbr for c in node.children], dtype=np.float64)
    return root, np.array(order, dtype=np.int64)


def _bfs(root):
    out = [root]
    head = 0
    while head < len(out):
        out.extend(out[head].children)
        head += 1
    return out


def _seed(config, ordinal, segment=0):
    return np.random.SeedSequence([config.seed, ordinal, segment])


def attach_mbts(root, order, values, config=IndexConfig()):
    """Attach ``<= k`` envelopes to every node, leaves first."""
    nodes = _bfs(root)
    for ordinal in range(len(nodes) - 1, -1, -1):
        node = nodes[ordinal]
        if node.leaf:
            rows = order[node.start:node.stop]
            groups = cluster_k(values[rows], config.k_mbts, _seed(config, ordinal))
            bands = [build_mbts(values[rows[g]], members=rows[g]) for g in groups]
        else:
            items = [m for child in node.children for m in child.mbts()]
            groups = cluster_k(items, config.k_mbts, _seed(config, ordinal))
            bands = [build_mbts([items[i] for i in g]) for g in groups]
        node.upper, node.lower = stack(bands)
        node.members = [b.members for b in bands]
    return root


def attach_segmented_mbts(root, order, values, config=IndexConfig()):
    """Attach per-segment envelopes and bit-vectors to every node."""
    seg_start = segment_bounds(values.shape[1], config.segments)
    nodes = _bfs(root)
    for ordinal in range(len(nodes) - 1, -1, -1):
        node = nodes[ordinal]
        segments = []
        for t in range(config.segments):
            lo, hi = seg_start[t], seg_start[t + 1]
            seed = _seed(config, ordinal, t)
            if node.leaf:
                rows = order[node.start:node.stop]
                part = values[rows, lo:hi]
                groups = cluster_k(part, config.k_mbts, seed)
                segments.append([build_mbts(part[g], members=rows[g]) for g in groups])
            else:
                items = [m for child in node.children for m in child.segmented.segment(t)]
                groups = cluster_k(items, config.k_mbts, seed)
                segments.append([build_mbts([items[i] for i in g]) for g in groups])
        node.segmented = SegmentedMBTS.from_segments(seg_start, segments)
    return root


@dataclass(eq=False)
class HybridIndex:
    kind: str
    config: IndexConfig
    dataset: Dataset
    root: IndexNode
    order: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown index kind {self.kind!r}")
        self.values = np.ascontiguousarray(self.dataset.values[self.order])
        self.locs = np.ascontiguousarray(self.dataset.locs[self.order])
        self.ids = self.dataset.ids[self.order]

    @property
    def n(self):
        return self.dataset.n

    def nodes(self):
        return _bfs(self.root)

    def drop_members(self):
        for node in self.nodes():
            node.members = None
            if node.segmented is not None:
                node.segmented.drop_members()


def build_index(dataset, kind="btsr", config=IndexConfig(), keep_members=False):
    """Bulk-build a BTSR-tree (``kind="btsr"``) or SBTSR-tree (``"sbtsr"``)."""
    if kind not in KINDS:
        raise InputError(f"unknown index kind {kind!r}; expected one of {KINDS}")
    if kind == "sbtsr" and config.segments > dataset.n:
        raise InputError(f"{config.segments} segments exceed series length {dataset.n}")
    root, order = build_rtree(dataset, config)
    if kind == "btsr":
        attach_mbts(root, order, dataset.values, config)
    else:
        attach_segmented_mbts(root, order, dataset.values, config)
    index = HybridIndex(kind, config, dataset, root, order)
    if not keep_members:
        index.drop_members()
    return index


def range_scan(index, q, rho):
    """Plain spatial range query; returns matching ids in ascending order."""
    hits = []
    stack = [index.root]
    while stack:
        node = stack.pop()
        if mindist_sp(q, node.mbr) > rho:
            continue
        if node.leaf:
            d = spatial_distances(index.locs[node.start:node.stop], q)
            hits.extend(index.ids[node.start:node.stop][d <= rho].tolist())
        else:
            stack.extend(node.children)
    return sorted(hits)
