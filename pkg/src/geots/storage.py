"""Versioned little-endian binary format for built indexes.

The byte layout is documented in ``docs/index_format.md``.  The file holds
the dataset too, so a loaded index answers queries on its own.
"""
import struct
import zlib

import numpy as np

from .core import Dataset
from .index import MBR, HybridIndex, IndexConfig, IndexNode, _bfs
from .mbts import SegmentedMBTS

MAGIC = b"GEOTSIX\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIB3x5q4qIQ")
_KIND_CODE = {"btsr": 0, "sbtsr": 1}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


class IndexFormatError(ValueError):
    pass


def _arrays(index):
    nodes = _bfs(index.root)
    position = {id(node): i for i, node in enumerate(nodes)}
    num = len(nodes)
    leaf = np.zeros(num, dtype="<u1")
    mbr = np.zeros((num, 4), dtype="<f8")
    first = np.zeros(num, dtype="<i8")
    count = np.zeros(num, dtype="<i8")
    for i, node in enumerate(nodes):
        leaf[i] = node.leaf
        mbr[i] = node.mbr
        if node.leaf:
            first[i], count[i] = node.start, node.stop - node.start
        else:
            first[i], count[i] = position[id(node.children[0])], len(node.children)

    if index.kind == "btsr":
        uppers = [node.upper for node in nodes]
        lowers = [node.lower for node in nodes]
    else:
        uppers = [node.segmented.upper for node in nodes]
        lowers = [node.segmented.lower for node in nodes]
    rows = np.concatenate([[0], np.cumsum([len(u) for u in uppers])]).astype("<i8")
    out = [
        index.dataset.ids.astype("<i8"), index.dataset.locs.astype("<f8"),
        index.dataset.values.astype("<f8"), index.order.astype("<i8"),
        leaf, mbr, first, count, rows,
        np.concatenate(uppers).astype("<f8"), np.concatenate(lowers).astype("<f8"),
    ]
    if index.kind == "sbtsr":
        seg = [node.segmented for node in nodes]
        out.append(seg[0].seg_start.astype("<i8"))
        out.append(np.stack([sm.seg_k for sm in seg]).astype("<i8"))
        out.append(np.concatenate([sm.links.ravel() for sm in seg]).astype("<u1"))
    return num, int(rows[-1]), out


def save_index(index, path):
    num, total_rows, arrays = _arrays(index)
    payload = b"".join(a.tobytes() for a in arrays)
    cfg = index.config
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_CODE[index.kind],
                          cfg.m, cfg.M, cfg.k_mbts, cfg.segments, cfg.seed,
                          len(index.dataset), index.n, num, total_rows,
                          zlib.crc32(payload), len(payload))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


class _Reader:
    def __init__(self, buf):
        self.buf, self.pos = buf, 0

    def take(self, dtype, shape):
        dtype = np.dtype(dtype)
        size = dtype.itemsize * int(np.prod(shape))
        if self.pos + size > len(self.buf):
            raise IndexFormatError("index file is truncated")
        arr = np.frombuffer(self.buf, dtype=dtype, count=int(np.prod(shape)), offset=self.pos)
        self.pos += size
        return arr.reshape(shape).astype(dtype.newbyteorder("="))


def load_index(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise IndexFormatError("index file is truncated")
    (magic, version, kind_code, m, M, k_mbts, segments, seed,
     N, n, num, total_rows, crc, length) = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise IndexFormatError("not a geots index file")
    if version != FORMAT_VERSION:
        raise IndexFormatError(
            f"index format version {version} is not supported (expected {FORMAT_VERSION})")
    if kind_code not in _CODE_KIND:
        raise IndexFormatError(f"unknown index kind code {kind_code}")
    payload = blob[_HEADER.size:]
    if len(payload) != length:
        raise IndexFormatError("index file is truncated" if len(payload) < length
                               else "trailing bytes after index payload")
    if zlib.crc32(payload) != crc:
        raise IndexFormatError("index payload checksum mismatch")

    kind = _CODE_KIND[kind_code]
    r = _Reader(payload)
    ids = r.take("<i8", (N,))
    locs = r.take("<f8", (N, 2))
    values = r.take("<f8", (N, n))
    order = r.take("<i8", (N,))
    leaf = r.take("<u1", (num,))
    mbr = r.take("<f8", (num, 4))
    first = r.take("<i8", (num,))
    count = r.take("<i8", (num,))
    rows = r.take("<i8", (num + 1,))
    upper = r.take("<f8", (total_rows, n))
    lower = r.take("<f8", (total_rows, n))
    if kind == "sbtsr":
        seg_start = r.take("<i8", (segments + 1,))
        seg_k = r.take("<i8", (num, segments))
        links_flat = r.take("<u1", (int(sum((rows[i + 1] - rows[i]) ** 2
                                            for i in range(num)) * segments),)).astype(bool)

    nodes = [IndexNode(MBR(*map(float, mbr[i])), bool(leaf[i])) for i in range(num)]
    link_pos = 0
    for i, node in enumerate(nodes):
        if node.leaf:
            node.start, node.stop = int(first[i]), int(first[i] + count[i])
        else:
            node.children = nodes[first[i]:first[i] + count[i]]
            node.child_boxes = np.array([c.mbr for c in node.children], dtype=np.float64)
        up, lo = upper[rows[i]:rows[i + 1]], lower[rows[i]:rows[i + 1]]
        if kind == "btsr":
            node.upper, node.lower = np.ascontiguousarray(up), np.ascontiguousarray(lo)
        else:
            kmax = int(rows[i + 1] - rows[i])
            size = segments * kmax * kmax
            links = links_flat[link_pos:link_pos + size].reshape(segments, kmax, kmax)
            link_pos += size
            node.segmented = SegmentedMBTS(seg_start.copy(), np.ascontiguousarray(up),
                                           np.ascontiguousarray(lo), seg_k[i].copy(), links)
    config = IndexConfig(m=m, M=M, k_mbts=k_mbts, segments=segments, seed=seed)
    return HybridIndex(kind, config, Dataset(ids, locs, values), nodes[0], order)
