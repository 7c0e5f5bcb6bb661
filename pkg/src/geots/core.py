"""Geolocated time series, local similarity and checkpoint placement."""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels


class InputError(ValueError):
    """Raised on malformed series, datasets or parameters."""


@dataclass(frozen=True)
class GeoTimeSeries:
    id: int
    loc: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise InputError("values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise InputError(f"series {self.id}: values must be finite")
        loc = tuple(float(c) for c in self.loc)
        if len(loc) != 2 or not all(np.isfinite(loc)):
            raise InputError(f"series {self.id}: loc must be two finite coordinates")
        if int(self.id) < 0:
            raise InputError(f"series id must be non-negative, got {self.id}")
        values.flags.writeable = False
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "loc", loc)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.size


@dataclass(frozen=True)
class Dataset:
    """Columnar collection of equal-length geolocated series.

    ``ids`` is ``(N,)`` int64, ``locs`` is ``(N, 2)`` and ``values`` is
    ``(N, n)``.  Row ``i`` of each array describes the same series.
    """

    ids: np.ndarray
    locs: np.ndarray
    values: np.ndarray
    _row_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            ids = np.ascontiguousarray(self.ids, dtype=np.int64)
            locs = np.ascontiguousarray(self.locs, dtype=np.float64)
            values = np.ascontiguousarray(self.values, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InputError(f"malformed dataset arrays: {exc}") from None
        if ids.ndim != 1 or ids.size == 0:
            raise InputError("dataset must hold at least one series")
        if locs.shape != (ids.size, 2):
            raise InputError(f"locs must have shape ({ids.size}, 2), got {locs.shape}")
        if values.ndim != 2 or values.shape[0] != ids.size or values.shape[1] < 1:
            raise InputError("values must have shape (N, n) with n >= 1")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(values))):
            raise InputError("locations and values must be finite")
        if np.any(ids < 0):
            raise InputError("series ids must be non-negative")
        if np.unique(ids).size != ids.size:
            raise InputError("series ids must be unique")
        for arr in (ids, locs, values):
            arr.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "locs", locs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_row_of", {int(v): i for i, v in enumerate(ids)})

    @classmethod
    def from_series(cls, series):
        series = list(series)
        if not series:
            raise InputError("dataset must hold at least one series")
        n = series[0].n
        for s in series:
            if s.n != n:
                raise InputError(f"series {s.id} has length {s.n}, expected {n}")
        return cls(
            ids=np.array([s.id for s in series], dtype=np.int64),
            locs=np.array([s.loc for s in series], dtype=np.float64),
            values=np.stack([s.values for s in series]),
        )

    def __len__(self):
        return self.ids.size

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def bbox(self):
        """``(xmin, ymin, xmax, ymax)`` of all locations."""
        lo = self.locs.min(axis=0)
        hi = self.locs.max(axis=0)
        return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @property
    def value_range(self):
        return (float(self.values.min()), float(self.values.max()))

    def row(self, series_id):
        return self._row_of[int(series_id)]

    def series(self, row):
        return GeoTimeSeries(int(self.ids[row]), tuple(self.locs[row]), self.values[row])

    def __iter__(self):
        for row in range(len(self)):
            yield self.series(row)


@dataclass(frozen=True)
class Checkpoints:
    delta: int
    positions: np.ndarray

    def __len__(self):
        return self.positions.size


def place_checkpoints(n, delta):
    """Checkpoints at ``delta-1, 2*delta-1, ...`` (0-indexed) below ``n``.

    Every window of ``delta`` consecutive timestamps holds exactly one
    position, so any run of length at least ``delta`` crosses one.
    """
    delta = int(delta)
    if delta < 1:
        raise InputError(f"delta must be >= 1, got {delta}")
    positions = np.arange(delta - 1, int(n), delta, dtype=np.int64)
    positions.flags.writeable = False
    return Checkpoints(delta, positions)


def spatial_distance(a, b):
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def spatial_distances(locs, q):
    """Vectorised Euclidean distance from each row of ``locs`` to ``q``."""
    locs = np.asarray(locs, dtype=np.float64)
    return np.hypot(locs[..., 0] - q[0], locs[..., 1] - q[1])


def _values(series):
    if isinstance(series, GeoTimeSeries):
        return series.values
    return np.ascontiguousarray(series, dtype=np.float64)


def _pair(t, tq):
    t, tq = _values(t), _values(tq)
    if t.shape != tq.shape:
        raise InputError(f"length mismatch: {t.shape[-1]} vs {tq.shape[-1]}")
    return t[None, :], tq


def local_similarity(t, tq, eps):
    """Longest run of timestamps where ``|t[i] - tq[i]| <= eps``."""
    band, tq = _pair(t, tq)
    runs, _ = kernels.active.band_runs_sweep(band, band, tq, float(eps))
    return int(runs[0])


def local_similarity_checkpointed(t, tq, eps, cp):
    """Local similarity probed only at checkpoints.

    Runs through a passing checkpoint are expanded to their full extent,
    so the result is exact whenever the true score is at least
    ``cp.delta``.  Below that it may under-report.
    """
    band, tq = _pair(t, tq)
    runs, _ = kernels.active.band_runs_checkpoint(band, band, tq, float(eps), cp.positions)
    return int(runs[0])


class Hit(NamedTuple):
    id: int
    distance: float
    sigma: int


# Ranking shared by the index engine and the linear-scan oracle.
def rr_key(hit):
    return hit.id


def kr_key(hit):
    return (hit.distance, hit.id)


def rk_key(hit):
    return (-hit.sigma, hit.distance, hit.id)
