"""CSV ingestion, scaled synthetic copies, and seeded test datasets."""
import csv
import math

import numpy as np

from .core import Dataset, InputError


class IngestError(InputError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


def ingest(path):
    """Read ``id,x,y,v1,...,vn`` rows; a non-numeric first row is a header."""
    ids, locs, values = [], [], []
    seen = {}
    n = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1 and not _numeric(row[0]):
                continue
            if len(row) < 4:
                raise IngestError(path, lineno, "expected id,x,y and at least one value")
            try:
                sid = int(row[0])
                nums = [float(c) for c in row[1:]]
            except ValueError as exc:
                raise IngestError(path, lineno, f"non-numeric cell ({exc})") from None
            if sid < 0:
                raise IngestError(path, lineno, f"negative id {sid}")
            if not all(math.isfinite(v) for v in nums):
                raise IngestError(path, lineno, "non-finite value")
            if n is None:
                n = len(nums) - 2
            elif len(nums) - 2 != n:
                raise IngestError(path, lineno, f"{len(nums) - 2} values, expected {n}")
            if sid in seen:
                raise IngestError(path, lineno, f"duplicate id {sid} (first on line {seen[sid]})")
            seen[sid] = lineno
            ids.append(sid)
            locs.append(nums[:2])
            values.append(nums[2:])
    if not ids:
        raise IngestError(path, 0, "no data rows")
    return Dataset(np.array(ids), np.array(locs), np.array(values))


def _numeric(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def write_csv(dataset, path, header=True):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        if header:
            out.writerow(["id", "x", "y"] + [f"v{i + 1}" for i in range(dataset.n)])
        for sid, loc, vals in zip(dataset.ids, dataset.locs, dataset.values):
            out.writerow([int(sid), repr(float(loc[0])), repr(float(loc[1]))]
                         + [repr(float(v)) for v in vals])


def synthesize(base, factor, seed=0):
    """``base`` plus ``factor - 1`` perturbed copies with fresh ids.

    Each copy moves every location uniformly within +-0.5% of the bbox
    extent per axis and shifts every value by a random integer magnitude
    in ``[1, 10]`` with random sign.
    """
    factor = int(factor)
    if factor < 2:
        raise InputError(f"factor must be >= 2, got {factor}")
    rng = np.random.default_rng(seed)
    xmin, ymin, xmax, ymax = base.bbox
    jitter = 0.005 * np.array([xmax - xmin, ymax - ymin])
    N = len(base)
    next_id = int(base.ids.max()) + 1
    ids, locs, values = [base.ids], [base.locs], [base.values]
    for _ in range(factor - 1):
        ids.append(np.arange(next_id, next_id + N))
        next_id += N
        locs.append(base.locs + rng.uniform(-1.0, 1.0, size=(N, 2)) * jitter)
        shift = rng.integers(1, 11, size=base.values.shape) * rng.choice([-1, 1], base.values.shape)
        values.append(base.values + shift)
    return Dataset(np.concatenate(ids), np.concatenate(locs), np.concatenate(values))


def random_walk_dataset(size, n=96, seed=0, extent=1000.0):
    """Uniform locations and Gaussian random-walk values (low periodicity)."""
    rng = np.random.default_rng(seed)
    locs = rng.uniform(0.0, extent, size=(size, 2))
    values = np.cumsum(rng.normal(size=(size, n)), axis=1) + rng.normal(0.0, 5.0, size=(size, 1))
    return Dataset(np.arange(size), locs, values)


def grid_counts_dataset(size, n=96, seed=0, grid=200):
    """Integer counts on grid-cell centroids, mimicking gridded event data.

    Produces exact ties in both spatial distance and margin tests.
    """
    rng = np.random.default_rng(seed)
    cells = rng.choice(grid * grid, size=size, replace=False)
    locs = np.stack([cells % grid, cells // grid], axis=1) + 0.5
    rate = rng.gamma(2.0, 4.0, size=(size, 1))
    season = 1.0 + 0.5 * np.sin(2 * np.pi * np.arange(n) / 12.0 + rng.uniform(0, 6.3, (size, 1)))
    values = rng.poisson(rate * season).astype(np.float64)
    return Dataset(np.arange(size), locs, values)


def regional_walk_dataset(size, n=96, seed=0, extent=1000.0, regions=8, local=0.3):
    """Random walks that share a regional trend with their spatial neighbours.

    The extent is cut into ``regions x regions`` cells.  Each cell carries
    one Gaussian random walk and each series adds its own walk with step
    scale ``local`` on top of its cell's trend.  Nearby series are therefore
    similar, which is what gives the similarity filter something to prune.
    """
    rng = np.random.default_rng(seed)
    locs = rng.uniform(0.0, extent, size=(size, 2))
    trend = np.cumsum(rng.normal(size=(regions * regions, n)), axis=1)
    cx = np.minimum(locs[:, 0] // (extent / regions), regions - 1)
    cy = np.minimum(locs[:, 1] // (extent / regions), regions - 1)
    cell = (cx * regions + cy).astype(np.int64)
    values = trend[cell] + np.cumsum(rng.normal(0.0, local, size=(size, n)), axis=1)
    return Dataset(np.arange(size), locs, values)
