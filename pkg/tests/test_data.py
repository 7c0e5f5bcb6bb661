import numpy as np
import pytest

from geots.data import (IngestError, grid_counts_dataset, ingest, random_walk_dataset,
                        regional_walk_dataset, synthesize, write_csv)


def write(tmp_path, text):
    path = tmp_path / "d.csv"
    path.write_text(text)
    return path


def test_ingest_with_header(tmp_path):
    path = write(tmp_path, "id,x,y,v1,v2,v3\n7,0.5,1,1,2,3\n2,3,4,4,5,6\n")
    ds = ingest(path)
    assert ds.ids.tolist() == [7, 2] and ds.n == 3
    assert ds.locs.tolist() == [[0.5, 1.0], [3.0, 4.0]]


def test_ingest_without_header_and_blank_lines(tmp_path):
    ds = ingest(write(tmp_path, "1,0,0,5\n\n2,1,1,6\n"))
    assert len(ds) == 2


@pytest.mark.parametrize("text,needle", [
    ("1,0,0,1,2\n2,0,0,1\n", "1 values, expected 2"),
    ("1,0,0,1\n1,2,2,3\n", "duplicate id 1"),
    ("1,0,0,x\n", "non-numeric"),
    ("1,0,0,nan\n", "non-finite"),
    ("1,0,0\n", "at least one value"),
    ("-3,0,0,1\n", "negative id"),
    ("", "no data rows"),
])
def test_ingest_errors(tmp_path, text, needle):
    with pytest.raises(IngestError) as exc:
        ingest(write(tmp_path, text))
    assert needle in str(exc.value)


def test_csv_round_trip(tmp_path):
    ds = random_walk_dataset(20, n=7, seed=2)
    write_csv(ds, tmp_path / "o.csv")
    back = ingest(tmp_path / "o.csv")
    assert np.array_equal(back.values, ds.values) and np.array_equal(back.locs, ds.locs)


def test_synthesize_size_and_determinism():
    base = grid_counts_dataset(50, n=12, seed=1)
    a = synthesize(base, 3, seed=5)
    b = synthesize(base, 3, seed=5)
    assert len(a) == 150 and len(set(a.ids.tolist())) == 150
    assert np.array_equal(a.values, b.values) and np.array_equal(a.locs, b.locs)
    assert np.array_equal(a.values[:50], base.values)


def test_synthesize_perturbations():
    base = random_walk_dataset(40, n=10, seed=3)
    out = synthesize(base, 4, seed=0)
    xmin, ymin, xmax, ymax = base.bbox
    for c in range(1, 4):
        shift = np.abs(out.values[40 * c:40 * (c + 1)] - base.values)
        assert np.allclose(shift, np.round(shift))
        assert shift.min() >= 1 - 1e-9 and shift.max() <= 10 + 1e-9
        moved = np.abs(out.locs[40 * c:40 * (c + 1)] - base.locs)
        assert np.all(moved <= 0.005 * np.array([xmax - xmin, ymax - ymin]) + 1e-9)


def test_synthesize_rejects_small_factor():
    with pytest.raises(ValueError):
        synthesize(random_walk_dataset(5, n=3), 1)


def test_generators_are_seeded():
    for gen in (random_walk_dataset, grid_counts_dataset, regional_walk_dataset):
        a, b = gen(30, n=8, seed=4), gen(30, n=8, seed=4)
        assert np.array_equal(a.values, b.values) and len(a) == 30
    grid = grid_counts_dataset(30, n=8)
    assert np.all(grid.values == np.round(grid.values))
