import csv
import json
import math

import pytest

from geots.core import InputError
from geots.workload import (WorkloadSpec, make_specs, run_workload, scale_bench, thread_cap,
                            write_report_csv, write_report_json)

from conftest import SMALL, tiny_dataset


def test_resolve_percentages():
    ds = tiny_dataset([[0, 10], [2, 4]], locs=[[0, 0], [30, 40]])
    p = WorkloadSpec("rr").resolve(ds)
    assert p["eps"] == pytest.approx(0.75)
    assert p["rho"] == pytest.approx(15.0)
    assert p["delta"] == 20 and "k" not in p
    p = WorkloadSpec("rk", rho_pct=50, rho_mode="area", eps=2.0).resolve(ds)
    assert p["eps"] == 2.0
    assert p["rho"] == pytest.approx(math.sqrt(0.5 * 1200 / math.pi))
    assert p["k"] == 30 and "delta" not in p


@pytest.mark.parametrize("kw", [
    dict(kind="rr", eps=1.0, eps_pct=5.0),
    dict(kind="rr", rho_pct=0.0),
    dict(kind="rr", eps_pct=150.0),
    dict(kind="kr", rho=5.0),
    dict(kind="rk", delta=3),
    dict(kind="rr", k=3),
    dict(kind="rr", rho_mode="square"),
    dict(kind="rr", queries=0),
])
def test_spec_validation(kw):
    with pytest.raises(InputError):
        WorkloadSpec(**kw)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("GEOTS_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("GEOTS_THREADS", "0")
    with pytest.raises(InputError):
        thread_cap()
    monkeypatch.delenv("GEOTS_THREADS")
    assert thread_cap() >= 1


def test_query_sampling_is_seeded(walk300):
    _, a = make_specs(walk300, WorkloadSpec("kr", queries=10, seed=3))
    _, b = make_specs(walk300, WorkloadSpec("kr", queries=10, seed=3))
    _, c = make_specs(walk300, WorkloadSpec("kr", queries=10, seed=4))
    assert [s.tq.id for s in a] == [s.tq.id for s in b] != [s.tq.id for s in c]


def test_threaded_rows_keep_query_order(sbtsr300):
    wspec = WorkloadSpec("rk", queries=12, eps_pct=5.0)
    one = run_workload(sbtsr300, wspec, verify=True, threads=1)
    many = run_workload(sbtsr300, wspec, verify=True, threads=4)
    key = lambda r: (r["query"], r["query_id"], r["hits"], r["nodes_visited"])
    assert [key(r) for r in one["rows"]] == [key(r) for r in many["rows"]]
    assert many["header"]["threads"] == 4
    assert one["aggregate"]["mismatches"] == 0


def test_report_files(tmp_path, btsr300):
    report = run_workload(btsr300, WorkloadSpec("rr", queries=5, eps_pct=5.0), verify=True)
    write_report_csv(report, tmp_path / "r.csv")
    write_report_json(report, tmp_path / "r.json")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    assert "# kind=rr" in meta and any(l.startswith("# eps=") for l in meta)
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    assert len(rows) == 5 and rows[0]["diff"] == "False"
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["aggregate"]["queries"] == 5 and len(data["rows"]) == 5


def test_scale_bench_rows(walk300):
    rows = scale_bench(walk300, [1, 2], WorkloadSpec("rr", queries=5, eps_pct=5.0), config=SMALL)
    assert [r["series"] for r in rows] == [300, 600]
    assert rows[0]["mismatches"] == 0 and rows[1]["mismatches"] is None
    assert all(r["engine_ms"] > 0 and r["oracle_ms"] > 0 for r in rows)


def test_queries_from_base(walk300):
    from geots.data import synthesize
    from geots.index import build_index
    big = build_index(synthesize(walk300, 2, seed=1), "btsr", SMALL)
    wspec = WorkloadSpec("kr", queries=8, seed=2)
    rows = run_workload(big, wspec, queries_from=walk300)["rows"]
    _, specs = make_specs(walk300, wspec)
    assert [r["query_id"] for r in rows] == [s.tq.id for s in specs]
