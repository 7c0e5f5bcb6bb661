"""Query workloads: parameter resolution, timed execution, oracle diffing and reports."""
import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .core import InputError
from .oracle import oracle
from .query import KINDS, METHODS, QuerySpec, run_query

# Defaults for the 96-step datasets: rho 30%, eps 7.5%, delta 20, k 30.
DEFAULT_RHO_PCT = 30.0
DEFAULT_EPS_PCT = 7.5
DEFAULT_DELTA = 20
DEFAULT_K = 30
RHO_MODES = ("diagonal", "area")

ROW_FIELDS = ("query", "query_id", "wall_ms", "hits", "exhausted", "nodes_visited",
              "leaves_visited", "series_verified", "margin_comparisons", "oracle_ms", "diff")


def thread_cap():
    """Worker count from ``GEOTS_THREADS`` (default: CPU count)."""
    raw = os.environ.get("GEOTS_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"GEOTS_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InputError(f"GEOTS_THREADS must be a positive integer, got {raw!r}")
    return value


def _pct(name, value):
    if value is not None and not 0 < value <= 100:
        raise InputError(f"{name} must be in (0, 100], got {value}")


@dataclass(frozen=True)
class WorkloadSpec:
    """Query parameters, absolute or as percentages of the dataset extent.

    ``eps_pct`` is relative to the value range.  ``rho_pct`` is a fraction
    of the bbox diagonal (``rho_mode="diagonal"``) or of the bbox area
    covered by the query disc (``rho_mode="area"``).
    """

    kind: str
    queries: int = 100
    seed: int = 7
    eps: float = None
    eps_pct: float = None
    rho: float = None
    rho_pct: float = None
    rho_mode: str = "diagonal"
    delta: int = None
    k: int = None
    method: str = "checkpoint"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown query kind {self.kind!r}; expected one of {KINDS}")
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.rho_mode not in RHO_MODES:
            raise InputError(f"unknown rho mode {self.rho_mode!r}")
        if self.queries < 1:
            raise InputError("queries must be >= 1")
        if self.eps is not None and self.eps_pct is not None:
            raise InputError("give eps or eps_pct, not both")
        if self.rho is not None and self.rho_pct is not None:
            raise InputError("give rho or rho_pct, not both")
        _pct("eps_pct", self.eps_pct)
        _pct("rho_pct", self.rho_pct)
        uses = {"rr": ("rho", "delta"), "kr": ("delta", "k"), "rk": ("rho", "k")}[self.kind]
        if "rho" not in uses and (self.rho is not None or self.rho_pct is not None):
            raise InputError(f"{self.kind} queries take no rho")
        if "delta" not in uses and self.delta is not None:
            raise InputError(f"{self.kind} queries take no delta")
        if "k" not in uses and self.k is not None:
            raise InputError(f"{self.kind} queries take no k")

    def resolve(self, dataset):
        """Absolute parameters for ``dataset``, defaults filled in."""
        lo, hi = dataset.value_range
        if self.eps is not None:
            eps = float(self.eps)
        else:
            eps = (self.eps_pct if self.eps_pct is not None else DEFAULT_EPS_PCT) / 100 * (hi - lo)
        out = {"kind": self.kind, "method": self.method, "eps": eps, "queries": self.queries,
               "seed": self.seed}
        if self.kind in ("rr", "rk"):
            out["rho"] = self._rho(dataset)
        if self.kind in ("rr", "kr"):
            out["delta"] = int(self.delta if self.delta is not None else DEFAULT_DELTA)
        if self.kind in ("kr", "rk"):
            out["k"] = int(self.k if self.k is not None else DEFAULT_K)
        return out

    def _rho(self, dataset):
        if self.rho is not None:
            return float(self.rho)
        pct = self.rho_pct if self.rho_pct is not None else DEFAULT_RHO_PCT
        xmin, ymin, xmax, ymax = dataset.bbox
        if self.rho_mode == "diagonal":
            return pct / 100 * math.hypot(xmax - xmin, ymax - ymin)
        return math.sqrt(pct / 100 * (xmax - xmin) * (ymax - ymin) / math.pi)


def query_rows(dataset, count, seed):
    """Rows of ``dataset`` used as query series, drawn without replacement when possible."""
    rng = np.random.default_rng(seed)
    return rng.choice(len(dataset), size=count, replace=count > len(dataset))


def make_specs(dataset, wspec):
    params = wspec.resolve(dataset)
    kw = {key: params[key] for key in ("eps", "rho", "delta", "k") if key in params}
    specs = [QuerySpec(dataset.series(r), wspec.kind, method=wspec.method, **kw)
             for r in query_rows(dataset, wspec.queries, wspec.seed)]
    return params, specs


def same_answer(hits, expected):
    return [tuple(h) for h in hits] == [tuple(h) for h in expected]


def _run_one(index, spec, verify, time_oracle):
    t0 = time.perf_counter()
    result = run_query(index, spec)
    wall = (time.perf_counter() - t0) * 1e3
    row = {"query_id": spec.tq.id, "wall_ms": wall, "hits": len(result.hits),
           "exhausted": result.exhausted, **asdict(result.counters),
           "oracle_ms": None, "diff": None}
    if verify or time_oracle:
        t0 = time.perf_counter()
        expected = oracle(index.dataset, spec)
        row["oracle_ms"] = (time.perf_counter() - t0) * 1e3
        if verify:
            row["diff"] = not same_answer(result.hits, expected.hits)
    return row


def run_workload(index, wspec, verify=False, time_oracle=False, threads=None, warmup=True,
                 queries_from=None):
    """Run ``wspec`` on ``index``; returns a report dict.

    Rows come back in query order whatever the pool's completion order.
    ``warmup`` runs the first query once untimed so kernel compilation or
    cache loading does not land in the first row.  ``queries_from`` is the
    dataset the query series are drawn from and percent parameters resolve
    against (default: the indexed dataset); pass the base dataset to run the
    same workload on scaled copies.
    """
    params, specs = make_specs(queries_from if queries_from is not None else index.dataset, wspec)
    threads = min(threads or thread_cap(), len(specs))
    if warmup:
        run_query(index, specs[0])
        oracle(index.dataset, specs[0])
    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda s: _run_one(index, s, verify, time_oracle), specs))
    else:
        rows = [_run_one(index, s, verify, time_oracle) for s in specs]
    total = time.perf_counter() - t0
    for i, row in enumerate(rows):
        row["query"] = i
    header = {**params, "index": index.kind, "series": len(index.dataset), "length": index.n,
              "eps_pct": wspec.eps_pct, "rho_pct": wspec.rho_pct, "rho_mode": wspec.rho_mode,
              "threads": threads, "verify": verify}
    return {"header": header, "rows": rows, "aggregate": _aggregate(rows, total)}


def _aggregate(rows, total):
    agg = {"queries": len(rows), "total_s": total}
    for key in ("wall_ms", "hits", "nodes_visited", "leaves_visited", "series_verified",
                "margin_comparisons"):
        agg[f"mean_{key}"] = float(np.mean([r[key] for r in rows]))
    oracle_ms = [r["oracle_ms"] for r in rows if r["oracle_ms"] is not None]
    if oracle_ms:
        agg["mean_oracle_ms"] = float(np.mean(oracle_ms))
    diffs = [r["diff"] for r in rows if r["diff"] is not None]
    if diffs:
        agg["mismatches"] = int(sum(diffs))
    return agg


def write_report_csv(report, path):
    """Per-query rows; resolved parameters go in leading ``#`` lines."""
    with open(path, "w", newline="") as fh:
        for key, value in report["header"].items():
            fh.write(f"# {key}={value}\n")
        out = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
        out.writeheader()
        for row in report["rows"]:
            out.writerow({key: ("" if row[key] is None else row[key]) for key in ROW_FIELDS})


def write_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)


def scale_bench(base, factors, wspec, kind="sbtsr", config=None, seed=0, verify_at=(1,)):
    """Engine vs oracle mean query time on ``base`` scaled by each factor.

    Scaled datasets come from :func:`geots.data.synthesize`; factor 1 is
    ``base`` itself.  Every factor runs the same workload: query series and
    resolved parameters come from ``base``.  Answers are diffed against the
    oracle for factors in ``verify_at`` and the oracle is timed at every
    factor.
    """
    from .data import synthesize
    from .index import IndexConfig, build_index

    config = config or IndexConfig()
    out = []
    for factor in factors:
        data = base if factor == 1 else synthesize(base, factor, seed=seed)
        t0 = time.perf_counter()
        index = build_index(data, kind, config)
        build_s = time.perf_counter() - t0
        report = run_workload(index, wspec, verify=factor in verify_at, time_oracle=True,
                              queries_from=base)
        agg = report["aggregate"]
        out.append({"factor": factor, "series": len(data), "build_s": build_s,
                    "engine_ms": agg["mean_wall_ms"], "oracle_ms": agg["mean_oracle_ms"],
                    "mean_nodes_visited": agg["mean_nodes_visited"],
                    "mismatches": agg.get("mismatches")})
    return out
