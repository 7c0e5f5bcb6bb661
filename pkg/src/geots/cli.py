"""Command line interface: ``geots <subcommand>``.

Exit codes: 0 ok, 1 verification failure, 2 usage or input error.
"""
import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from .core import GeoTimeSeries, InputError
from .data import (grid_counts_dataset, ingest, random_walk_dataset, regional_walk_dataset,
                   synthesize, write_csv)
from .index import KINDS as INDEX_KINDS, IndexConfig, build_index
from .oracle import oracle
from .query import KINDS as QUERY_KINDS, METHODS, QuerySpec, run_query
from .storage import MAGIC, IndexFormatError, load_index, save_index
from .workload import (RHO_MODES, WorkloadSpec, run_workload, same_answer, scale_bench,
                       write_report_csv, write_report_json)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2
GENERATORS = {"walk": random_walk_dataset, "regional": regional_walk_dataset,
              "grid": grid_counts_dataset}


class UsageError(Exception):
    pass


def _is_index_file(path):
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def _config(args):
    return IndexConfig(m=args.m, M=args.M, k_mbts=args.k_mbts, segments=args.segments,
                       seed=args.build_seed)


def _open_source(args):
    """An index from ``args.source``: a saved index file or a CSV built on the fly."""
    if _is_index_file(args.source):
        return load_index(args.source)
    return build_index(ingest(args.source), args.index, _config(args))


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_ingest(args):
    ds = ingest(args.csv)
    summary = {"series": len(ds), "length": ds.n, "bbox": ds.bbox, "value_range": ds.value_range}
    if args.out:
        write_csv(ds, args.out)
    _emit(summary)
    return EXIT_OK


def cmd_synthesize(args):
    if args.base:
        base = ingest(args.base)
    else:
        base = GENERATORS[args.generator](args.size, n=args.length, seed=args.seed)
    ds = base if args.factor == 1 else synthesize(base, args.factor, seed=args.seed)
    write_csv(ds, args.out)
    _emit({"series": len(ds), "length": ds.n, "out": args.out})
    return EXIT_OK


def cmd_build(args):
    ds = ingest(args.csv)
    index = build_index(ds, args.index, _config(args))
    save_index(index, args.out)
    _emit({"index": index.kind, "series": len(ds), "length": ds.n, "nodes": len(index.nodes()),
           "config": asdict(index.config), "out": args.out})
    return EXIT_OK


def _workload_spec(args, kind):
    return WorkloadSpec(kind=kind, queries=args.queries, seed=args.seed, eps=args.eps,
                        eps_pct=args.eps_pct, rho=args.rho, rho_pct=args.rho_pct,
                        rho_mode=args.rho_mode, delta=args.delta, k=args.k, method=args.method)


def _query_series(args, index):
    if args.series_id is not None:
        ds = index.dataset
        try:
            row = ds.row(args.series_id)
        except KeyError:
            raise InputError(f"no series with id {args.series_id}") from None
        return ds.series(row)
    if args.values is None or args.x is None or args.y is None:
        raise UsageError("give --series-id, or --x, --y and --values")
    values = np.array([float(v) for v in args.values.split(",")])
    return GeoTimeSeries(0, (args.x, args.y), values)


def cmd_query(args):
    index = _open_source(args)
    tq = _query_series(args, index)
    # Percent parameters resolve against the indexed dataset.
    params = _workload_spec(args, args.kind).resolve(index.dataset)
    kw = {key: params[key] for key in ("eps", "rho", "delta", "k") if key in params}
    spec = QuerySpec(tq, args.kind, method=args.method, **kw)
    result = run_query(index, spec)
    out = {"params": params, "hits": [h._asdict() for h in result.hits],
           "counters": asdict(result.counters), "exhausted": result.exhausted}
    code = EXIT_OK
    if args.verify:
        out["matches_oracle"] = same_answer(result.hits, oracle(index.dataset, spec).hits)
        code = EXIT_OK if out["matches_oracle"] else EXIT_MISMATCH
    _emit(out)
    return code


def cmd_bench(args):
    if args.scales:
        if _is_index_file(args.source):
            raise UsageError("--scales needs a CSV source")
        factors = [int(f) for f in args.scales.split(",")]
        rows = scale_bench(ingest(args.source), factors, _workload_spec(args, args.kind),
                           args.index, _config(args), seed=args.build_seed)
        _emit(rows, args.json)
        return EXIT_MISMATCH if any(r["mismatches"] for r in rows) else EXIT_OK
    index = _open_source(args)
    report = run_workload(index, _workload_spec(args, args.kind), verify=args.verify)
    if args.csv:
        write_report_csv(report, args.csv)
    if args.json:
        write_report_json(report, args.json)
    _emit({"header": report["header"], "aggregate": report["aggregate"]})
    return EXIT_MISMATCH if report["aggregate"].get("mismatches") else EXIT_OK


def cmd_verify(args):
    index = _open_source(args)
    kinds = QUERY_KINDS if args.kind == "all" else (args.kind,)
    summary, failed = {}, False
    for kind in kinds:
        report = run_workload(index, _workload_spec(args, kind), verify=True)
        bad = [r["query"] for r in report["rows"] if r["diff"]]
        summary[kind] = {"queries": len(report["rows"]), "mismatches": len(bad),
                         "mismatched_queries": bad}
        failed |= bool(bad)
    _emit(summary)
    return EXIT_MISMATCH if failed else EXIT_OK


def _positive(cast):
    def parse(text):
        try:
            value = cast(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _add_build_flags(p, seed_flag="--build-seed"):
    g = p.add_argument_group("index build (CSV sources)")
    g.add_argument("--index", choices=INDEX_KINDS, default="sbtsr")
    g.add_argument("--segments", type=_positive(int), default=10)
    g.add_argument("--k-mbts", type=_positive(int), default=10)
    g.add_argument("--m", type=_positive(int), default=40, help="minimum node fill")
    g.add_argument("--M", type=_positive(int), default=100, help="node capacity")
    g.add_argument(seed_flag, dest="build_seed", type=int, default=42, help="clustering seed")


def _add_query_flags(p, kinds, workload=True):
    g = p.add_argument_group("query parameters")
    g.add_argument("--kind", choices=kinds, required=True)
    g.add_argument("--method", choices=METHODS, default="checkpoint")
    eps = g.add_mutually_exclusive_group()
    eps.add_argument("--eps", type=float)
    eps.add_argument("--eps-pct", type=float, help="percent of the value range")
    rho = g.add_mutually_exclusive_group()
    rho.add_argument("--rho", type=float)
    rho.add_argument("--rho-pct", type=float, help="percent of the bbox (see --rho-mode)")
    g.add_argument("--rho-mode", choices=RHO_MODES, default="diagonal")
    g.add_argument("--delta", type=_positive(int))
    g.add_argument("--k", type=_positive(int))
    if workload:
        g.add_argument("--queries", type=_positive(int), default=100)
        g.add_argument("--seed", type=int, default=7, help="query sampling seed")


def parser():
    ap = argparse.ArgumentParser(prog="geots", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a CSV dataset")
    p.add_argument("csv")
    p.add_argument("-o", "--out", help="write the normalised CSV here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synthesize", help="generate or scale a dataset")
    p.add_argument("--base", help="CSV to scale; omitted: generate one")
    p.add_argument("--generator", choices=sorted(GENERATORS), default="walk")
    p.add_argument("--size", type=_positive(int), default=1000)
    p.add_argument("--length", type=_positive(int), default=96)
    p.add_argument("--factor", type=_positive(int), default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("build", help="build and save an index")
    p.add_argument("csv")
    p.add_argument("-o", "--out", required=True)
    _add_build_flags(p, seed_flag="--seed")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="run one query")
    p.add_argument("source", help="index file or CSV dataset")
    _add_build_flags(p)
    _add_query_flags(p, QUERY_KINDS, workload=False)
    p.add_argument("--series-id", type=int, help="use this dataset series as the query")
    p.add_argument("--x", type=float)
    p.add_argument("--y", type=float)
    p.add_argument("--values", help="comma separated query values")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_query, queries=1, seed=0)

    p = sub.add_parser("bench", help="run a query workload")
    p.add_argument("source", help="index file or CSV dataset")
    _add_build_flags(p)
    _add_query_flags(p, QUERY_KINDS)
    p.add_argument("--verify", action="store_true", help="diff every answer against the oracle")
    p.add_argument("--scales", help="comma separated factors, e.g. 1,2,3,4")
    p.add_argument("--csv", help="per-query CSV report")
    p.add_argument("--json", help="full JSON report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="diff workloads against the oracle")
    p.add_argument("source", help="index file or CSV dataset")
    _add_build_flags(p)
    _add_query_flags(p, QUERY_KINDS + ("all",))
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "verify" and args.kind == "all":
            if args.rho is not None or args.rho_pct is not None or args.delta or args.k:
                raise UsageError("--kind all uses default rho, delta and k")
        return args.func(args)
    except UsageError as exc:
        ap.error(str(exc))
    except (InputError, IndexFormatError, OSError) as exc:
        print(f"geots: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
