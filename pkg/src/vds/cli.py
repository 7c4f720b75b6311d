"""``vds`` command line: catalog editing, planning, production, simulation."""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

from filelock import FileLock

from .abstract import dag_to_text, plan_abstract
from .catalog import VirtualDataCatalog
from .concrete import emit_dag_file, plan_concrete
from .errors import VdlSyntaxError, VdsError
from .gridsim import GridConfig, export_trace
from .production import MetadataDb, ProductionRequest, generate_derivations, production_transformations, split_jobs
from .rls import ReplicaCatalog
from .scenario import load_scenario, run_scenario
from .vdl import Transformation, parse_vdl


class CliError(Exception):
    pass


@contextlib.contextmanager
def locked(path: Path):
    with FileLock(str(path) + ".lock", timeout=30):
        yield


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise CliError(f"{what} file {path} does not exist")
    return path


def _load_catalog(path: Path, create: bool = False) -> VirtualDataCatalog:
    if create and not path.exists():
        return VirtualDataCatalog()
    return VirtualDataCatalog.load(_require(path, "catalog"))


def _out(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -----------------------------------------------------------


def cmd_vdl_insert(args) -> int:
    source = Path(args.file)
    try:
        objects = parse_vdl(source.read_text(encoding="utf-8"))
    except VdlSyntaxError as exc:
        raise CliError(f"{source}:{exc.line}:{exc.column}: {exc.kind}: {exc.message}") from exc
    with locked(args.catalog):
        catalog = _load_catalog(args.catalog, create=True)
        n = catalog.insert_all(objects)
        catalog.save(args.catalog)
    print(f"{n} objects inserted")
    return 0


def cmd_vdl_list(args) -> int:
    catalog = _load_catalog(args.catalog)
    for obj in catalog.objects():
        print(("TR " if isinstance(obj, Transformation) else "DV ") + obj.name)
    return 0


def cmd_vdl_export(args) -> int:
    _out(args, _load_catalog(args.catalog).dumps())
    return 0


def cmd_plan_abstract(args) -> int:
    dag = plan_abstract(_load_catalog(args.catalog), args.target)
    _out(args, dag_to_text(dag))
    return 0


def cmd_plan_concrete(args) -> int:
    catalog = _load_catalog(args.catalog)
    rls = ReplicaCatalog.load(_require(args.rls, "replica catalog"))
    sites = None
    if args.config is not None:
        grid = GridConfig.from_json(json.loads(_require(args.config, "grid config").read_text()))
        sites = {s.site for s in grid.sites}
    dag = plan_abstract(catalog, args.target)
    cdag = plan_concrete(
        dag,
        args.site,
        rls,
        (args.storage_site, args.storage_prefix),
        sites=sites,
        keep=set(args.keep) if args.keep is not None else None,
        skip_existing_target=args.skip_existing_target,
    )
    _out(args, emit_dag_file(cdag))
    return 0


def cmd_request(args) -> int:
    request = ProductionRequest(
        project=args.project,
        total_events=args.total_events,
        events_per_job=args.events_per_job,
        kincard=args.kincard,
        simcard=args.simcard,
        geomfile=args.geomfile,
    )
    with locked(args.metadb):
        db = MetadataDb.load(args.metadb) if args.metadb.exists() else MetadataDb()
        db.add_request(request)
        db.save(args.metadb)
    print(f"request {args.project} recorded")
    return 0


def cmd_produce(args) -> int:
    db = MetadataDb.load(_require(args.metadb, "metadata db"))
    jd = db.read_request(args.project)
    splits = split_jobs(jd)
    with locked(args.catalog):
        catalog = _load_catalog(args.catalog, create=True)
        catalog.insert_all(production_transformations())
        catalog.insert_all(generate_derivations(jd, splits))
        catalog.save(args.catalog)
    print(f"{len(splits)} jobs generated")
    return 0


def cmd_rls_register(args) -> int:
    with locked(args.rls):
        rls = ReplicaCatalog.load(args.rls) if args.rls.exists() else ReplicaCatalog()
        rls.register(args.lfn, args.site, args.pfn)
        rls.save(args.rls)
    return 0


def cmd_rls_lookup(args) -> int:
    rls = ReplicaCatalog.load(_require(args.rls, "replica catalog"))
    for site, pfn in sorted(rls.lookup(args.lfn)):
        print(f"{args.lfn} {site} {pfn}")
    return 0


def cmd_simulate(args) -> int:
    scenario = load_scenario(_require(Path(args.scenario), "scenario"))
    result = run_scenario(scenario, seed=args.seed)
    report = json.dumps(result.report(), indent=2, sort_keys=True) + "\n"
    if args.stats:
        Path(args.stats).write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    if args.trace:
        Path(args.trace).write_text(export_trace(result.trace), encoding="utf-8")
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vds", description="Virtual data planning, production, and grid simulation.")
    parser.add_argument("--catalog", type=Path, default=Path("vdc.txt"), help="virtual data catalog file")
    parser.add_argument("--rls", type=Path, default=Path("rls.txt"), help="replica catalog file")
    parser.add_argument("--metadb", type=Path, default=Path("metadb.json"), help="production metadata database")
    parser.add_argument("--config", type=Path, default=None, help="grid config (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override the simulation seed")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    vdl = sub.add_parser("vdl", help="edit the virtual data catalog").add_subparsers(dest="vdl_command", required=True)
    p = vdl.add_parser("insert", help="insert objects from a VDL file")
    p.add_argument("file")
    p.set_defaults(func=cmd_vdl_insert)
    vdl.add_parser("list", help="list catalog objects").set_defaults(func=cmd_vdl_list)
    p = vdl.add_parser("export", help="dump the catalog as VDL")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_vdl_export)

    plan = sub.add_parser("plan", help="plan a virtual data product").add_subparsers(dest="plan_command", required=True)
    p = plan.add_parser("abstract", help="abstract DAG for a derivation or file")
    p.add_argument("target")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plan_abstract)
    p = plan.add_parser("concrete", help="site-resolved submit file")
    p.add_argument("target")
    p.add_argument("--site", required=True)
    p.add_argument("--storage-site", default="storage")
    p.add_argument("--storage-prefix", default="/store")
    p.add_argument("--skip-existing-target", action="store_true")
    p.add_argument("--keep", nargs="*", default=None, metavar="LFN", help="intermediate files to stage out")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plan_concrete)

    p = sub.add_parser("request", help="record a production request in the metadata db")
    p.add_argument("project")
    p.add_argument("--total-events", type=int, required=True)
    p.add_argument("--events-per-job", type=int, required=True)
    p.add_argument("--kincard", default="eg02_BigJets_Id_252.txt")
    p.add_argument("--simcard", default="STANDARD_125_Id_42.txt")
    p.add_argument("--geomfile", default="cms125.rz")
    p.set_defaults(func=cmd_request)

    p = sub.add_parser("produce", help="split a request into jobs and write their derivations")
    p.add_argument("project")
    p.set_defaults(func=cmd_produce)

    rls = sub.add_parser("rls", help="edit the replica catalog").add_subparsers(dest="rls_command", required=True)
    p = rls.add_parser("register")
    p.add_argument("lfn")
    p.add_argument("site")
    p.add_argument("pfn")
    p.set_defaults(func=cmd_rls_register)
    p = rls.add_parser("lookup")
    p.add_argument("lfn")
    p.set_defaults(func=cmd_rls_lookup)

    p = sub.add_parser("simulate", help="run a production scenario on the simulated grid")
    p.add_argument("scenario")
    p.add_argument("--stats", help="write the stats JSON here instead of stdout")
    p.add_argument("--trace", help="write the event trace here")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VdsError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
    except (CliError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
