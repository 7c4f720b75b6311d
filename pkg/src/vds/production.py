"""Monte Carlo production front-end: requests, job splitting, derivations, write-back.

The metadata store keeps production requests and an append-only list of
completion records parsed from job logs.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import FormatError, LogFormatError, UnknownProject
from .vdl import ArgClass, Derivation, FileRef, FormalArg, Literal, Transformation

log = logging.getLogger(__name__)

FORTRAN_SECTION = "FORTRAN_SECTION"
ORCA_SECTION = "ORCA_SECTION"


@dataclass(frozen=True)
class ProductionRequest:
    project: str
    total_events: int
    events_per_job: int
    kincard: str
    simcard: str
    geomfile: str
    pipeline: tuple[str, ...] = (FORTRAN_SECTION, ORCA_SECTION)

    def __post_init__(self):
        if self.total_events < 1 or self.events_per_job < 1:
            raise ValueError("total_events and events_per_job must be positive")
        object.__setattr__(self, "pipeline", tuple(self.pipeline))


@dataclass(frozen=True)
class JobDescription:
    request: ProductionRequest


@dataclass
class CompletionRecord:
    dv_name: str
    status: str  # "success" or "failure"
    reason: str | None = None
    output_sizes: dict[str, int] = field(default_factory=dict)
    output_locations: dict[str, tuple[str, str]] = field(default_factory=dict)
    wall_seconds: float = 0.0
    produced_events: int = 0
    start: float | None = None
    end: float | None = None
    ignored_keys: int = 0

    @property
    def succeeded(self) -> bool:
        return self.status == "success"


# -- metadata store --------------------------------------------------------


class MetadataDb:
    def __init__(self):
        self.requests: dict[str, ProductionRequest] = {}
        self.completions: list[CompletionRecord] = []
        self._lock = threading.Lock()

    def add_request(self, request: ProductionRequest) -> None:
        self.requests[request.project] = request

    def read_request(self, project: str) -> JobDescription:
        try:
            return JobDescription(self.requests[project])
        except KeyError:
            raise UnknownProject(project) from None

    def write_completion(self, record: CompletionRecord) -> None:
        with self._lock:
            self.completions.append(record)

    def snapshot(self) -> list[CompletionRecord]:
        with self._lock:
            return list(self.completions)

    def success_count(self) -> int:
        return sum(1 for r in self.snapshot() if r.succeeded)

    def failure_count(self) -> int:
        return sum(1 for r in self.snapshot() if not r.succeeded)

    def events_produced(self) -> int:
        return sum(r.produced_events for r in self.snapshot() if r.succeeded)

    def success_rate(self) -> float:
        records = self.snapshot()
        return sum(r.succeeded for r in records) / len(records) if records else 0.0

    def to_json(self) -> dict:
        completions = []
        for r in self.snapshot():
            d = asdict(r)
            d["output_locations"] = {k: list(v) for k, v in r.output_locations.items()}
            completions.append(d)
        requests = []
        for req in self.requests.values():
            d = asdict(req)
            d["pipeline"] = list(req.pipeline)
            requests.append(d)
        return {"requests": requests, "completions": completions}

    @classmethod
    def from_json(cls, data: dict) -> MetadataDb:
        db = cls()
        try:
            for d in data.get("requests", []):
                db.add_request(ProductionRequest(**d))
            for d in data.get("completions", []):
                d = dict(d)
                d["output_locations"] = {k: tuple(v) for k, v in d.get("output_locations", {}).items()}
                db.completions.append(CompletionRecord(**d))
        except (TypeError, ValueError) as exc:
            raise FormatError(0, f"bad metadata record: {exc}") from exc
        return db

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> MetadataDb:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(exc.lineno, exc.msg) from exc
        return cls.from_json(data)


def read_request(db: MetadataDb, project: str) -> JobDescription:
    return db.read_request(project)


def write_completion(db: MetadataDb, record: CompletionRecord) -> MetadataDb:
    db.write_completion(record)
    return db


# -- splitting and derivation generation -----------------------------------


def split_jobs(jd: JobDescription) -> list[tuple[int, int]]:
    """Split a request into ``(runnum, numevents)`` jobs; the last job takes the remainder."""
    total, per_job = jd.request.total_events, jd.request.events_per_job
    n = -(-total // per_job)
    jobs = [(runnum, per_job) for runnum in range(1, n)]
    jobs.append((n, total - per_job * (n - 1)))
    return jobs


def production_transformations() -> list[Transformation]:
    none, inp, out = ArgClass.NONE, ArgClass.INPUT, ArgClass.OUTPUT
    fortran = Transformation(
        FORTRAN_SECTION,
        (
            FormalArg("runnum", none),
            FormalArg("project", none),
            FormalArg("numevents", none),
            FormalArg("outfile", out),
            FormalArg("kincard", inp),
            FormalArg("simcard", inp),
            FormalArg("geomfile", inp),
            FormalArg("logfile", out),
        ),
        (
            (none, "runnum"),
            (none, "project"),
            (none, "numevents"),
            (inp, "kincard"),
            (inp, "simcard"),
            (inp, "geomfile"),
            (out, "logfile"),
            (out, "outfile"),
        ),
    )
    orca = Transformation(
        ORCA_SECTION,
        (
            FormalArg("runnum", none),
            FormalArg("project", none),
            FormalArg("numevents", none),
            FormalArg("fzfile", inp),
            FormalArg("ntplfile", out),
            FormalArg("logfile", out),
        ),
        (
            (none, "runnum"),
            (none, "project"),
            (none, "numevents"),
            (inp, "fzfile"),
            (out, "logfile"),
            (out, "ntplfile"),
        ),
    )
    return [fortran, orca]


def simulation_dv_name(project: str, runnum: int) -> str:
    return f"{project.upper()}_{runnum}_SIMULATION"


def analysis_dv_name(project: str, runnum: int) -> str:
    return f"{project.upper()}_{runnum}_ANALYSIS"


def generate_derivations(jd: JobDescription, splits: list[tuple[int, int]]) -> list[Derivation]:
    """Two derivations per job: detector simulation, then n-tuple production."""
    req = jd.request
    inp, out = ArgClass.INPUT, ArgClass.OUTPUT
    dvs = []
    for runnum, numevents in splits:
        stem = f"{req.project}_{runnum}"
        dvs.append(
            Derivation(
                simulation_dv_name(req.project, runnum),
                FORTRAN_SECTION,
                {
                    "kincard": FileRef(inp, req.kincard),
                    "simcard": FileRef(inp, req.simcard),
                    "geomfile": FileRef(inp, req.geomfile),
                    "logfile": FileRef(out, f"fortran.{stem}.log"),
                    "numevents": Literal(str(numevents)),
                    "outfile": FileRef(out, f"{stem}.fz"),
                    "project": Literal(req.project),
                    "runnum": Literal(str(runnum)),
                },
            )
        )
        if ORCA_SECTION in req.pipeline:
            dvs.append(
                Derivation(
                    analysis_dv_name(req.project, runnum),
                    ORCA_SECTION,
                    {
                        "fzfile": FileRef(inp, f"{stem}.fz"),
                        "logfile": FileRef(out, f"orca.{stem}.log"),
                        "numevents": Literal(str(numevents)),
                        "ntplfile": FileRef(out, f"{stem}.ntpl"),
                        "project": Literal(req.project),
                        "runnum": Literal(str(runnum)),
                    },
                )
            )
    return dvs


def production_targets(jd: JobDescription, splits: list[tuple[int, int]]) -> list[str]:
    """The derivation whose product is the point of each job (last pipeline stage)."""
    name = analysis_dv_name if ORCA_SECTION in jd.request.pipeline else simulation_dv_name
    return [name(jd.request.project, runnum) for runnum, _ in splits]


# -- job logs --------------------------------------------------------------

_KNOWN_KEYS = {"dv", "status", "reason", "events", "wall_seconds", "outfile", "start", "end"}


def format_job_log(record: CompletionRecord) -> str:
    lines = [f"dv={record.dv_name}", f"status={record.status}"]
    if record.reason:
        lines.append(f"reason={record.reason}")
    lines.append(f"events={record.produced_events}")
    lines.append(f"wall_seconds={record.wall_seconds:g}")
    for lfn in sorted(record.output_sizes):
        site, pfn = record.output_locations[lfn]
        lines.append(f"outfile={lfn},{record.output_sizes[lfn]},{site},{pfn}")
    if record.start is not None:
        lines.append(f"start={record.start:g}")
    if record.end is not None:
        lines.append(f"end={record.end:g}")
    return "\n".join(lines) + "\n"


def parse_job_log(text: str) -> CompletionRecord:
    """Parse a ``key=value`` job log into a completion record."""
    values: dict[str, str] = {}
    outfiles: list[tuple[int, str]] = []
    ignored = 0
    lines = text.splitlines()
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise LogFormatError(lineno, f"expected key=value, got {line!r}")
        if key not in _KNOWN_KEYS:
            ignored += 1
            continue
        if key == "outfile":
            outfiles.append((lineno, value.strip()))
        else:
            values[key] = value.strip()
    end_line = len(lines) + 1
    for key in ("dv", "status"):
        if key not in values:
            raise LogFormatError(end_line, f"missing mandatory key {key!r}")
    status = values["status"]
    if status not in ("success", "failure"):
        raise LogFormatError(end_line, f"status must be success or failure, got {status!r}")

    sizes: dict[str, int] = {}
    locations: dict[str, tuple[str, str]] = {}
    for lineno, value in outfiles:
        parts = value.split(",")
        if len(parts) != 4:
            raise LogFormatError(lineno, "outfile needs <lfn>,<bytes>,<site>,<pfn>")
        lfn, size, site, pfn = parts
        try:
            sizes[lfn] = int(size)
        except ValueError:
            raise LogFormatError(lineno, f"bad byte count {size!r}") from None
        locations[lfn] = (site, pfn)
    if ignored:
        log.warning("ignored %d unknown key(s) in job log for %s", ignored, values["dv"])

    def num(key, conv, default):
        if key not in values:
            return default
        try:
            return conv(values[key])
        except ValueError:
            raise LogFormatError(end_line, f"bad value for {key}: {values[key]!r}") from None

    return CompletionRecord(
        dv_name=values["dv"],
        status=status,
        reason=values.get("reason") if status == "failure" else None,
        output_sizes=sizes,
        output_locations=locations,
        wall_seconds=num("wall_seconds", float, 0.0),
        produced_events=num("events", int, 0),
        start=num("start", float, None),
        end=num("end", float, None),
        ignored_keys=ignored,
    )
