"""WorkRunner: keep every grid site loaded between its low and high watermarks.

Abstract DAG targets wait in a FIFO queue and are concretized only when a
site needs work, so each plan sees the freshest replica catalog. A site is
refilled when its running count is strictly below the low watermark; it then
receives DAGs until running plus newly submitted exceeds the high watermark.
"""

from __future__ import annotations

import enum
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .abstract import plan_abstract
from .catalog import VirtualDataCatalog
from .concrete import ConcreteDag, plan_concrete
from .errors import ConcretizationFailed, ConfigError, DuplicateTarget, UnknownJob, UnknownTarget, VdsError
from .production import CompletionRecord, MetadataDb, parse_job_log
from .rls import ReplicaCatalog

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    QUEUED = "Queued"
    CONCRETIZING = "Concretizing"
    SUBMITTED = "Submitted"
    RUNNING = "Running"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"


ACTIVE = (Status.CONCRETIZING, Status.SUBMITTED, Status.RUNNING)
TERMINAL = (Status.SUCCEEDED, Status.FAILED)

_ALLOWED = {
    Status.QUEUED: {Status.CONCRETIZING},
    Status.CONCRETIZING: {Status.SUBMITTED, Status.FAILED},
    Status.SUBMITTED: {Status.RUNNING, Status.FAILED},
    Status.RUNNING: {Status.SUCCEEDED, Status.FAILED},
    Status.FAILED: {Status.QUEUED},  # only via retries
    Status.SUCCEEDED: set(),
}


@dataclass
class SiteState:
    site: str
    low_watermark: int
    high_watermark: int
    running: int = 0

    def __post_init__(self):
        if self.low_watermark < 0 or not self.low_watermark < self.high_watermark:
            raise ConfigError(f"site {self.site}: need 0 <= low < high, got {self.low_watermark}/{self.high_watermark}")


@dataclass
class JobRecord:
    dv_name: str
    status: Status = Status.QUEUED
    site: str | None = None
    submit_time: float | None = None
    end_time: float | None = None
    reason: str | None = None
    attempts: int = 0

    def move(self, status: Status) -> None:
        if status not in _ALLOWED[self.status]:
            raise ValueError(f"{self.dv_name}: illegal transition {self.status.value} -> {status.value}")
        self.status = status


@dataclass(frozen=True)
class SubmitAction:
    target: str
    site: str
    cdag: ConcreteDag


@dataclass
class SchedulerConfig:
    watermarks: dict[str, tuple[int, int]] = field(default_factory=dict)
    tick_interval_s: float = 60.0
    retries: int = 0

    @classmethod
    def parse(cls, text: str) -> SchedulerConfig:
        """Parse ``key = value`` lines: ``site.<id>.low``, ``site.<id>.high``, ``tick_interval_s``, ``retries``."""
        cfg = cls()
        lows: dict[str, int] = {}
        highs: dict[str, int] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep:
                raise ConfigError(f"line {lineno}: expected key = value")
            try:
                if key == "tick_interval_s":
                    cfg.tick_interval_s = float(value)
                elif key == "retries":
                    cfg.retries = int(value)
                elif key.startswith("site.") and key.endswith((".low", ".high")):
                    site, which = key[5:].rsplit(".", 1)
                    (lows if which == "low" else highs)[site] = int(value)
                else:
                    raise ConfigError(f"line {lineno}: unknown key {key!r}")
            except ValueError:
                raise ConfigError(f"line {lineno}: bad value {value!r}") from None
        for site in sorted(set(lows) | set(highs)):
            if site not in lows or site not in highs:
                raise ConfigError(f"site {site}: both low and high watermarks are required")
            cfg.watermarks[site] = (lows[site], highs[site])
        if cfg.tick_interval_s <= 0:
            raise ConfigError("tick_interval_s must be positive")
        return cfg


Planner = Callable[[str, str], ConcreteDag]


class WorkRunner:
    """Queue, concretize, submit, and track production DAGs.

    ``planner(target, site)`` turns a queued target into a concrete DAG; by
    default it runs the abstract and concrete planners against ``catalog``
    and ``rls``.
    """

    def __init__(
        self,
        catalog: VirtualDataCatalog,
        sites: Mapping[str, tuple[int, int]] | list[SiteState],
        rls: ReplicaCatalog | None = None,
        storage: tuple[str, str] = ("storage", "/store"),
        metadb: MetadataDb | None = None,
        retries: int = 0,
        planner: Planner | None = None,
    ):
        self.catalog = catalog
        self.rls = rls if rls is not None else ReplicaCatalog()
        self.storage = storage
        self.metadb = metadb
        self.retries = retries
        if isinstance(sites, Mapping):
            sites = [SiteState(s, low, high) for s, (low, high) in sites.items()]
        self.sites: dict[str, SiteState] = {s.site: s for s in sites}
        self.queue: deque[str] = deque()
        self.records: dict[str, JobRecord] = {}
        self.planner = planner or self._default_planner
        self.total_enqueued = 0
        self.in_flight: set[str] = set()

    def _default_planner(self, target: str, site: str) -> ConcreteDag:
        dag = plan_abstract(self.catalog, target)
        return plan_concrete(dag, site, self.rls, self.storage, sites=self.sites)

    def enqueue(self, targets: list[str]) -> WorkRunner:
        seen: set[str] = set()
        for t in targets:
            if t not in self.catalog.derivations:
                raise UnknownTarget(t)
            if t in self.records or t in seen:
                raise DuplicateTarget(t)
            seen.add(t)
        for t in targets:
            self.records[t] = JobRecord(t)
            self.queue.append(t)
        self.total_enqueued += len(targets)
        return self

    def tick(self, grid_view: Mapping[str, int], now: float = 0.0) -> list[SubmitAction]:
        """Refill every starved site, visiting sites in id order."""
        actions: list[SubmitAction] = []
        for site_id in sorted(self.sites):
            state = self.sites[site_id]
            state.running = grid_view.get(site_id, 0)
            if state.running >= state.low_watermark:
                continue
            submitted = 0
            while self.queue and state.running + submitted <= state.high_watermark:
                target = self.queue.popleft()
                record = self.records[target]
                record.move(Status.CONCRETIZING)
                record.attempts += 1
                try:
                    cdag = self.planner(target, site_id)
                except VdsError as exc:
                    failure = ConcretizationFailed(target, exc)
                    log.warning("%s", failure)
                    record.move(Status.FAILED)
                    record.reason = f"ConcretizationFailed: {exc.kind}"
                    record.end_time = now
                    continue
                record.move(Status.SUBMITTED)
                record.site = site_id
                record.submit_time = now
                record.end_time = None
                record.reason = None
                self.in_flight.add(target)
                actions.append(SubmitAction(target, site_id, cdag))
                submitted += 1
        return actions

    def mark_running(self, dv_name: str, time: float | None = None) -> None:
        record = self._active(dv_name)
        if record.status is Status.SUBMITTED:
            record.move(Status.RUNNING)

    def handle_completion(self, event) -> JobRecord:
        """Finalize a job from a simulator completion event and write it back."""
        record = self._active(event.dv_name)
        if record.status is Status.CONCRETIZING:
            raise UnknownJob(event.dv_name)
        success = event.outcome == "success"
        if record.status is Status.SUBMITTED and (success or getattr(event, "started_at", None) is not None):
            record.move(Status.RUNNING)
        record.move(Status.SUCCEEDED if success else Status.FAILED)
        self.in_flight.discard(record.dv_name)
        record.end_time = event.time
        record.reason = None if success else (event.reason or "unknown")
        if not success and record.attempts <= self.retries:
            record.move(Status.QUEUED)
            self.queue.append(record.dv_name)
            return record
        if self.metadb is not None:
            self.metadb.write_completion(self._completion_record(event))
        return record

    def _completion_record(self, event) -> CompletionRecord:
        text = getattr(event, "log", None)
        if text:
            return parse_job_log(text)
        return CompletionRecord(event.dv_name, event.outcome, event.reason, end=event.time)

    def _active(self, dv_name: str) -> JobRecord:
        record = self.records.get(dv_name)
        if record is None or record.status not in ACTIVE:
            raise UnknownJob(dv_name)
        return record

    def idle(self) -> bool:
        return not self.queue and not self.in_flight

    def stats(self) -> dict:
        counts = {s: 0 for s in Status}
        per_site: dict[str, dict[str, int]] = {s: {"running": 0, "succeeded": 0, "failed": 0} for s in sorted(self.sites)}
        for r in self.records.values():
            counts[r.status] += 1
            if r.site is None:
                continue
            bucket = per_site.setdefault(r.site, {"running": 0, "succeeded": 0, "failed": 0})
            if r.status in (Status.SUBMITTED, Status.RUNNING):
                bucket["running"] += 1
            elif r.status is Status.SUCCEEDED:
                bucket["succeeded"] += 1
            elif r.status is Status.FAILED:
                bucket["failed"] += 1
        submitted = [r for r in self.records.values() if r.submit_time is not None]
        failed = counts[Status.FAILED]
        failed_submitted = sum(1 for r in submitted if r.status is Status.FAILED)
        terminal_submitted = sum(1 for r in submitted if r.status in TERMINAL)
        return {
            "enqueued": self.total_enqueued,
            "queued": counts[Status.QUEUED],
            "concretizing": counts[Status.CONCRETIZING],
            "running": counts[Status.SUBMITTED] + counts[Status.RUNNING],
            "succeeded": counts[Status.SUCCEEDED],
            "failed": failed,
            "submitted": len(submitted),
            "failure_fraction": failed_submitted / terminal_submitted if terminal_submitted else 0.0,
            "per_site": per_site,
        }

    def stats_json(self) -> str:
        return json.dumps(self.stats(), indent=2, sort_keys=True) + "\n"
