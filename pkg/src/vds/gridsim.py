"""Deterministic discrete-event simulation of a multi-site grid running concrete DAGs.

Each site runs at most ``slots`` nodes at once; ready nodes wait in a FIFO.
Events are ordered by ``(time, sequence)`` so equal-time events resolve in
insertion order. Randomness comes from a single seeded PCG64 generator.

Failure sources:

* ``per_job_failure_prob`` is drawn once per Execute node, at dispatch.
* an outage window at a site fails any StageOut/Register node there whose
  run overlaps the window (reason ``site_outage``); other nodes are unaffected.
* a scripted preemption kills the oldest running Execute at the site
  (reason ``preempted``).

Any node failure fails its whole DAG and cancels the rest of it.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .concrete import ConcreteDag, Execute, Register, StageIn, StageOut, emit_dag_file, node_kind, parse_dag_file
from .errors import ConfigError, UnknownSite
from .production import CompletionRecord, format_job_log
from .rls import ReplicaCatalog

RNG_ALGORITHM = "PCG64"
NODE_KINDS = ("EXEC", "STAGEIN", "STAGEOUT", "REGISTER")
DEFAULT_TIMES = {"EXEC": 600.0, "STAGEIN": 30.0, "STAGEOUT": 30.0, "REGISTER": 1.0}
LOG_BYTES = 4096


@dataclass
class SiteSpec:
    site: str
    slots: int
    exec_time_s: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TIMES))
    per_job_failure_prob: float = 0.0
    outages: list[tuple[float, float]] = field(default_factory=list)
    preemptions: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.slots < 1:
            raise ConfigError(f"site {self.site}: slots must be positive")
        if not 0.0 <= self.per_job_failure_prob <= 1.0:
            raise ConfigError(f"site {self.site}: failure probability outside [0, 1]")
        times = dict(DEFAULT_TIMES)
        times.update(self.exec_time_s)
        unknown = set(times) - set(NODE_KINDS)
        if unknown:
            raise ConfigError(f"site {self.site}: unknown node kinds {sorted(unknown)}")
        if any(v < 0 for v in times.values()):
            raise ConfigError(f"site {self.site}: negative service time")
        self.exec_time_s = times
        self.outages = [tuple(map(float, o)) for o in self.outages]
        prev_end = float("-inf")
        for start, end in self.outages:
            if not start < end or start < prev_end:
                raise ConfigError(f"site {self.site}: outages must be disjoint, ordered, non-empty intervals")
            prev_end = end
        self.preemptions = sorted(float(t) for t in self.preemptions)


@dataclass
class GridConfig:
    sites: list[SiteSpec]
    seed: int = 0
    rng: str = RNG_ALGORITHM
    service: str = "deterministic"  # or "exponential"
    bytes_per_event: int = 1_000_000

    def __post_init__(self):
        if self.rng != RNG_ALGORITHM:
            raise ConfigError(f"unsupported rng {self.rng!r}; only {RNG_ALGORITHM} is available")
        if self.service not in ("deterministic", "exponential"):
            raise ConfigError(f"unknown service mode {self.service!r}")
        names = [s.site for s in self.sites]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate site ids")

    @classmethod
    def from_json(cls, data: dict) -> GridConfig:
        try:
            sites = [SiteSpec(**s) for s in data["sites"]]
            extra = {k: data[k] for k in ("seed", "rng", "service", "bytes_per_event") if k in data}
            return cls(sites=sites, **extra)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad grid config: {exc}") from exc

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "rng": self.rng,
            "service": self.service,
            "bytes_per_event": self.bytes_per_event,
            "sites": [
                {
                    "site": s.site,
                    "slots": s.slots,
                    "exec_time_s": s.exec_time_s,
                    "per_job_failure_prob": s.per_job_failure_prob,
                    "outages": [list(o) for o in s.outages],
                    "preemptions": s.preemptions,
                }
                for s in self.sites
            ],
        }


@dataclass(frozen=True)
class DagHandle:
    id: int
    target: str
    site: str


@dataclass(frozen=True)
class CompletionEvent:
    dv_name: str
    handle: int
    outcome: str  # "success" or "failure"
    reason: str | None
    site: str
    time: float
    started_at: float | None
    log: str


@dataclass
class _NodeRun:
    dag: int
    node: str
    kind: str
    start: float
    outcome: str


@dataclass
class _DagRun:
    handle: DagHandle
    cdag: ConcreteDag
    waiting: dict[str, int]
    children: dict[str, list[str]]
    remaining: int
    submitted_at: float
    started_at: float | None = None
    tokens: set[int] = field(default_factory=set)
    done: bool = False


@dataclass
class _SiteRun:
    spec: SiteSpec
    free: int
    ready: deque = field(default_factory=deque)
    active_dags: int = 0


_FINISH, _PREEMPT = 0, 1


class GridSimulator:
    def __init__(self, config: GridConfig, rls: ReplicaCatalog | None = None):
        self.config = config
        self.rls = rls if rls is not None else ReplicaCatalog()
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.clock = 0.0
        self.sites = {s.site: _SiteRun(s, s.slots) for s in config.sites}
        self.filesystem: dict[str, set[str]] = {s.site: set() for s in config.sites}
        self.trace: list[str] = []
        self._events: list = []
        self._seq = itertools.count()
        self._tokens = itertools.count()
        self._ids = itertools.count()
        self._running: dict[int, _NodeRun] = {}
        self._dags: dict[int, _DagRun] = {}
        self._completions: list[CompletionEvent] = []
        self.max_busy = {s.site: 0 for s in config.sites}
        for s in config.sites:
            for t in s.preemptions:
                self._push(t, _PREEMPT, s.site)

    # -- public surface ----------------------------------------------------

    def submit(self, cdag: ConcreteDag | str, target: str | None = None) -> DagHandle:
        """Accept a concrete DAG (object or submit-file text) at the current clock."""
        if isinstance(cdag, str):
            cdag = parse_dag_file(cdag)
        if cdag.site not in self.sites:
            raise UnknownSite(cdag.site)
        hid = next(self._ids)
        handle = DagHandle(hid, target or cdag.target or f"dag{hid}", cdag.site)
        waiting = {nid: 0 for nid in cdag.nodes}
        children: dict[str, list[str]] = {nid: [] for nid in cdag.nodes}
        for p, c in sorted(cdag.edges):
            waiting[c] += 1
            children[p].append(c)
        run = _DagRun(handle, cdag, waiting, children, len(cdag.nodes), self.clock)
        self._dags[hid] = run
        site = self.sites[cdag.site]
        site.active_dags += 1
        if not cdag.nodes:
            self._finish_dag(run, None)
            return handle
        for nid in sorted(cdag.nodes):
            if waiting[nid] == 0:
                site.ready.append((hid, nid))
        self._dispatch(site)
        return handle

    def step(self, until_s: float) -> list[CompletionEvent]:
        """Process every event with time <= ``until_s`` and return finished DAGs."""
        if until_s < self.clock:
            raise ValueError("cannot step backwards")
        while self._events and self._events[0][0] <= until_s:
            time, _, action, payload = heapq.heappop(self._events)
            self.clock = time
            if action == _FINISH:
                self._on_finish(payload)
            else:
                self._on_preempt(payload)
        self.clock = until_s
        out, self._completions = self._completions, []
        return out

    def run_until_idle(self) -> list[CompletionEvent]:
        done = []
        while self._events:
            done += self.step(self._events[0][0])
        done += self.step(self.clock)
        return done

    def running_count(self, site: str) -> int:
        try:
            return self.sites[site].active_dags
        except KeyError:
            raise UnknownSite(site) from None

    def idle(self) -> bool:
        return not self._running and not any(s.ready for s in self.sites.values()) and not self._completions

    def next_event_time(self) -> float | None:
        return self._events[0][0] if self._events else None

    # -- internals ---------------------------------------------------------

    def _push(self, time: float, action: int, payload) -> None:
        heapq.heappush(self._events, (time, next(self._seq), action, payload))

    def _log(self, time: float, run: _DagRun, node: str, kind: str, outcome: str) -> None:
        self.trace.append(f"{time:.3f} {run.handle.target} {node} {kind} {outcome}")

    def _duration(self, spec: SiteSpec, kind: str) -> float:
        mean = spec.exec_time_s[kind]
        if self.config.service == "exponential" and mean > 0:
            return float(self.rng.exponential(mean))
        return mean

    def _dispatch(self, site: _SiteRun) -> None:
        spec = site.spec
        while site.free > 0 and site.ready:
            hid, nid = site.ready.popleft()
            run = self._dags[hid]
            if run.done:
                continue
            node = run.cdag.nodes[nid]
            kind = node_kind(node)
            t = self.clock
            dur = self._duration(spec, kind)
            finish, outcome = t + dur, "success"
            if kind == "EXEC":
                if self.rng.random() < spec.per_job_failure_prob:
                    outcome = "random_failure"
            elif kind in ("STAGEOUT", "REGISTER"):
                for o_start, o_end in spec.outages:
                    hit = (o_start < finish and t < o_end) if dur > 0 else (o_start <= t < o_end)
                    if hit:
                        finish, outcome = max(t, o_start), "site_outage"
                        break
            token = next(self._tokens)
            self._running[token] = _NodeRun(hid, nid, kind, t, outcome)
            run.tokens.add(token)
            if run.started_at is None:
                run.started_at = t
            site.free -= 1
            busy = spec.slots - site.free
            if busy > self.max_busy[spec.site]:
                self.max_busy[spec.site] = busy
            self._log(t, run, nid, kind, "start")
            self._push(finish, _FINISH, token)

    def _on_finish(self, token: int) -> None:
        nr = self._running.pop(token, None)
        if nr is None:
            return  # cancelled or preempted
        run = self._dags[nr.dag]
        run.tokens.discard(token)
        site = self.sites[run.cdag.site]
        site.free += 1
        self._log(self.clock, run, nr.node, nr.kind, nr.outcome)
        if nr.outcome != "success":
            self._finish_dag(run, nr.outcome)
        else:
            self._apply(run, run.cdag.nodes[nr.node])
            run.remaining -= 1
            for child in run.children[nr.node]:
                run.waiting[child] -= 1
                if run.waiting[child] == 0:
                    site.ready.append((nr.dag, child))
            if run.remaining == 0:
                self._finish_dag(run, None)
        self._dispatch(site)

    def _on_preempt(self, site_id: str) -> None:
        victims = sorted((nr.start, tok) for tok, nr in self._running.items() if nr.kind == "EXEC" and self._dags[nr.dag].cdag.site == site_id)
        if not victims:
            self.trace.append(f"{self.clock:.3f} - - PREEMPT noop")
            return
        token = victims[0][1]
        nr = self._running.pop(token)
        run = self._dags[nr.dag]
        run.tokens.discard(token)
        site = self.sites[site_id]
        site.free += 1
        self._log(self.clock, run, nr.node, nr.kind, "preempted")
        self._finish_dag(run, "preempted")
        self._dispatch(site)

    def _apply(self, run: _DagRun, node) -> None:
        site = run.cdag.site
        if isinstance(node, Execute):
            self.filesystem[site].update(f"/scratch/{lfn}" for lfn in node.outputs)
        elif isinstance(node, StageIn):
            self.filesystem[node.dst_site].add(f"/scratch/{node.lfn}")
        elif isinstance(node, StageOut):
            self.filesystem.setdefault(node.dst_site, set()).add(node.dst_pfn)
        elif isinstance(node, Register):
            self.rls.register(node.lfn, node.site, node.pfn)

    def _finish_dag(self, run: _DagRun, failure: str | None) -> None:
        run.done = True
        site = self.sites[run.cdag.site]
        for token in sorted(run.tokens):
            nr = self._running.pop(token)
            site.free += 1
            self._log(self.clock, run, nr.node, nr.kind, "cancelled")
        run.tokens.clear()
        site.active_dags -= 1
        record = self._record(run, failure)
        self._completions.append(
            CompletionEvent(
                dv_name=run.handle.target,
                handle=run.handle.id,
                outcome=record.status,
                reason=failure,
                site=run.cdag.site,
                time=self.clock,
                started_at=run.started_at,
                log=format_job_log(record),
            )
        )

    def _record(self, run: _DagRun, failure: str | None) -> CompletionRecord:
        cdag = run.cdag
        start = run.started_at if run.started_at is not None else run.submitted_at
        record = CompletionRecord(
            dv_name=run.handle.target,
            status="success" if failure is None else "failure",
            reason=failure,
            wall_seconds=self.clock - start,
            start=start,
            end=self.clock,
        )
        if failure is not None:
            return record
        target = next((ex for ex in cdag.executes() if ex.dv == cdag.target), None)
        events = int(target.param("numevents", "0")) if target is not None else 0
        record.produced_events = events
        staged = {n.lfn: (n.dst_site, n.dst_pfn) for n in cdag.nodes.values() if isinstance(n, StageOut)}
        for ex in cdag.executes():
            ex_events = int(ex.param("numevents", "0") or 0)
            for lfn in ex.outputs:
                record.output_sizes[lfn] = LOG_BYTES if lfn.endswith(".log") else max(ex_events, 1) * self.config.bytes_per_event
                record.output_locations[lfn] = staged.get(lfn, (cdag.site, f"/scratch/{lfn}"))
        return record


def export_trace(lines: Iterable[str]) -> str:
    return "".join(line + "\n" for line in lines)


__all__ = [
    "CompletionEvent",
    "DagHandle",
    "GridConfig",
    "GridSimulator",
    "SiteSpec",
    "emit_dag_file",
    "export_trace",
    "parse_dag_file",
]
