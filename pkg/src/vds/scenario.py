"""End-to-end production runs: generate derivations, schedule them, simulate the grid.

A scenario is a plain dict (loadable from JSON)::

    {
      "name": "...",
      "grid": {<GridConfig json>, "seed": 1},
      "scheduler": {"tick_interval_s": 60, "retries": 0,
                    "watermarks": {"site": [low, high]}},
      "storage": {"site": "storage", "prefix": "/store"},
      "production": {<ProductionRequest fields>}
    }

Omitting ``production`` gives a run with no DAGs.

Sites without explicit watermarks get ``low = slots`` and ``high = 2 * slots``.
"""

from __future__ import annotations

import copy
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .catalog import VirtualDataCatalog
from .errors import ConfigError
from .gridsim import GridConfig, GridSimulator
from .production import (
    JobDescription,
    MetadataDb,
    ProductionRequest,
    generate_derivations,
    production_targets,
    production_transformations,
    split_jobs,
)
from .rls import ReplicaCatalog
from .workrunner import ACTIVE, TERMINAL, SiteState, Status, WorkRunner

HOUR = 3600.0
DAY = 24 * HOUR


@dataclass
class ScenarioResult:
    name: str
    stats: dict
    runner: WorkRunner
    sim: GridSimulator
    metadb: MetadataDb
    tick_trace: list[dict]

    @property
    def trace(self) -> list[str]:
        return self.sim.trace

    def report(self) -> dict:
        out = dict(self.stats)
        out["name"] = self.name
        out["events_produced"] = self.metadb.events_produced()
        out["completion_records"] = len(self.metadb.completions)
        out["sim_seconds"] = self.sim.clock
        return out


def load_scenario(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_catalog(request: ProductionRequest) -> tuple[VirtualDataCatalog, list[str]]:
    jd = JobDescription(request)
    splits = split_jobs(jd)
    catalog = VirtualDataCatalog(production_transformations())
    catalog.insert_all(generate_derivations(jd, splits))
    return catalog, production_targets(jd, splits)


def run_scenario(
    scenario: dict,
    seed: int | None = None,
    *,
    catalog: VirtualDataCatalog | None = None,
    targets: list[str] | None = None,
    max_sim_seconds: float | None = None,
    record_ticks: bool = False,
) -> ScenarioResult:
    """Run a scenario to quiescence (or until ``max_sim_seconds``).

    With ``record_ticks`` the per-tick job counts (queued, active, terminal,
    each counted from the job records) are kept in ``tick_trace``.
    """
    try:
        grid_json = dict(scenario["grid"])
        if seed is not None:
            grid_json["seed"] = seed
        grid = GridConfig.from_json(grid_json)
        sched = scenario.get("scheduler", {})
        storage_cfg = scenario.get("storage", {"site": "storage", "prefix": "/store"})
        storage = (storage_cfg["site"], storage_cfg["prefix"])
        production = scenario.get("production")
        request = ProductionRequest(**production) if production else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc

    if catalog is None:
        if request is None:
            catalog, targets = VirtualDataCatalog(), []
        else:
            catalog, targets = build_catalog(request)
    elif targets is None:
        raise ValueError("targets are required with a prebuilt catalog")

    watermarks = {k: tuple(v) for k, v in sched.get("watermarks", {}).items()}
    site_states = []
    for spec in grid.sites:
        low, high = watermarks.get(spec.site, (spec.slots, 2 * spec.slots))
        site_states.append(SiteState(spec.site, low, high))
    tick = float(sched.get("tick_interval_s", 60.0))
    if tick <= 0:
        raise ConfigError("tick_interval_s must be positive")

    rls = ReplicaCatalog()
    metadb = MetadataDb()
    if request is not None:
        for lfn in (request.kincard, request.simcard, request.geomfile):
            rls.register(lfn, storage[0], f"{storage[1].rstrip('/')}/{lfn}")
        metadb.add_request(request)
    runner = WorkRunner(catalog, site_states, rls=rls, storage=storage, metadb=metadb, retries=int(sched.get("retries", 0)))
    sim = GridSimulator(grid, rls)
    runner.enqueue(targets)

    tick_trace = []
    now = 0.0
    while True:
        actions = runner.tick({s: sim.running_count(s) for s in runner.sites}, now)
        for action in actions:
            sim.submit(action.cdag, target=action.target)
        if record_ticks:
            tick_trace.append({"time": now, "submitted": len(actions), **_counts(runner)})
        if runner.idle():
            break
        if max_sim_seconds is not None and now >= max_sim_seconds:
            break
        if not actions and not runner.in_flight and runner.queue:
            raise ConfigError("scheduler stalled: no site ever falls below its low watermark")
        now += tick
        for event in sim.step(now):
            runner.handle_completion(event)
    return ScenarioResult(scenario.get("name", "scenario"), runner.stats(), runner, sim, metadb, tick_trace)


def _counts(runner: WorkRunner) -> dict:
    statuses = Counter(r.status for r in runner.records.values())
    return {
        "enqueued": runner.total_enqueued,
        "queued": statuses[Status.QUEUED],
        "active": sum(statuses[s] for s in ACTIVE),
        "terminal": sum(statuses[s] for s in TERMINAL),
    }


# -- the two reference scenarios -------------------------------------------

_CARDS = {
    "kincard": "eg02_BigJets_Id_252.txt",
    "simcard": "STANDARD_125_Id_42.txt",
    "geomfile": "cms125.rz",
}


def scenario_a() -> dict:
    """Single cluster, 50 CPUs, 678 DAGs of 250 events, 8 scripted preemptions."""
    preempt_days = [0.9, 1.6, 2.3, 3.0, 3.7, 4.4, 5.1, 5.8]
    return {
        "name": "single-cluster",
        "grid": {
            "seed": 2003,
            "rng": "PCG64",
            "service": "deterministic",
            "sites": [
                {
                    "site": "ufl",
                    "slots": 50,
                    "exec_time_s": {"EXEC": 6 * HOUR, "STAGEIN": 60.0, "STAGEOUT": 300.0, "REGISTER": 5.0},
                    "per_job_failure_prob": 0.0,
                    "outages": [],
                    "preemptions": [round(d * DAY) for d in preempt_days],
                }
            ],
        },
        "scheduler": {"tick_interval_s": 300.0, "retries": 0},
        "storage": {"site": "storage", "prefix": "/store/cms"},
        "production": {"project": "eg02_BigJets", "total_events": 678 * 250, "events_per_job": 250, **_CARDS},
    }


def scenario_b() -> dict:
    """Six sites, 10,000 single-event DAGs, 1-in-50 Execute failures, one long outage."""
    times = {"EXEC": 900.0, "STAGEIN": 60.0, "STAGEOUT": 60.0, "REGISTER": 5.0}
    sites = [
        ("anl-datagrid", 20, []),
        ("uchicago-cs", 30, [(10 * HOUR, 12.5 * HOUR)]),
        ("ufl-hcs", 40, []),
        ("ufl-physics-a", 25, []),
        ("ufl-physics-b", 25, []),
        ("uwm-physics", 30, []),
    ]
    return {
        "name": "six-site",
        "grid": {
            "seed": 1,
            "rng": "PCG64",
            "service": "deterministic",
            "sites": [
                {
                    "site": name,
                    "slots": slots,
                    "exec_time_s": dict(times),
                    "per_job_failure_prob": 1 / 50,
                    "outages": [list(o) for o in outages],
                    "preemptions": [],
                }
                for name, slots, outages in sites
            ],
        },
        "scheduler": {"tick_interval_s": 60.0, "retries": 0},
        "storage": {"site": "storage", "prefix": "/store/cms"},
        "production": {"project": "eg02_BigJets", "total_events": 10_000, "events_per_job": 1, **_CARDS},
    }


def with_seed(scenario: dict, seed: int) -> dict:
    out = copy.deepcopy(scenario)
    out["grid"]["seed"] = seed
    return out
