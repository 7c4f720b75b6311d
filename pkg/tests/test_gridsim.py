import pytest

from vds.abstract import plan_abstract
from vds.concrete import ConcreteDag, Execute, emit_dag_file, plan_concrete
from vds.errors import ConfigError, UnknownSite
from vds.fixtures import ORCA_DV
from vds.gridsim import GridConfig, GridSimulator, SiteSpec, export_trace
from vds.production import parse_job_log
from vds.rls import ReplicaCatalog

TIMES = {"EXEC": 100.0, "STAGEIN": 10.0, "STAGEOUT": 20.0, "REGISTER": 1.0}


def sim(slots=1, p=0.0, seed=0, **kw):
    return GridSimulator(GridConfig([SiteSpec("s", slots, dict(TIMES), p, **kw)], seed=seed))


def one_node(name, site="s", events=None):
    cdag = ConcreteDag(site, target=name)
    params = (("numevents", str(events)),) if events is not None else ()
    cdag.add(Execute(name, (), params))
    return cdag


def test_single_node_timing():
    g = sim()
    g.submit(one_node("a"))
    assert g.step(99.0) == []
    (done,) = g.step(100.0)
    assert done.outcome == "success" and done.time == 100.0 and done.dv_name == "a"


def test_two_dags_queue_on_one_slot():
    g = sim()
    g.submit(one_node("a"))
    g.submit(one_node("b"))
    done = g.run_until_idle()
    assert [(e.dv_name, e.time) for e in done] == [("a", 100.0), ("b", 200.0)]
    assert g.trace[2] == "100.000 b exec:b EXEC start"


def test_unknown_site():
    with pytest.raises(UnknownSite):
        sim().submit(one_node("a", site="elsewhere"))
    with pytest.raises(UnknownSite):
        sim().running_count("elsewhere")


def test_running_count_trace():
    g = sim(slots=1)
    assert g.running_count("s") == 0
    for name in "abc":
        g.submit(one_node(name))
    assert g.running_count("s") == 3
    g.step(100.0)
    assert g.running_count("s") == 2


def test_zero_and_certain_failure():
    g = sim(slots=4, p=0.0)
    for k in range(50):
        g.submit(one_node(f"d{k}"))
    assert all(e.outcome == "success" for e in g.run_until_idle())
    g = sim(slots=4, p=1.0)
    for k in range(50):
        g.submit(one_node(f"d{k}"))
    done = g.run_until_idle()
    assert len(done) == 50 and {e.reason for e in done} == {"random_failure"}


def test_binomial_failure_count():
    g = sim(slots=100, p=0.02, seed=7)
    for k in range(10_000):
        g.submit(one_node(f"d{k}"))
    failed = sum(e.outcome == "failure" for e in g.run_until_idle())
    # mean 200, sigma = sqrt(10000 * 0.02 * 0.98) = 14
    assert abs(failed - 200) <= 42


def test_full_plan_runs_and_registers(two_stage, card_rls):
    cdag = plan_concrete(plan_abstract(two_stage, ORCA_DV), "s", card_rls, ("storage", "/store"))
    rls = card_rls
    g = GridSimulator(GridConfig([SiteSpec("s", 2, dict(TIMES))]), rls)
    g.submit(emit_dag_file(cdag))
    (done,) = g.run_until_idle()
    assert done.outcome == "success"
    assert rls.lookup("eg02_BigJets_1.ntpl") == {("storage", "/store/eg02_BigJets_1.ntpl")}
    assert "/store/eg02_BigJets_1.fz" in g.filesystem["storage"]
    record = parse_job_log(done.log)
    assert set(record.output_sizes) == {"eg02_BigJets_1.fz", "fortran.eg02_BigJets_1.log", "eg02_BigJets_1.ntpl"}
    assert g.max_busy["s"] <= 2
    # causality: each node starts after its parents finished
    finished = {}
    for line in g.trace:
        t, _, node, _, outcome = line.split()
        if outcome == "success":
            finished[node] = float(t)
        elif outcome == "start":
            for p in cdag.parents(node):
                assert finished[p] <= float(t)


def test_outage_fails_writeback_only():
    cdag = ConcreteDag("s", target="a")
    cdag.add(Execute("a", ("a.out",)))
    from vds.concrete import Register, StageOut

    cdag.add(StageOut("a.out", "s", "storage", "/store/a.out"))
    cdag.add(Register("a.out", "storage", "/store/a.out"))
    cdag.edges |= {("exec:a", "out:a.out"), ("out:a.out", "reg:a.out")}
    rls = ReplicaCatalog()
    g = GridSimulator(GridConfig([SiteSpec("s", 1, dict(TIMES), outages=[(105.0, 500.0)])]), rls)
    g.submit(cdag)
    (done,) = g.run_until_idle()
    assert done.outcome == "failure" and done.reason == "site_outage"
    assert done.time == 105.0
    assert rls.lookup("a.out") == frozenset()


def test_preemption_kills_oldest_execute():
    g = sim(slots=2, preemptions=[50.0])
    g.submit(one_node("old"))
    g.step(10.0)
    g.submit(one_node("young"))
    done = g.run_until_idle()
    assert [(e.dv_name, e.outcome, e.reason) for e in done] == [("old", "failure", "preempted"), ("young", "success", None)]


def test_determinism():
    def run(seed):
        g = GridSimulator(GridConfig([SiteSpec("s", 3, dict(TIMES), 0.3)], seed=seed, service="exponential"))
        for k in range(40):
            g.submit(one_node(f"d{k}"))
        done = g.run_until_idle()
        return export_trace(g.trace), [e.log for e in done]

    assert run(5) == run(5)
    assert run(5) != run(6)


def test_empty_dag_completes_immediately():
    g = sim()
    g.submit(ConcreteDag("s", target="nothing"))
    (done,) = g.step(0.0)
    assert done.outcome == "success" and g.running_count("s") == 0


def test_cannot_step_backwards():
    g = sim()
    g.step(10.0)
    with pytest.raises(ValueError):
        g.step(5.0)


@pytest.mark.parametrize(
    "kw",
    [
        dict(slots=0),
        dict(slots=1, per_job_failure_prob=1.5),
        dict(slots=1, outages=[(5.0, 1.0)]),
        dict(slots=1, outages=[(0.0, 10.0), (5.0, 20.0)]),
        dict(slots=1, exec_time_s={"BOGUS": 1.0}),
        dict(slots=1, exec_time_s={"EXEC": -1.0}),
    ],
)
def test_site_validation(kw):
    with pytest.raises(ConfigError):
        SiteSpec("s", **kw)


def test_grid_config_validation_and_json():
    with pytest.raises(ConfigError):
        GridConfig([SiteSpec("s", 1)], rng="MT19937")
    with pytest.raises(ConfigError):
        GridConfig([SiteSpec("s", 1), SiteSpec("s", 2)])
    with pytest.raises(ConfigError):
        GridConfig.from_json({"seed": 1})
    cfg = GridConfig([SiteSpec("s", 3, dict(TIMES), 0.1, [(1.0, 2.0)], [5.0])], seed=9)
    assert GridConfig.from_json(cfg.to_json()) == cfg
