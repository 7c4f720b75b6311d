import pytest
from hypothesis import given, settings

from vds.abstract import dag_to_text, plan_abstract, topo_order
from vds.catalog import VirtualDataCatalog
from vds.errors import ClassMismatch, CycleDetected, UnknownTarget, UnknownTransformation
from vds.fixtures import CARD_FILES, FORTRAN_DV, ORCA_DV

from .strategies import all_topological_orders, brute_force_closure, make_dv, random_catalogs


def test_two_stage_plan(two_stage):
    dag = plan_abstract(two_stage, ORCA_DV)
    assert dag.nodes == {FORTRAN_DV, ORCA_DV}
    assert dag.edges == {(FORTRAN_DV, ORCA_DV, "eg02_BigJets_1.fz")}
    assert dag.external_inputs == {(lfn, FORTRAN_DV) for lfn in CARD_FILES}
    assert dag.target == ORCA_DV


def test_request_by_file(two_stage):
    assert plan_abstract(two_stage, "eg02_BigJets_1.ntpl") == plan_abstract(two_stage, ORCA_DV)


def test_leaf_request(two_stage):
    dag = plan_abstract(two_stage, FORTRAN_DV)
    assert dag.nodes == {FORTRAN_DV} and not dag.edges


def test_unknown_target(two_stage):
    with pytest.raises(UnknownTarget):
        plan_abstract(two_stage, "cms125.rz")
    with pytest.raises(UnknownTarget):
        plan_abstract(two_stage, "NOPE")


def test_two_cycle():
    cat = VirtualDataCatalog(make_dv("dvA", ["f_B"], ["f_A"]) + make_dv("dvB", ["f_A"], ["f_B"]))
    with pytest.raises(CycleDetected) as err:
        plan_abstract(cat, "dvA")
    assert err.value.path == ["dvA", "dvB", "dvA"]


def test_dangling_transformation(listing_objects):
    cat = VirtualDataCatalog([listing_objects[1]])
    with pytest.raises(UnknownTransformation):
        plan_abstract(cat, FORTRAN_DV)


def test_class_checked_at_plan_time():
    tr, dv = make_dv("d", ["x"], ["y"])
    from vds.vdl import Derivation, Literal

    bad = Derivation("d", tr.name, dict(dv.actuals, i0=Literal("x")))
    with pytest.raises(ClassMismatch):
        plan_abstract(VirtualDataCatalog([tr, bad]), "d")


def diamond():
    return VirtualDataCatalog(
        make_dv("top", ["raw"], ["t.out"])
        + make_dv("mid_b", ["t.out"], ["b.out"])
        + make_dv("mid_a", ["t.out"], ["a.out"])
        + make_dv("join", ["a.out", "b.out"], ["j.out"])
    )


def test_diamond_shares_producer():
    dag = plan_abstract(diamond(), "join")
    assert dag.nodes == {"top", "mid_a", "mid_b", "join"}
    assert len(dag.edges) == 4


def test_topo_two_stage(two_stage):
    assert topo_order(plan_abstract(two_stage, ORCA_DV)) == [FORTRAN_DV, ORCA_DV]


def test_topo_single():
    cat = VirtualDataCatalog(make_dv("only", [], ["o"]))
    assert topo_order(plan_abstract(cat, "only")) == ["only"]


def test_topo_diamond_against_enumeration():
    dag = plan_abstract(diamond(), "join")
    order = topo_order(dag)
    valid = list(all_topological_orders(dag.nodes, {(p, c) for p, c, _ in dag.edges}))
    assert order in valid
    assert order == ["top", "mid_a", "mid_b", "join"]
    assert order == min(valid)


def test_text_export(two_stage):
    text = dag_to_text(plan_abstract(two_stage, ORCA_DV))
    lines = text.splitlines()
    assert [ln.split()[0] for ln in lines] == ["NODE", "NODE", "EDGE", "EXT", "EXT", "EXT", "TARGET"]
    assert lines[2] == f"EDGE {FORTRAN_DV} {ORCA_DV} eg02_BigJets_1.fz"
    assert lines[-1] == f"TARGET {ORCA_DV}"
    ext = [ln for ln in lines if ln.startswith("EXT")]
    assert ext == sorted(ext)


@settings(max_examples=100, deadline=None)
@given(random_catalogs())
def test_dag_invariants(built):
    cat, n = built
    target = f"d{n - 1:02d}"
    dag = plan_abstract(cat, target)
    order = topo_order(dag)
    pos = {v: i for i, v in enumerate(order)}
    for p, c, lfn in dag.edges:
        assert pos[p] < pos[c]
        assert lfn in dag.node_outputs[p] and lfn in dag.node_inputs[c]
    for node in dag.nodes:
        for lfn in dag.node_inputs[node]:
            covered = [e for e in dag.edges if e[1] == node and e[2] == lfn]
            covered += [x for x in dag.external_inputs if x == (lfn, node)]
            assert len(covered) == 1
            if cat.find_producer(lfn) is not None:
                assert (cat.find_producer(lfn).name, node, lfn) in dag.edges
    assert plan_abstract(cat, target) == dag
