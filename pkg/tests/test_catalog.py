import pytest
from hypothesis import given, settings

from vds.catalog import FORMAT_HEADER, VirtualDataCatalog
from vds.errors import ConflictingProducer, DuplicateName, FormatError, UnknownTransformation
from vds.vdl import ArgClass, Derivation, FileRef, Literal, parse_vdl

from .strategies import random_catalogs


def test_producer_index_after_listing(listing_objects):
    cat = VirtualDataCatalog()
    for obj in listing_objects:
        cat.insert(obj)
    assert cat.producer_index == {
        "eg02_BigJets_1.fz": "EG02_BIGJETS_1_SIMULATION",
        "fortran.eg02_BigJets_1.log": "EG02_BIGJETS_1_SIMULATION",
    }
    assert cat.find_producer("eg02_BigJets_1.fz").name == "EG02_BIGJETS_1_SIMULATION"
    assert cat.find_producer("cms125.rz") is None


def test_find_in_empty_catalog():
    assert VirtualDataCatalog().find_producer("anything") is None


def test_identical_reinsert_is_noop(listing_objects):
    cat = VirtualDataCatalog(listing_objects)
    before = cat.dumps()
    for obj in parse_vdl(cat.dumps()):
        cat.insert(obj)
    assert cat.dumps() == before


def test_conflicting_producer(listing_objects):
    cat = VirtualDataCatalog(listing_objects)
    rival = Derivation("RIVAL", "FORTRAN_SECTION", {"outfile": FileRef(ArgClass.OUTPUT, "eg02_BigJets_1.fz")})
    with pytest.raises(ConflictingProducer) as err:
        cat.insert(rival)
    assert (err.value.existing_dv, err.value.new_dv) == ("EG02_BIGJETS_1_SIMULATION", "RIVAL")
    assert "RIVAL" not in cat.derivations


def test_duplicate_name_with_different_content(listing_objects):
    cat = VirtualDataCatalog(listing_objects)
    dv = listing_objects[1]
    changed = Derivation(dv.name, dv.transformation_name, dict(dv.actuals, numevents=Literal("500")))
    with pytest.raises(DuplicateName):
        cat.insert(changed)


def test_dv_before_tr_is_deferred(listing_objects):
    tr, dv = listing_objects
    cat = VirtualDataCatalog([dv])
    assert cat.find_producer("eg02_BigJets_1.fz") is dv
    with pytest.raises(UnknownTransformation):
        cat.bind(dv.name)
    cat.insert(tr)
    assert cat.bind(dv.name).outputs == {"eg02_BigJets_1.fz", "fortran.eg02_BigJets_1.log"}


def test_save_load_round_trip(tmp_path, listing_objects):
    cat = VirtualDataCatalog(listing_objects)
    path = tmp_path / "vdc.txt"
    cat.save(path)
    assert path.read_text().startswith(FORMAT_HEADER + "\n")
    assert VirtualDataCatalog.load(path) == cat


def test_save_empty(tmp_path):
    path = tmp_path / "vdc.txt"
    VirtualDataCatalog().save(path)
    assert path.read_text() == FORMAT_HEADER + "\n"
    assert len(VirtualDataCatalog.load(path)) == 0


def test_load_dangling_reference(tmp_path, listing_objects):
    path = tmp_path / "vdc.txt"
    VirtualDataCatalog([listing_objects[1]]).save(path)
    cat = VirtualDataCatalog.load(path)
    with pytest.raises(UnknownTransformation):
        cat.bind("EG02_BIGJETS_1_SIMULATION")


@pytest.mark.parametrize(
    "text, line",
    [
        ("TR T( none a ) { }\n", 1),
        (FORMAT_HEADER + "\nTR T( none a ) {\n oops\n}\n", 3),
    ],
)
def test_load_corrupt(tmp_path, text, line):
    path = tmp_path / "vdc.txt"
    path.write_text(text)
    with pytest.raises(FormatError) as err:
        VirtualDataCatalog.load(path)
    assert err.value.line == line


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        VirtualDataCatalog.load(tmp_path / "absent.txt")


@settings(max_examples=100, deadline=None)
@given(random_catalogs())
def test_producer_outputs_agree_with_binding(built):
    cat, _ = built
    for lfn, name in cat.producer_index.items():
        assert lfn in cat.bind(name).outputs


@settings(max_examples=100, deadline=None)
@given(random_catalogs())
def test_insert_order_independence_and_persistence(built):
    cat, _ = built
    reordered = VirtualDataCatalog(reversed(cat.objects()))
    assert reordered == cat
    assert VirtualDataCatalog.loads(cat.dumps()) == cat
