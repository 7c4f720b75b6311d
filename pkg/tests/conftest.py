import pytest

from vds.catalog import VirtualDataCatalog
from vds.fixtures import CARD_FILES, FORTRAN_LISTING, TWO_STAGE_VDL
from vds.rls import ReplicaCatalog
from vds.vdl import parse_vdl

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def listing_objects():
    return parse_vdl(FORTRAN_LISTING)


@pytest.fixture
def two_stage():
    return VirtualDataCatalog(parse_vdl(TWO_STAGE_VDL))


@pytest.fixture
def card_rls():
    rls = ReplicaCatalog()
    for lfn in CARD_FILES:
        rls.register(lfn, "storage", f"/store/{lfn}")
    return rls


@pytest.fixture
def acceptance_report():
    def report(criterion: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else ""))

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
