"""Reference VDL used by tests and demos.

``FORTRAN_LISTING`` is the CMKIN/CMSIM transformation with its run-1
derivation. ``TWO_STAGE_VDL`` adds an n-tuple stage that consumes the simulation output.
"""

from __future__ import annotations

from .catalog import VirtualDataCatalog
from .vdl import parse_vdl

FORTRAN_LISTING = """\
TR FORTRAN_SECTION( none runnum, none project,
                    none numevents, output outfile,
                    input kincard, input simcard,
                    input geomfile, output logfile )
{
  argument = ${none:runnum};
  argument = ${none:project};
  argument = ${none:numevents};
  argument = ${input:kincard};
  argument = ${input:simcard};
  argument = ${input:geomfile};
  argument = ${output:logfile};
  argument = ${output:outfile};
}

DV EG02_BIGJETS_1_SIMULATION->FORTRAN_SECTION(
  kincard=@{input:"eg02_BigJets_Id_252.txt"},
  simcard=@{input:"STANDARD_125_Id_42.txt"},
  geomfile=@{input:"cms125.rz"},
  logfile=@{output:"fortran.eg02_BigJets_1.log"},
  numevents="250",
  outfile=@{output:"eg02_BigJets_1.fz"},
  project="eg02_BigJets",
  runnum="1" );
"""

ORCA_VDL = """\
TR ORCA_SECTION( none runnum, none project,
                 input fzfile, output ntplfile )
{
  argument = ${none:runnum};
  argument = ${none:project};
  argument = ${input:fzfile};
  argument = ${output:ntplfile};
}

DV EG02_BIGJETS_1_ANALYSIS->ORCA_SECTION(
  fzfile=@{input:"eg02_BigJets_1.fz"},
  ntplfile=@{output:"eg02_BigJets_1.ntpl"},
  project="eg02_BigJets",
  runnum="1" );
"""

TWO_STAGE_VDL = FORTRAN_LISTING + "\n" + ORCA_VDL

FORTRAN_DV = "EG02_BIGJETS_1_SIMULATION"
ORCA_DV = "EG02_BIGJETS_1_ANALYSIS"
CARD_FILES = ("eg02_BigJets_Id_252.txt", "STANDARD_125_Id_42.txt", "cms125.rz")


def two_stage_catalog() -> VirtualDataCatalog:
    return VirtualDataCatalog(parse_vdl(TWO_STAGE_VDL))
