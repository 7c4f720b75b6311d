"""Virtual data system: describe products in VDL, plan them, and run them on a simulated grid."""

from .abstract import AbstractDag, dag_to_text, plan_abstract, topo_order
from .catalog import VirtualDataCatalog
from .concrete import ConcreteDag, emit_dag_file, parse_dag_file, plan_concrete, prune
from .errors import VdsError
from .gridsim import GridConfig, GridSimulator, SiteSpec
from .production import (
    CompletionRecord,
    JobDescription,
    MetadataDb,
    ProductionRequest,
    generate_derivations,
    parse_job_log,
    split_jobs,
)
from .rls import ReplicaCatalog
from .scenario import run_scenario
from .vdl import ArgClass, Derivation, FileRef, Literal, Transformation, bind_derivation, parse_vdl, serialize_vdl
from .workrunner import WorkRunner

__version__ = "0.1.0"
