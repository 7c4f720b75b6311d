# From a requested product to a site-specific submit file, with and without
# an existing replica of the intermediate file.

from vds import ReplicaCatalog, dag_to_text, emit_dag_file, plan_abstract, plan_concrete
from vds.fixtures import CARD_FILES, two_stage_catalog

catalog = two_stage_catalog()

# The abstract DAG only knows about derivations and the files linking them.
dag = plan_abstract(catalog, "eg02_BigJets_1.ntpl")
print(dag_to_text(dag))

# Card files and geometry live at the storage element.
rls = ReplicaCatalog()
for lfn in CARD_FILES:
    rls.register(lfn, "storage", f"/store/{lfn}")

storage = ("storage", "/store/cms")
print(emit_dag_file(plan_concrete(dag, "ufl", rls, storage)))

# Once the fz file has been produced and registered somewhere, planning the
# same product again skips the simulation and stages the file in instead.
rls.register("eg02_BigJets_1.fz", "storage", "/store/cms/eg02_BigJets_1.fz")
print(emit_dag_file(plan_concrete(dag, "ufl", rls, storage)))

# Keeping only the final products: intermediates consumed inside the DAG are
# not written back unless listed.
rls.unregister("eg02_BigJets_1.fz", "storage")
lean = plan_concrete(dag, "ufl", rls, storage, keep=set())
print("staged out with keep=set():", sorted(n.lfn for n in lean.nodes.values() if type(n).__name__ == "StageOut"))
