# Describing a simulation step in VDL and storing it in a virtual data catalog.

from vds import VirtualDataCatalog, parse_vdl, serialize_vdl
from vds.fixtures import FORTRAN_LISTING, ORCA_VDL

# The CMKIN/CMSIM step: one transformation (the typed signature of the
# executable) and one derivation (a concrete call with run number 1).
print(FORTRAN_LISTING)

objects = parse_vdl(FORTRAN_LISTING)
tr, dv = objects
print("formals:", [f"{f.cls.value}:{f.name}" for f in tr.formals])
print("inputs: ", sorted(dv.input_files))
print("outputs:", sorted(dv.output_files))

# Add the n-tuple stage. The catalog indexes each output file by the single
# derivation that produces it.
catalog = VirtualDataCatalog(objects)
catalog.insert_all(parse_vdl(ORCA_VDL))
print("who makes eg02_BigJets_1.fz?", catalog.find_producer("eg02_BigJets_1.fz").name)

binding = catalog.bind("EG02_BIGJETS_1_ANALYSIS")
print("analysis params:", binding.params)

# Serialization is canonical, so the dump parses back to the same objects.
text = serialize_vdl(catalog.objects())
assert parse_vdl(text) == catalog.objects()
print(f"catalog round-trips through {len(text.splitlines())} lines of VDL")
