# A production request becomes one pair of derivations per job.

from vds import MetadataDb, ProductionRequest, VirtualDataCatalog
from vds.production import JobDescription, generate_derivations, production_targets, production_transformations, split_jobs

db = MetadataDb()
db.add_request(
    ProductionRequest(
        project="eg02_BigJets",
        total_events=150_000,
        events_per_job=250,
        kincard="eg02_BigJets_Id_252.txt",
        simcard="STANDARD_125_Id_42.txt",
        geomfile="cms125.rz",
    )
)

jd = db.read_request("eg02_BigJets")
splits = split_jobs(jd)
print(f"{len(splits)} jobs; first {splits[:3]}, last {splits[-1]}")

# The run number is also the random seed, so every job differs.
catalog = VirtualDataCatalog(production_transformations())
catalog.insert_all(generate_derivations(jd, splits))
print(f"{len(catalog.derivations)} derivations in the catalog")

targets = production_targets(jd, splits)
print("first targets:", targets[:2])

# An uneven request: the last job carries the remainder.
odd = split_jobs(JobDescription(ProductionRequest("odd", 1001, 250, "k", "s", "g")))
print("1001 events in jobs of 250:", odd)
