# One 50-CPU cluster, 678 two-stage DAGs of 250 events, and a local user who
# occasionally kills a running simulation.

from vds.scenario import DAY, run_scenario, scenario_a

result = run_scenario(scenario_a())
report = result.report()

print(f"succeeded {report['succeeded']}, failed {report['failed']}")
print(f"events produced: {report['events_produced']:,}")
print(f"simulated span: {report['sim_seconds'] / DAY:.2f} days")

lost = [r for r in result.runner.records.values() if r.reason]
for rec in lost:
    print(f"  {rec.dv_name} lost at day {rec.end_time / DAY:.2f} ({rec.reason})")
