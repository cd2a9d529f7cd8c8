"""Generate a small benchmark batch and compare solver configurations.

Produces the records table, shifted geometric means of the per-cell times,
and a Dolan-More performance profile in CSV and gnuplot step-data form.
"""

import poolblend as pb
from poolblend.bench import (
    performance_profile,
    profile_to_csv,
    profile_to_step_data,
    records_to_csv,
    run_batch,
)

specs = [pb.GenSpec("sparse_haverly", 6, 2, 4, 2, 16, seed) for seed in (2, 9, 10, 11)]
instances = [(spec.instance_name(), pb.generate_instance(spec)) for spec in specs]

gap = pb.GapSpec(rel_tol=1e-4, abs_tol=1e-8, time_limit=30.0)
records = run_batch(instances, ["default", "cuts+heuristic"], gap)

print(records_to_csv(records))

for config in ("default", "cuts+heuristic"):
    times = [r.time for r in records if r.config == config]
    print(f"{config}: shifted geomean time (shift 0.1) = "
          f"{pb.shifted_geomean(times, 0.1):.3f}s")

series = performance_profile(records)
print()
print(profile_to_csv(series))
print(profile_to_step_data(series))
