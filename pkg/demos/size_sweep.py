"""
A reduced size sweep through the experiment harness
===================================================

The same thing ``ooclust sweep`` does, at sizes small enough to run in a few
seconds. Results land in ./sweep_demo.
"""

import os
from dataclasses import replace

from ooclust import EngineConfig, ExperimentSpec, emit_csv, emit_plots, run_experiment
from ooclust.experiment import aggregate

spec = ExperimentSpec(db_sizes=[250, 500, 1000], replications=2,
                      template=replace(EngineConfig(), transactions_to_run=1500))
rows = run_experiment(spec, progress=lambda r: print(r.policy, r.db_initial_size, r.seed))

os.makedirs("sweep_demo", exist_ok=True)
emit_csv(rows, "sweep_demo/results.csv")
for path in emit_plots(rows, "sweep_demo"):
    print("wrote", path)

# mean over replications, per policy
for policy, points in aggregate(rows, "mean_response_time_s").items():
    print(policy, ", ".join(f"{n}: {v * 1e3:.1f} ms" for n, v in points))
