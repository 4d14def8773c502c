"""
Four clustering policies on one small database
===============================================

Runs each policy against the same database and transaction stream, then
plots where the time goes.
"""

import matplotlib.pyplot as plt
import numpy as np

from ooclust import DatabaseSpec, EngineConfig, PolicyConfig, run

policies = ["null", "cactis", "orion", "ck"]
results = {}
for name in policies:
    cfg = EngineConfig(database=DatabaseSpec(initial_objects=1000), policy=PolicyConfig(name=name), seed=1)
    results[name] = run(cfg)

print(f"{'policy':8s} {'resp (ms)':>10s} {'txn io':>7s} {'clust io':>9s} {'pages':>7s} {'reorgs':>7s}")
for name, m in results.items():
    print(f"{name:8s} {m.mean_response_time * 1e3:10.2f} {m.mean_txn_ios:7.2f} {m.mean_clust_ios:9.2f} "
          f"{m.mean_pages_used:7.0f} {m.reorg_count:7d}")

# split each transaction's response into service, queueing and reorganization blocking
parts = np.array([[np.mean([getattr(r, f) for r in results[p].txn_records]) for f in ("service", "waiting", "blocked")]
                  for p in policies]) * 1e3
bottom = np.zeros(len(policies))
for i, label in enumerate(["service", "waiting", "blocked"]):
    plt.bar(policies, parts[:, i], bottom=bottom, label=label)
    bottom += parts[:, i]
plt.yscale("symlog")
plt.ylabel("mean per transaction (ms)")
plt.legend()
plt.savefig("compare_policies.svg")
print("wrote compare_policies.svg")
