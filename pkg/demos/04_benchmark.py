"""
Priors versus no priors
=======================

Same scenarios, same seeds, four planners. Confidences are noisy estimates of
the true success rates, and each run gets 20 executions.
"""

import numpy as np

from attackpath.benchmark import SuiteConfig, run_benchmark
from attackpath.generator import GeneratorConfig

gen = GeneratorConfig(linux_servers=2, windows_servers=2, clients=4, appliances=1, compartments=3,
                      exploits_per_host=(1, 2), noise="uniform:0.15")
report = run_benchmark(SuiteConfig(seeds=tuple(range(100)), budget=20, generator=gen, workers=4))
print(report.to_table())

# where do the planners disagree?
by_seed = {}
for row in report.rows:
    by_seed.setdefault(row["seed"], {})[row["variant"]] = row["success"]
init_only = sum(r["mcts_init"] and not r["mcts_uniform"] for r in by_seed.values())
uniform_only = sum(r["mcts_uniform"] and not r["mcts_init"] for r in by_seed.values())
print("solved only with priors:", init_only, " only without:", uniform_only)

execs = np.array([r["executions"] for r in report.rows if r["variant"] == "mcts_init" and r["success"]])
print("executions to goal with priors: median", np.median(execs), "max", execs.max())
