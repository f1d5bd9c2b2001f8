"""
Watching the tree search
========================

Generate a small network, run the planner against the simulator and read
the trace back.
"""

import json
from collections import Counter

from attackpath import oracle
from attackpath.generator import generate_scenario, small_config
from attackpath.mcts import SearchConfig, run_search, tree_to_dot
from attackpath.sim_env import SimulatedEnvironment

scenario = generate_scenario(small_config(seed=12))
print(len(scenario.hosts), "hosts,", len(scenario.exploits), "exploits")
print("goal:", [str(s) for s in scenario.goal])
for e in scenario.exploits:
    gains = [[str(s) for s in o.shells_gained] for o in e.outcomes]
    print(f"  {e.id:<10} from {e.executing_shell}  p={e.confidence:.2f}  -> {gains}")

env = SimulatedEnvironment(scenario, seed=3, latency_scale=0)
result = run_search(scenario, env, SearchConfig(max_executions=20))
print()
print(result.termination_reason, "after", result.executions_used, "executions")
print("path:", [eid for eid, _, _ in result.best_path])

print(Counter(e["phase"] for e in result.trace))
for event in result.trace:
    if event["phase"] == "execute":
        ok = "ok  " if event["outcome"]["success"] else "FAIL"
        print(f"  it {event['iteration']:>2}  {ok} {event['exploit']:<10} from {event['state']}")

# how the planner's first guess compares to the brute-force values
report = oracle.oracle_report(scenario)
print(json.dumps(report.to_dict(), indent=1))

with open("search_tree.dot", "w") as fh:
    fh.write(tree_to_dot(result))
