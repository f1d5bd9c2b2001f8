"""
Values on a three-step chain
============================

A foothold on kali, a web server reachable on port 80, a database behind it.
Three exploits in a row get us from kali to root on the database.
"""

from dataclasses import replace

from attackpath import oracle
from attackpath.connectivity import ConnectivityGraph
from attackpath.model import AttackState, ConnRequirement, ShellRef
from attackpath.scenario import Exploit, Scenario
from attackpath.value_init import InitConfig, compute_values

kali = ShellRef.of("kali", "priv")
web_user = ShellRef.of("web", "unpriv")
web_root = ShellRef.of("web", "priv")
db_root = ShellRef.of("db", "priv")

graph = ConnectivityGraph.build(["kali", "web", "db"], [("kali", "web", 80), ("web", "db", 5432)])
exploits = (
    Exploit.simple("E1", kali, [web_user], 0.8, conn=[ConnRequirement.of("web", 80)]),
    Exploit.simple("E2", web_user, [web_root], 0.5),
    Exploit.simple("E3", web_root, [db_root], 0.9, conn=[ConnRequirement.of("db", 5432)]),
)
scenario = Scenario(("kali", "web", "db"), graph, exploits, AttackState.of(kali), AttackState.of(db_root))

# each step multiplies by its confidence and one discount
table = compute_values(scenario, InitConfig(gamma=0.9, horizon=4))
for depth, value in enumerate(table.root_values()):
    print(f"V(s0, {depth}) = {value:.6f}")

print("by hand:", 0.8 * 0.9 * 0.5 * 0.9 * 0.9 * 0.9)
print("oracle :", oracle.brute_force_value(scenario, 0.9, 4))

# The table ignores what happens after a failure. Expectimax keeps it, so it
# is always at least as large.
print("expectimax with retries:", oracle.expectimax_value(scenario, 0.9, 4))

# a certain middle step
easier = scenario.replace(exploits=(exploits[0], replace(exploits[1], confidence=1.0), exploits[2]))
print("E2 certain:", compute_values(easier).value(easier.initial_state, 4))
