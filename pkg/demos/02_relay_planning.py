"""
Pivoting through owned hosts
============================

The database only accepts connections from the web tier. Once we hold a
shell on web, traffic from kali can be relayed through it.
"""

from attackpath.connectivity import ConnectivityGraph, plan_relay_chain, to_dot, verify_relay_plan
from attackpath.model import AttackState, ConnRequirement

hosts = ["kali", "web", "app", "db"]
edges = [
    ("kali", "web", 4444),
    ("web", "app", 4444),
    ("app", "db", 22),
    ("db", "app", 443),   # egress for reverse shells
    ("app", "web", 4444),
    ("web", "kali", 4444),
]
graph = ConnectivityGraph.build(hosts, edges)

held = AttackState.of(("kali", "priv"), ("web", "unpriv"), ("app", "unpriv"))

ssh = ConnRequirement.of("db", 22)
plan = plan_relay_chain(graph, held, ssh, executing="kali")
print("forward ssh to db:", " -> ".join(plan.flow()))
print("valid:", verify_relay_plan(graph, held, plan))

# A reverse shell flows the other way: db calls out, hops relay it home.
callback = ConnRequirement.of("db", 443, "rev")
plan = plan_relay_chain(graph, held, callback, executing="kali")
print("reverse shell from db:", " -> ".join(plan.flow()))

# Without app there is no way in.
print("without app:", plan_relay_chain(graph, AttackState.of(("kali", "priv"), ("web", "unpriv")), ssh, "kali"))

print(to_dot(graph, highlight=["db"]))
