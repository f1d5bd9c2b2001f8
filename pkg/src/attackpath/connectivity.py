"""Port-level reachability between hosts and pivot (relay) planning.

The graph is a plain edge set: ``(src, dst, port)`` means ``src`` can open a
connection to ``dst`` on ``port``. There is no connection tracking, so a
reverse requirement is just an edge in the other direction.

When the executing host cannot reach a target itself, a requirement can be
relayed through other hosts on which the attacker holds a shell. Inter-hop
legs all use one scenario-wide relay port; only the leg touching the target
uses the requirement's own port.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .errors import AttackPathError
from .model import AttackState, ConnRequirement, Direction, HostId

DEFAULT_RELAY_PORT = 4444

Edge = tuple[HostId, HostId, int]


@dataclass(frozen=True)
class ConnectivityGraph:
    hosts: frozenset[HostId]
    edges: frozenset[Edge] = field(default_factory=frozenset)

    @classmethod
    def build(cls, hosts: Iterable[HostId], edges: Iterable[Iterable]) -> "ConnectivityGraph":
        return cls(frozenset(hosts), frozenset((str(s), str(d), int(p)) for s, d, p in edges))

    @cached_property
    def _out(self) -> dict[int, dict[HostId, frozenset[HostId]]]:
        index: dict[int, dict[HostId, set[HostId]]] = defaultdict(lambda: defaultdict(set))
        for src, dst, port in self.edges:
            index[port][src].add(dst)
        return {p: {h: frozenset(d) for h, d in by_src.items()} for p, by_src in index.items()}

    @cached_property
    def _in(self) -> dict[int, dict[HostId, frozenset[HostId]]]:
        index: dict[int, dict[HostId, set[HostId]]] = defaultdict(lambda: defaultdict(set))
        for src, dst, port in self.edges:
            index[port][dst].add(src)
        return {p: {h: frozenset(s) for h, s in by_dst.items()} for p, by_dst in index.items()}

    def has_edge(self, src: HostId, dst: HostId, port: int) -> bool:
        return (src, dst, port) in self.edges

    def successors(self, host: HostId, port: int) -> frozenset[HostId]:
        return self._out.get(port, {}).get(host, frozenset())

    def predecessors(self, host: HostId, port: int) -> frozenset[HostId]:
        return self._in.get(port, {}).get(host, frozenset())

    def reversed(self) -> "ConnectivityGraph":
        return ConnectivityGraph(self.hosts, frozenset((d, s, p) for s, d, p in self.edges))

    def with_edges(self, extra: Iterable[Edge]) -> "ConnectivityGraph":
        return ConnectivityGraph(self.hosts, self.edges | frozenset(extra))

    def to_triples(self) -> list[list]:
        return [[s, d, p] for s, d, p in sorted(self.edges)]


@dataclass(frozen=True)
class RelayPlan:
    """How one connectivity requirement is met.

    ``hops`` lists the intermediate relay hosts in the order traffic flows:
    for a forward requirement that is executing host -> hops -> target, for
    a reverse one target -> hops -> executing host. No hops means direct.
    """

    hops: tuple[HostId, ...]
    requirement: ConnRequirement
    terminus: HostId

    @property
    def direct(self) -> bool:
        return not self.hops

    def flow(self) -> list[HostId]:
        """Full host sequence in traffic order, endpoints included."""
        if self.requirement.direction is Direction.FWD:
            return [self.terminus, *self.hops, self.requirement.host]
        return [self.requirement.host, *self.hops, self.terminus]

    def to_dict(self) -> dict:
        req = self.requirement
        return {
            "hops": list(self.hops),
            "requirement": {"host": req.host, "port": req.port, "direction": req.direction.value},
            "terminus": self.terminus,
        }


def _check_host(graph: ConnectivityGraph, host: HostId) -> None:
    if host not in graph.hosts:
        raise AttackPathError("UNKNOWN_HOST", f"host {host!r} is not declared")


def direct_reachable(graph: ConnectivityGraph, src: HostId, dst: HostId, port: int,
                     direction: Direction | str = Direction.FWD) -> bool:
    """Whether ``src`` satisfies a requirement on ``dst`` without relays.

    Forward needs the edge ``src -> dst``; reverse needs ``dst -> src`` (the
    target calls back).
    """
    _check_host(graph, src)
    _check_host(graph, dst)
    if Direction(direction) is Direction.FWD:
        return graph.has_edge(src, dst, port)
    return graph.has_edge(dst, src, port)


def plan_relay_chain(graph: ConnectivityGraph, state: AttackState, req: ConnRequirement,
                     executing: HostId, relay_port: int = DEFAULT_RELAY_PORT) -> RelayPlan | None:
    """Minimum-hop relay chain through held hosts, or ``None`` if infeasible.

    Ties between equally short chains go to the lexicographically smallest
    host sequence, read from the executing side outwards.
    """
    _check_host(graph, executing)
    _check_host(graph, req.host)
    held = state.hosts
    if executing not in held:
        raise AttackPathError("EXEC_SHELL_NOT_HELD", f"no shell held on executing host {executing!r}")

    if direct_reachable(graph, executing, req.host, req.port, req.direction):
        return RelayPlan((), req, executing)

    fwd = req.direction is Direction.FWD
    # neighbours of a chain host, walking outwards from the executing host
    step = graph.successors if fwd else graph.predecessors

    def reaches_target(h: HostId) -> bool:
        return graph.has_edge(h, req.host, req.port) if fwd else graph.has_edge(req.host, h, req.port)

    candidates = held - {executing, req.host}
    visited = {executing}
    frontier: list[tuple[HostId, ...]] = [()]
    while frontier:
        nxt: list[tuple[HostId, ...]] = []
        for chain in frontier:
            tail = chain[-1] if chain else executing
            for h in sorted(step(tail, relay_port) & candidates):
                if h in visited:
                    continue
                visited.add(h)
                nxt.append(chain + (h,))
        # BFS with sorted expansion keeps each layer in lexicographic order
        for chain in nxt:
            if reaches_target(chain[-1]):
                hops = chain if fwd else tuple(reversed(chain))
                return RelayPlan(hops, req, executing)
        frontier = nxt
    return None


def verify_relay_plan(graph: ConnectivityGraph, state: AttackState, plan: RelayPlan,
                      relay_port: int = DEFAULT_RELAY_PORT) -> bool:
    """Independent re-check of every edge and holding condition of a plan."""
    held = state.hosts
    req = plan.requirement
    if plan.terminus not in held:
        return False
    if len(set(plan.hops)) != len(plan.hops):
        return False
    for h in plan.hops:
        if h not in held or h in (plan.terminus, req.host):
            return False
    flow = plan.flow()
    fwd = req.direction is Direction.FWD
    last = len(flow) - 2
    for i, (a, b) in enumerate(zip(flow, flow[1:])):
        touches_target = (i == last) if fwd else (i == 0)
        port = req.port if touches_target else relay_port
        if not graph.has_edge(a, b, port):
            return False
    return True


def to_dot(graph: ConnectivityGraph, highlight: Iterable[HostId] = ()) -> str:
    """Graphviz rendering with ports merged per host pair."""
    ports: dict[tuple[HostId, HostId], list[int]] = defaultdict(list)
    for s, d, p in sorted(graph.edges):
        ports[(s, d)].append(p)
    marked = set(highlight)
    lines = ["digraph connectivity {"]
    for h in sorted(graph.hosts):
        style = ' style=filled fillcolor="#f4cccc"' if h in marked else ""
        lines.append(f'  "{h}"{style};')
    for (s, d), ps in sorted(ports.items()):
        label = ",".join(str(p) for p in ps)
        lines.append(f'  "{s}" -> "{d}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
