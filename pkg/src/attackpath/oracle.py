"""Brute-force ground truth for small scenarios.

Nothing here reuses the planner's feasibility, relay or value code: relay
chains are found by trying every ordering of held hosts, and values come
from plain recursion without memoisation. Agreement with the planner is
therefore evidence rather than tautology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import AttackPathError
from .model import Direction
from .scenario import Exploit, Scenario

MAX_HOSTS = 6
MAX_EXPLOITS = 10


@dataclass
class OracleReport:
    reachable: bool
    best_path: list[str]
    init_value: float
    full_value: float
    enumerated_paths: int
    paths: list[list[tuple[str, int]]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "reachable": self.reachable,
            "best_path": self.best_path,
            "init_value": self.init_value,
            "full_value": self.full_value,
            "enumerated_paths": self.enumerated_paths,
        }


def _check_size(scenario: Scenario) -> None:
    if len(scenario.hosts) > MAX_HOSTS or len(scenario.exploits) > MAX_EXPLOITS:
        raise AttackPathError(
            "ORACLE_CAP",
            f"oracle limited to {MAX_HOSTS} hosts / {MAX_EXPLOITS} exploits, "
            f"got {len(scenario.hosts)} / {len(scenario.exploits)}",
        )


def _edge(scenario: Scenario, a: str, b: str, port: int) -> bool:
    return (a, b, port) in scenario.connectivity.edges


def _requirement_met(scenario: Scenario, held_hosts: set[str], executing: str, host: str,
                     port: int, direction: Direction) -> bool:
    relays = sorted(held_hosts - {executing, host})
    for k in range(len(relays) + 1):
        for chain in itertools.permutations(relays, k):
            # traffic order: executing -> chain -> host (fwd) or host -> chain -> executing (rev)
            if direction is Direction.FWD:
                seq = [executing, *chain, host]
                legs_ok = all(_edge(scenario, a, b, scenario.relay_port) for a, b in zip(seq[:-2], seq[1:-1]))
                legs_ok = legs_ok and _edge(scenario, seq[-2], seq[-1], port)
            else:
                seq = [host, *reversed(chain), executing]
                legs_ok = _edge(scenario, seq[0], seq[1], port)
                legs_ok = legs_ok and all(_edge(scenario, a, b, scenario.relay_port)
                                          for a, b in zip(seq[1:-1], seq[2:]))
            if legs_ok:
                return True
    return False


def _can_run(scenario: Scenario, held: frozenset, exploit: Exploit) -> bool:
    if any(s not in held for s in exploit.exec):
        return False
    held_hosts = {h for h, _ in held}
    if exploit.executing_shell.host not in held_hosts:
        return False
    return all(_requirement_met(scenario, held_hosts, exploit.executing_shell.host, c.host, c.port, c.direction)
               for c in exploit.conn)


def _is_goal(scenario: Scenario, held: frozenset) -> bool:
    return all(g in held for g in scenario.goal.shells)


def enumerate_paths(scenario: Scenario, max_depth: int) -> list[list[tuple[str, int]]]:
    """All goal-reaching sequences of ``(exploit id, outcome index)``.

    Every action is assumed to succeed; each of its outcomes is a separate
    branch. Actions that add no new shell are skipped, and a sequence stops
    as soon as the goal holds.
    """
    _check_size(scenario)
    found: list[list[tuple[str, int]]] = []
    exploits = sorted(scenario.exploits, key=lambda e: e.id)

    def walk(held: frozenset, path: list[tuple[str, int]]) -> None:
        if _is_goal(scenario, held):
            found.append(list(path))
            return
        if len(path) == max_depth:
            return
        for e in exploits:
            if not _can_run(scenario, held, e):
                continue
            for i, o in enumerate(e.outcomes):
                after = held | o.shells_gained
                if after == held:
                    continue
                path.append((e.id, i))
                walk(after, path)
                path.pop()

    walk(frozenset(scenario.initial_state.shells), [])
    return found


def brute_force_value(scenario: Scenario, gamma: float = 0.9, horizon: int = 4,
                      goal_value: float = 1.0) -> float:
    """Depth-indexed value of the initial state with the failure term omitted."""
    _check_size(scenario)

    def v(held: frozenset, d: int) -> float:
        if _is_goal(scenario, held):
            return goal_value
        if d == 0:
            return 0.0
        best = 0.0
        for e in scenario.exploits:
            if _can_run(scenario, held, e):
                q = e.confidence * gamma * max(v(held | o.shells_gained, d - 1) for o in e.outcomes)
                best = max(best, q)
        return best

    return v(frozenset(scenario.initial_state.shells), horizon)


def expectimax_value(scenario: Scenario, gamma: float = 0.9, horizon: int = 4,
                     goal_value: float = 1.0) -> float:
    """Same recursion with the failure continuation ``(1 - p) * gamma * V(s, d - 1)``."""
    _check_size(scenario)

    def v(held: frozenset, d: int) -> float:
        if _is_goal(scenario, held):
            return goal_value
        if d == 0:
            return 0.0
        best = 0.0
        stay = None
        for e in scenario.exploits:
            if _can_run(scenario, held, e):
                if stay is None:
                    stay = v(held, d - 1)
                p = e.confidence
                q = p * gamma * max(v(held | o.shells_gained, d - 1) for o in e.outcomes) + (1 - p) * gamma * stay
                best = max(best, q)
        return best

    return v(frozenset(scenario.initial_state.shells), horizon)


def oracle_report(scenario: Scenario, gamma: float = 0.9, horizon: int = 4) -> OracleReport:
    paths = enumerate_paths(scenario, horizon)
    best: list[str] = []
    if paths:
        # shortest first, then the highest product of confidences
        def rank(path):
            prob = 1.0
            for eid, _ in path:
                prob *= scenario.exploit(eid).confidence
            return (len(path), -prob)
        best = [eid for eid, _ in min(paths, key=rank)]
    return OracleReport(
        reachable=bool(paths),
        best_path=best,
        init_value=brute_force_value(scenario, gamma, horizon),
        full_value=expectimax_value(scenario, gamma, horizon),
        enumerated_paths=len(paths),
        paths=paths,
    )


def count_tree_edges(scenario: Scenario, horizon: int) -> int:
    """Edges of the full search tree within ``horizon``: one per (history, feasible exploit).

    Every outcome of an exploit opens its own subtree; the goal ends a branch.
    """
    _check_size(scenario)

    def count(held: frozenset, d: int) -> int:
        if d == 0 or _is_goal(scenario, held):
            return 0
        total = 0
        for e in scenario.exploits:
            if _can_run(scenario, held, e):
                total += 1
                total += sum(count(held | o.shells_gained, d - 1)
                             for o in e.outcomes if not o.shells_gained <= held)
        return total

    return count(frozenset(scenario.initial_state.shells), horizon)
