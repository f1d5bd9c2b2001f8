"""Exploits, scenarios, action feasibility and the scenario file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .connectivity import DEFAULT_RELAY_PORT, ConnectivityGraph, RelayPlan, plan_relay_chain
from .errors import AttackPathError
from .model import AttackState, ConnRequirement, Direction, HostId, Privilege, ShellRef

WEIGHT_TOL = 1e-9


class ExploitKind(str, Enum):
    REMOTE_SHELL = "remote_shell"
    CODE_EXECUTION = "code_execution"
    CREDENTIAL_DUMP = "credential_dump"


@dataclass(frozen=True)
class Outcome:
    shells_gained: frozenset[ShellRef]
    weight: float = 1.0


@dataclass(frozen=True)
class Exploit:
    id: str
    exec: frozenset[ShellRef]
    executing_shell: ShellRef
    conn: frozenset[ConnRequirement]
    outcomes: tuple[Outcome, ...]
    confidence: float
    kind: ExploitKind = ExploitKind.REMOTE_SHELL

    @classmethod
    def simple(cls, id: str, executing: ShellRef, gains: Iterable[ShellRef], confidence: float,
               conn: Iterable[ConnRequirement] = (), extra_exec: Iterable[ShellRef] = (),
               kind: ExploitKind = ExploitKind.REMOTE_SHELL) -> "Exploit":
        """Single-outcome exploit executed from ``executing``."""
        return cls(id, frozenset({executing, *extra_exec}), executing, frozenset(conn),
                   (Outcome(frozenset(gains), 1.0),), confidence, kind)

    def all_gains(self) -> frozenset[ShellRef]:
        return frozenset().union(*(o.shells_gained for o in self.outcomes))


@dataclass(frozen=True)
class GroundTruth:
    """True success process behind an exploit's confidence estimate."""

    p_true: float
    outcome_weights: tuple[float, ...] | None = None
    latency: tuple[float, float] = (900.0, 300.0)
    flaky_session: float = 0.0


@dataclass(frozen=True)
class FeasibleAction:
    exploit: Exploit
    plans: tuple[RelayPlan, ...]

    @property
    def direct(self) -> bool:
        return all(p.direct for p in self.plans)


@dataclass(frozen=True)
class Scenario:
    hosts: tuple[HostId, ...]
    connectivity: ConnectivityGraph
    exploits: tuple[Exploit, ...]
    initial_state: AttackState
    goal: AttackState
    relay_port: int = DEFAULT_RELAY_PORT
    ground_truth: dict[str, GroundTruth] | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def exploit(self, exploit_id: str) -> Exploit:
        index = self._cache.get("by_id")
        if index is None:
            index = self._cache["by_id"] = {e.id: e for e in self.exploits}
        return index[exploit_id]

    def truth(self, exploit_id: str) -> GroundTruth:
        """Ground truth for an exploit; falls back to its confidence estimate."""
        if self.ground_truth and exploit_id in self.ground_truth:
            return self.ground_truth[exploit_id]
        return GroundTruth(self.exploit(exploit_id).confidence)

    def replace(self, **changes) -> "Scenario":
        fields = {k: getattr(self, k) for k in
                  ("hosts", "connectivity", "exploits", "initial_state", "goal", "relay_port", "ground_truth")}
        fields.update(changes)
        return Scenario(**fields)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


def goal_reached(state: AttackState, goal: AttackState) -> bool:
    return state.issuperset(goal)


def apply_outcome(state: AttackState, outcome: Outcome) -> AttackState:
    return state.union(outcome.shells_gained)


def feasible_actions(state: AttackState, scenario: Scenario) -> list[FeasibleAction]:
    """Exploits executable from ``state``, each with one relay plan per requirement.

    Results are ordered by exploit id and cached per state.
    """
    cache = scenario._cache.setdefault("feasible", {})
    hit = cache.get(state)
    if hit is not None:
        return hit
    ordered = scenario._cache.get("ordered")
    if ordered is None:
        ordered = scenario._cache["ordered"] = sorted(scenario.exploits, key=lambda e: e.id)
    out = []
    for exploit in ordered:
        if not exploit.exec <= state.shells:
            continue
        plans = []
        for req in sorted(exploit.conn):
            plan = plan_relay_chain(scenario.connectivity, state, req,
                                    exploit.executing_shell.host, scenario.relay_port)
            if plan is None:
                break
            plans.append(plan)
        else:
            out.append(FeasibleAction(exploit, tuple(plans)))
    cache[state] = out
    return out


# -- validation ---------------------------------------------------------------

TOP_LEVEL_KEYS = {"hosts", "connectivity", "exploits", "initial_state", "goal", "relay_port", "ground_truth"}
REQUIRED_KEYS = TOP_LEVEL_KEYS - {"ground_truth"}
EXPLOIT_KEYS = {"id", "exec", "executing_shell", "conn", "outcomes", "confidence", "kind"}
SHELL_KEYS = {"host", "privilege"}
CONN_KEYS = {"host", "port", "direction"}
OUTCOME_KEYS = {"shells_gained", "weight"}
TRUTH_KEYS = {"p_true", "outcome_weights", "latency", "flaky_session"}


def _in_unit(x: float) -> bool:
    return isinstance(x, (int, float)) and not math.isnan(x) and 0.0 <= x <= 1.0


def validate_scenario(scenario: Scenario | dict) -> list[Violation]:
    """Every invariant violation in a scenario; empty means valid.

    Accepts either a parsed :class:`Scenario` or a raw scenario document, in
    which case field names and duplicate edges are checked as well.
    """
    if isinstance(scenario, dict):
        return _validate_document(scenario)
    return _validate_parsed(scenario)


def _validate_parsed(sc: Scenario) -> list[Violation]:
    out: list[Violation] = []
    declared = set(sc.hosts)
    seen_hosts: set[str] = set()
    for h in sc.hosts:
        if not h:
            out.append(Violation("EMPTY_HOST_ID", "host ids must be non-empty"))
        elif h in seen_hosts:
            out.append(Violation("DUPLICATE_HOST", f"host {h!r} declared twice"))
        seen_hosts.add(h)

    def unknown(host: str, where: str) -> None:
        if host not in declared:
            out.append(Violation("UNKNOWN_HOST", f"{where} references undeclared host {host!r}"))

    for s, d, p in sorted(sc.connectivity.edges):
        unknown(s, f"edge {s}->{d}:{p}")
        unknown(d, f"edge {s}->{d}:{p}")
        if not 1 <= p <= 65535:
            out.append(Violation("PORT_OUT_OF_RANGE", f"edge {s}->{d} uses port {p}"))

    ids: set[str] = set()
    for e in sc.exploits:
        where = f"exploit {e.id!r}"
        if e.id in ids:
            out.append(Violation("DUPLICATE_EXPLOIT_ID", f"{where} declared twice"))
        ids.add(e.id)
        for shell in sorted(e.exec | {e.executing_shell}):
            unknown(shell.host, where)
        if e.executing_shell not in e.exec:
            out.append(Violation("EXEC_SHELL_NOT_IN_EXEC", f"{where}: executing shell {e.executing_shell} not in exec"))
        for req in sorted(e.conn):
            unknown(req.host, where)
            if not 1 <= req.port <= 65535:
                out.append(Violation("PORT_OUT_OF_RANGE", f"{where}: port {req.port}"))
        if not _in_unit(e.confidence):
            out.append(Violation("CONFIDENCE_OUT_OF_RANGE", f"{where}: confidence {e.confidence}"))
        if not e.outcomes:
            out.append(Violation("NO_OUTCOMES", f"{where} has no outcomes"))
        else:
            for o in e.outcomes:
                if not o.shells_gained:
                    out.append(Violation("EMPTY_OUTCOME", f"{where} has an outcome gaining nothing"))
                for shell in sorted(o.shells_gained):
                    unknown(shell.host, where)
                if not _in_unit(o.weight):
                    out.append(Violation("WEIGHT_OUT_OF_RANGE", f"{where}: outcome weight {o.weight}"))
            total = sum(o.weight for o in e.outcomes)
            if abs(total - 1.0) > WEIGHT_TOL:
                out.append(Violation("OUTCOME_WEIGHT_SUM", f"{where}: outcome weights sum to {total}"))

    if not sc.initial_state.shells:
        out.append(Violation("EMPTY_INITIAL_STATE", "initial state holds no shells"))
    for shell in sc.initial_state:
        unknown(shell.host, "initial_state")
    for shell in sc.goal:
        unknown(shell.host, "goal")
    if not 1 <= sc.relay_port <= 65535:
        out.append(Violation("PORT_OUT_OF_RANGE", f"relay_port {sc.relay_port}"))

    for eid, gt in sorted((sc.ground_truth or {}).items()):
        where = f"ground_truth[{eid!r}]"
        if eid not in ids:
            out.append(Violation("UNKNOWN_EXPLOIT", f"{where} names no exploit"))
            continue
        if not _in_unit(gt.p_true):
            out.append(Violation("P_TRUE_OUT_OF_RANGE", f"{where}: p_true {gt.p_true}"))
        if gt.latency[0] < 0 or gt.latency[1] < 0:
            out.append(Violation("NEGATIVE_LATENCY", f"{where}: latency {gt.latency}"))
        if not _in_unit(gt.flaky_session):
            out.append(Violation("FLAKY_OUT_OF_RANGE", f"{where}: flaky_session {gt.flaky_session}"))
        if gt.outcome_weights is not None:
            exploit = sc.exploit(eid)
            if len(gt.outcome_weights) != len(exploit.outcomes):
                out.append(Violation("OUTCOME_WEIGHTS_MISMATCH", f"{where}: expected {len(exploit.outcomes)} weights"))
            elif (not all(_in_unit(w) for w in gt.outcome_weights)
                  or abs(sum(gt.outcome_weights) - 1.0) > WEIGHT_TOL):
                out.append(Violation("OUTCOME_WEIGHT_SUM", f"{where}: outcome weights must be a distribution"))
    return out


def _unknown_keys(obj: Any, allowed: set[str], where: str) -> list[Violation]:
    if not isinstance(obj, dict):
        return []
    return [Violation("UNKNOWN_FIELD", f"{where}: unknown field {k!r}") for k in sorted(set(obj) - allowed)]


def _validate_document(doc: dict) -> list[Violation]:
    out = _unknown_keys(doc, TOP_LEVEL_KEYS, "scenario")
    out += [Violation("MISSING_FIELD", f"scenario: missing field {k!r}") for k in sorted(REQUIRED_KEYS - set(doc))]
    if out:
        return out
    for i, e in enumerate(doc.get("exploits") or []):
        where = f"exploits[{i}]"
        out += _unknown_keys(e, EXPLOIT_KEYS, where)
        if not isinstance(e, dict):
            continue
        for s in [*(e.get("exec") or []), e.get("executing_shell")]:
            out += _unknown_keys(s, SHELL_KEYS, where)
        for c in e.get("conn") or []:
            out += _unknown_keys(c, CONN_KEYS, where)
        for o in e.get("outcomes") or []:
            out += _unknown_keys(o, OUTCOME_KEYS, where)
            if isinstance(o, dict):
                for s in o.get("shells_gained") or []:
                    out += _unknown_keys(s, SHELL_KEYS, where)
    for key in ("initial_state", "goal"):
        for s in doc.get(key) or []:
            out += _unknown_keys(s, SHELL_KEYS, key)
    for eid, gt in (doc.get("ground_truth") or {}).items():
        out += _unknown_keys(gt, TRUTH_KEYS, f"ground_truth[{eid!r}]")
    edges = [tuple(e) for e in doc.get("connectivity") or [] if isinstance(e, (list, tuple))]
    seen: set[tuple] = set()
    for e in edges:
        if e in seen:
            out.append(Violation("DUPLICATE_EDGE", f"edge {list(e)} listed twice"))
        seen.add(e)
    if out:
        return out
    try:
        parsed = scenario_from_dict(doc)
    except AttackPathError as exc:
        return [Violation("MALFORMED", exc.message)]
    return _validate_parsed(parsed)


# -- serialization ------------------------------------------------------------

def _shell_to_dict(s: ShellRef) -> dict:
    return {"host": s.host, "privilege": s.privilege.value}


def _shells_to_list(shells: Iterable[ShellRef]) -> list[dict]:
    return [_shell_to_dict(s) for s in sorted(shells)]


def scenario_to_dict(sc: Scenario) -> dict:
    doc: dict[str, Any] = {
        "hosts": list(sc.hosts),
        "connectivity": sc.connectivity.to_triples(),
        "exploits": [
            {
                "id": e.id,
                "exec": _shells_to_list(e.exec),
                "executing_shell": _shell_to_dict(e.executing_shell),
                "conn": [{"host": c.host, "port": c.port, "direction": c.direction.value} for c in sorted(e.conn)],
                "outcomes": [{"shells_gained": _shells_to_list(o.shells_gained), "weight": o.weight}
                             for o in e.outcomes],
                "confidence": e.confidence,
                "kind": e.kind.value,
            }
            for e in sc.exploits
        ],
        "initial_state": _shells_to_list(sc.initial_state),
        "goal": _shells_to_list(sc.goal),
        "relay_port": sc.relay_port,
    }
    if sc.ground_truth is not None:
        doc["ground_truth"] = {
            eid: {
                "p_true": gt.p_true,
                "outcome_weights": None if gt.outcome_weights is None else list(gt.outcome_weights),
                "latency": list(gt.latency),
                "flaky_session": gt.flaky_session,
            }
            for eid, gt in sorted(sc.ground_truth.items())
        }
    return doc


def _parse_shell(d: Any) -> ShellRef:
    try:
        return ShellRef(str(d["host"]), Privilege(d["privilege"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise AttackPathError("MALFORMED", f"bad shell reference {d!r}") from exc


def _parse_shells(items: Any) -> frozenset[ShellRef]:
    return frozenset(_parse_shell(s) for s in items or [])


def scenario_from_dict(doc: dict) -> Scenario:
    """Parse a scenario document. Structural problems raise ``MALFORMED``;
    semantic checks are left to :func:`validate_scenario`."""
    try:
        hosts = tuple(str(h) for h in doc["hosts"])
        graph = ConnectivityGraph.build(hosts, doc["connectivity"])
        exploits = []
        for e in doc["exploits"]:
            exploits.append(Exploit(
                id=str(e["id"]),
                exec=_parse_shells(e["exec"]),
                executing_shell=_parse_shell(e["executing_shell"]),
                conn=frozenset(ConnRequirement(str(c["host"]), int(c["port"]), Direction(c.get("direction", "fwd")))
                               for c in e.get("conn") or []),
                outcomes=tuple(Outcome(_parse_shells(o["shells_gained"]), float(o.get("weight", 1.0)))
                               for o in e["outcomes"]),
                confidence=float(e["confidence"]),
                kind=ExploitKind(e.get("kind", "remote_shell")),
            ))
        truth = None
        if doc.get("ground_truth") is not None:
            truth = {}
            for eid, gt in doc["ground_truth"].items():
                weights = gt.get("outcome_weights")
                latency = gt.get("latency", (900.0, 300.0))
                truth[str(eid)] = GroundTruth(
                    p_true=float(gt["p_true"]),
                    outcome_weights=None if weights is None else tuple(float(w) for w in weights),
                    latency=(float(latency[0]), float(latency[1])),
                    flaky_session=float(gt.get("flaky_session", 0.0)),
                )
        return Scenario(
            hosts=hosts,
            connectivity=graph,
            exploits=tuple(exploits),
            initial_state=AttackState(_parse_shells(doc["initial_state"])),
            goal=AttackState(_parse_shells(doc["goal"])),
            relay_port=int(doc.get("relay_port", DEFAULT_RELAY_PORT)),
            ground_truth=truth,
        )
    except AttackPathError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise AttackPathError("MALFORMED", f"{type(exc).__name__}: {exc}") from exc


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps_scenario(sc), encoding="utf-8")
