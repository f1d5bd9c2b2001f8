"""Tree search with expensive, stochastic actions.

Each iteration runs four phases:

1. selection: walk down with UCT to an action that has not been executed;
2. execution: run it once in the environment (one unit of budget);
3. backpropagation: refresh the q-values along the walked path;
4. expansion: attach the new state's feasible actions, with priors.

Expansion comes after execution because the resulting state is only known
once the exploit has run. There are no rollouts; priors come from
:mod:`attackpath.value_init`.

A failed exploit gets q = 0 for good, so the same action is never retried
from the same state. The same exploit may still be tried again from another
state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from .connectivity import RelayPlan
from .errors import AttackPathError, SearchAborted
from .model import AttackState
from .scenario import Exploit, Scenario, feasible_actions, goal_reached, validate_scenario
from .sim_env import ExecutionOutcome
from .value_init import InitConfig, compute_values

TERMINATION_REASONS = ("goal", "exhausted", "no_positive_value", "stopped")


class Priors(Protocol):
    def value(self, state: AttackState, depth: int) -> float: ...

    def action_value(self, state: AttackState, exploit: Exploit, depth: int) -> float: ...


class Environment(Protocol):
    def execute(self, exploit: Exploit, state: AttackState, plans=()) -> ExecutionOutcome: ...


@dataclass
class UniformPriors:
    """Flat priors: every action within the horizon starts at ``constant``."""

    scenario: Scenario
    constant: float = 0.5

    def value(self, state: AttackState, depth: int) -> float:
        if goal_reached(state, self.scenario.goal):
            return 1.0
        if depth <= 0 or not feasible_actions(state, self.scenario):
            return 0.0
        return self.constant

    def action_value(self, state: AttackState, exploit: Exploit, depth: int) -> float:
        return self.constant if depth >= 1 else 0.0


@dataclass
class SearchConfig:
    exploration_weight: float = 0.3
    gamma: float = 0.9
    horizon: int = 4
    max_executions: int = 50
    rng_seed: int = 0
    prior_weight: float = 1.0
    stop_signal: Any = None

    def __post_init__(self):
        if self.exploration_weight < 0:
            raise ValueError("exploration_weight must be >= 0")
        if self.max_executions < 1:
            raise ValueError("max_executions must be >= 1")

    def init_config(self) -> InitConfig:
        return InitConfig(gamma=self.gamma, horizon=self.horizon)

    def stopped(self) -> bool:
        sig = self.stop_signal
        if sig is None:
            return False
        if hasattr(sig, "is_set"):
            return bool(sig.is_set())
        return bool(sig())


@dataclass(eq=False)
class SearchNode:
    """A tree edge together with the node it leads to.

    ``state`` stays ``None`` until the incoming action has been executed.
    """

    index: int
    depth: int
    prior: float
    q: float
    state: AttackState | None = None
    incoming_action: tuple[str, tuple[RelayPlan, ...]] | None = None
    parent: int | None = None
    visits: int = 0
    value_sum: float = 0.0
    failed: bool = False
    dead: bool = False
    expanded: bool = False
    is_goal: bool = False
    outcome: ExecutionOutcome | None = None
    children: list["SearchNode"] = field(default_factory=list)

    @property
    def exploit_id(self) -> str | None:
        return self.incoming_action[0] if self.incoming_action else None

    @property
    def executed(self) -> bool:
        return self.state is not None

    @property
    def q_eff(self) -> float:
        return self.prior if self.visits == 0 else self.q

    def live(self) -> bool:
        return not self.failed and not self.dead and self.q_eff > 0


@dataclass
class SearchResult:
    goal_reached: bool
    best_path: list[tuple[str, tuple[RelayPlan, ...], ExecutionOutcome]]
    executions_used: int
    termination_reason: str
    tree_stats: dict
    simulated_seconds: float = 0.0
    trace: list[dict] = field(default_factory=list, repr=False)
    nodes: list[SearchNode] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "goal_reached": self.goal_reached,
            "best_path": [
                {"exploit": eid, "plans": [p.to_dict() for p in plans], "outcome": out.to_dict()}
                for eid, plans, out in self.best_path
            ],
            "executions_used": self.executions_used,
            "termination_reason": self.termination_reason,
            "tree_stats": self.tree_stats,
            "simulated_seconds": self.simulated_seconds,
        }


def uct_score(child: SearchNode, parent_visits: int, c: float) -> float:
    return child.q_eff + c * math.sqrt(math.log(parent_visits + 1) / (child.visits + 1))


def uct_select(node: SearchNode, config: SearchConfig) -> int:
    """Index of the best live child; lower exploit id wins ties.

    Raises ``NO_POSITIVE_BRANCH`` when no child is live.
    """
    best, best_score = -1, -math.inf
    for i, child in enumerate(node.children):
        if not child.live():
            continue
        score = uct_score(child, node.visits, config.exploration_weight)
        # children are kept in ascending exploit id, so strict > keeps the lowest id on ties
        if score > best_score:
            best, best_score = i, score
    if best < 0:
        raise AttackPathError("NO_POSITIVE_BRANCH", "no child with positive value")
    return best


class _Search:
    def __init__(self, scenario: Scenario, env: Environment, config: SearchConfig, priors: Priors):
        self.scenario = scenario
        self.env = env
        self.config = config
        self.priors = priors
        self.nodes: list[SearchNode] = []
        self.trace: list[dict] = []
        # (state, exploit id) -> outcome; guards against same-state retries across transpositions
        self.executed: dict[tuple[AttackState, str], ExecutionOutcome] = {}
        self.executions = 0
        self.iteration = 0
        self.elapsed = 0.0

    def new_node(self, **kw) -> SearchNode:
        node = SearchNode(index=len(self.nodes), **kw)
        self.nodes.append(node)
        return node

    def remaining(self, node: SearchNode) -> int:
        return self.config.horizon - node.depth

    def observed(self, node: SearchNode) -> float:
        gamma = self.config.gamma
        if node.is_goal:
            return gamma * 1.0
        if node.expanded:
            return gamma * max((c.q_eff for c in node.children if c.live()), default=0.0)
        return gamma * self.priors.value(node.state, self.remaining(node))

    def expand(self, node: SearchNode) -> None:
        node.expanded = True
        rem = self.remaining(node)
        if rem <= 0 or node.is_goal:
            return
        for action in feasible_actions(node.state, self.scenario):
            exploit = action.exploit
            if all(o.shells_gained <= node.state.shells for o in exploit.outcomes):
                prior = 0.0  # can only re-grant held shells: s' = s_parent
            else:
                prior = self.priors.action_value(node.state, exploit, rem)
            node.children.append(self.new_node(
                depth=node.depth + 1, prior=prior, q=prior,
                incoming_action=(exploit.id, action.plans), parent=node.index,
            ))

    def refresh(self, node: SearchNode) -> None:
        """Recompute whether ``node`` still has anything worth selecting."""
        if node.failed:
            node.q = 0.0
            return
        if node.expanded and not node.is_goal and not any(c.live() for c in node.children):
            node.dead = True
            node.q = 0.0

    def backpropagate(self, path: list[SearchNode]) -> list[dict]:
        w = self.config.prior_weight
        updates = []
        for node in reversed(path):
            node.visits += 1
            if node.parent is None:
                self.refresh(node)
                continue
            if node.failed:
                node.q = 0.0
            else:
                node.value_sum += self.observed(node)
                node.q = (w * node.prior + node.value_sum) / (w + node.visits)
                self.refresh(node)
            updates.append({"node": node.index, "exploit": node.exploit_id, "q": node.q, "visits": node.visits})
        return updates

    def event(self, phase: str, **data) -> None:
        self.trace.append({"iteration": self.iteration, "phase": phase, **data})

    def run(self) -> SearchResult:
        sc, cfg = self.scenario, self.config
        root = self.new_node(depth=0, prior=0.0, q=0.0, state=sc.initial_state)
        root.is_goal = goal_reached(root.state, sc.goal)
        if root.is_goal:
            return self.result("goal", root)
        self.expand(root)
        self.refresh(root)
        self.event("expand", node=root.index,
                   children=[{"exploit": c.exploit_id, "prior": c.prior} for c in root.children])

        while True:
            if cfg.stopped():
                return self.result("stopped")
            if self.executions >= cfg.max_executions:
                return self.result("exhausted")
            if root.dead or not any(c.live() for c in root.children):
                return self.result("no_positive_value")

            node, path = root, [root]
            while True:
                child = node.children[uct_select(node, cfg)]
                path.append(child)
                if not child.executed:
                    break
                node = child
            self.event("select", path=[n.exploit_id for n in path[1:]], node=child.index)
            if cfg.stopped():
                return self.result("stopped")

            exploit_id, plans = child.incoming_action
            exploit = sc.exploit(exploit_id)
            key = (node.state, exploit_id)
            if key in self.executed:
                outcome = self.executed[key]
                self.event("reuse", exploit=exploit_id, node=child.index, outcome=outcome.to_dict())
            else:
                try:
                    outcome = self.env.execute(exploit, node.state, plans)
                except Exception as exc:
                    partial = self.result("stopped")
                    raise SearchAborted(f"{exploit_id}: {exc}", partial) from exc
                self.executions += 1
                self.elapsed += outcome.elapsed
                self.executed[key] = outcome
                self.event("execute", exploit=exploit_id, node=child.index,
                           state=[str(s) for s in node.state], plans=[p.to_dict() for p in plans],
                           outcome=outcome.to_dict())

            child.outcome = outcome
            new_state = node.state.union(outcome.shells_gained)
            child.state = new_state
            if not outcome.success or new_state == node.state:
                child.failed = True
                child.q = 0.0
            else:
                child.is_goal = goal_reached(new_state, sc.goal)

            self.event("backpropagate", updates=self.backpropagate(path))

            if not child.failed and not child.is_goal:
                self.expand(child)
                for n in reversed(path):
                    self.refresh(n)
                self.event("expand", node=child.index,
                           children=[{"exploit": c.exploit_id, "prior": c.prior} for c in child.children])
            if child.is_goal:
                return self.result("goal", child)
            self.iteration += 1

    def best_path_to(self, node: SearchNode | None) -> list[SearchNode]:
        if node is None:
            # follow the highest-valued successful edges from the root
            node = self.nodes[0]
            while True:
                done = [c for c in node.children if c.executed and not c.failed]
                if not done:
                    break
                node = max(done, key=lambda c: (c.q, -c.index))
        chain = []
        while node.parent is not None:
            chain.append(node)
            node = self.nodes[node.parent]
        return chain[::-1]

    def result(self, reason: str, goal_node: SearchNode | None = None) -> SearchResult:
        path = self.best_path_to(goal_node)
        executed = [n for n in self.nodes if n.executed]
        stats = {
            "node_count": len(self.nodes),
            "executed_nodes": len(executed),
            "max_depth": max((n.depth for n in executed), default=0),
        }
        return SearchResult(
            goal_reached=goal_node is not None,
            best_path=[(n.exploit_id, n.incoming_action[1], n.outcome) for n in path],
            executions_used=self.executions,
            termination_reason=reason,
            tree_stats=stats,
            simulated_seconds=self.elapsed,
            trace=self.trace,
            nodes=self.nodes,
        )


def run_search(scenario: Scenario, env: Environment, config: SearchConfig | None = None,
               priors: Priors | None = None) -> SearchResult:
    """Search for a path from the initial state to the goal.

    ``priors`` defaults to a value table built with the config's gamma and
    horizon. Raises ``INVALID_SCENARIO`` for scenarios that fail validation
    and :class:`SearchAborted` (``ENV_ERROR``) if the environment raises.
    """
    config = config or SearchConfig()
    violations = validate_scenario(scenario)
    if violations:
        raise AttackPathError("INVALID_SCENARIO", "; ".join(v.code for v in violations))
    if priors is None:
        priors = compute_values(scenario, config.init_config())
    return _Search(scenario, env, config, priors).run()


def backpropagate(path: list[SearchNode], config: SearchConfig, priors: Priors,
                  scenario: Scenario) -> list[dict]:
    """Refresh q-values along ``path`` (root first) after an execution.

    Each edge keeps a prior-weighted running mean of its observed values;
    failed edges stay at zero.
    """
    return _Search(scenario, None, config, priors).backpropagate(path)


def extract_trace(result: SearchResult) -> list[dict]:
    return [dict(e) for e in result.trace]


def trace_to_jsonl(trace: list[dict]) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in trace)


def tree_to_dot(result: SearchResult, label: Callable[[SearchNode], str] | None = None) -> str:
    """Graphviz rendering of the executed part of the search tree."""
    lines = ["digraph search {", "  node [shape=box fontsize=10];"]
    for n in result.nodes:
        if not n.executed:
            continue
        text = label(n) if label else (
            "root" if n.parent is None else
            f"{n.exploit_id}\\nq={n.q:.3f} n={n.visits}" + ("\\nFAILED" if n.failed else "")
        )
        style = ""
        if n.is_goal:
            style = ' style=filled fillcolor="#c9f2c7"'
        elif n.failed:
            style = ' style=filled fillcolor="#f4cccc"'
        lines.append(f'  n{n.index} [label="{text}"{style}];')
        if n.parent is not None:
            lines.append(f"  n{n.parent} -> n{n.index};")
    lines.append("}")
    return "\n".join(lines) + "\n"
