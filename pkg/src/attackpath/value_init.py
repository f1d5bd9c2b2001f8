"""Finite-horizon action values over the attack graph.

Values seed the tree search instead of rollouts::

    V(s, d) = goal_value                      if goal ⊆ s
            = 0                               if d == 0
            = max_a Q(s, a, d)                otherwise (0 when no action)
    Q(s, a, d) = p_a * gamma * max_o V(s ∪ o, d - 1)

There is no failure continuation: a failed exploit leaves the state as it
was, so it adds nothing the parent does not already offer. For an exploit
with several possible outcomes the best outcome counts, with the confidence
read as the chance that at least one of them lands.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AttackPathError
from .model import AttackState
from .scenario import Exploit, Scenario, feasible_actions, goal_reached

DEFAULT_NODE_CAP = 200_000


@dataclass(frozen=True)
class InitConfig:
    gamma: float = 0.9
    horizon: int = 4
    goal_value: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.goal_value <= 0:
            raise ValueError(f"goal_value must be positive, got {self.goal_value}")


class ValueTable:
    """Memoised V and Q, keyed by (state, remaining depth).

    Entries never change once computed. States outside the initial sweep are
    filled in on first lookup, which is how the search obtains priors for
    states it discovers during execution.
    """

    def __init__(self, scenario: Scenario, config: InitConfig, node_cap: int = DEFAULT_NODE_CAP):
        self.scenario = scenario
        self.config = config
        self.node_cap = node_cap
        self.values: dict[tuple[AttackState, int], float] = {}
        self.qvalues: dict[tuple[AttackState, str, int], float] = {}

    def value(self, state: AttackState, depth: int) -> float:
        key = (state, depth)
        v = self.values.get(key)
        if v is not None:
            return v
        if goal_reached(state, self.scenario.goal):
            v = self.config.goal_value
        elif depth <= 0:
            v = 0.0
        else:
            v = 0.0
            for action in feasible_actions(state, self.scenario):
                v = max(v, self.action_value(state, action.exploit, depth))
        if len(self.values) >= self.node_cap:
            raise AttackPathError("STATE_CAP_EXCEEDED", f"more than {self.node_cap} (state, depth) entries")
        self.values[key] = v
        return v

    def action_value(self, state: AttackState, exploit: Exploit, depth: int) -> float:
        key = (state, exploit.id, depth)
        q = self.qvalues.get(key)
        if q is None:
            best = max(self.value(state.union(o.shells_gained), depth - 1) for o in exploit.outcomes)
            q = self.qvalues[key] = exploit.confidence * self.config.gamma * best
        return q

    def q(self, state: AttackState, exploit_id: str, depth: int) -> float:
        """Q of a feasible exploit; raises ``INFEASIBLE_ACTION`` otherwise."""
        if depth < 1:
            raise ValueError("depth must be >= 1")
        for action in feasible_actions(state, self.scenario):
            if action.exploit.id == exploit_id:
                return self.action_value(state, action.exploit, depth)
        raise AttackPathError("INFEASIBLE_ACTION", f"{exploit_id} is not feasible in {state!r}")

    def root_values(self) -> list[float]:
        s0 = self.scenario.initial_state
        return [self.value(s0, d) for d in range(self.config.horizon + 1)]


def q_value(state: AttackState, exploit: Exploit, depth_remaining: int, config: InitConfig,
            scenario: Scenario, table: ValueTable | None = None) -> float:
    table = table or ValueTable(scenario, config)
    return table.q(state, exploit.id, depth_remaining)


def compute_values(scenario: Scenario, config: InitConfig | None = None,
                   node_cap: int = DEFAULT_NODE_CAP) -> ValueTable:
    """Fill the table for every state reachable from the initial state within the horizon."""
    table = ValueTable(scenario, config or InitConfig(), node_cap)
    table.value(scenario.initial_state, table.config.horizon)
    return table
