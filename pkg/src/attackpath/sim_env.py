"""Simulated exploit execution.

Stands in for running exploits against a real network. Success follows the
scenario's ground-truth probability rather than the planner's confidence
estimate, so benchmarks can control how far the two disagree.

Every call to :meth:`SimulatedEnvironment.execute` draws from its own
generator seeded with ``(seed, call index)``; results depend on nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .connectivity import verify_relay_plan
from .errors import AttackPathError
from .model import AttackState, ShellRef
from .scenario import Exploit, GroundTruth, Scenario, feasible_actions, goal_reached

__all__ = [
    "ExecutionOutcome", "SimulatedEnvironment", "NoiseModel", "derive_confidence",
    "with_confidences", "replay", "GroundTruth",
]


@dataclass(frozen=True)
class ExecutionOutcome:
    success: bool
    shells_gained: frozenset[ShellRef] = frozenset()
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "shells_gained": [str(s) for s in sorted(self.shells_gained)],
            "elapsed": self.elapsed,
        }


@dataclass
class SimulatedEnvironment:
    """One environment per search; holds the draw counter and virtual clock.

    ``latency_scale=0`` turns execution time off, which is what the tests use.
    """

    scenario: Scenario
    seed: int = 0
    latency_scale: float = 1.0
    draws: int = 0
    clock: float = 0.0
    history: list[tuple[str, ExecutionOutcome]] = field(default_factory=list)

    def _check(self, exploit: Exploit, state: AttackState, plans) -> None:
        if not exploit.exec <= state.shells:
            raise AttackPathError("PRECONDITION_VIOLATION", f"{exploit.id}: required shells not held")
        reqs = sorted(exploit.conn)
        if len(plans) != len(reqs):
            raise AttackPathError("PRECONDITION_VIOLATION", f"{exploit.id}: expected {len(reqs)} relay plans")
        sc = self.scenario
        for req, plan in zip(reqs, plans):
            if plan.requirement != req or plan.terminus != exploit.executing_shell.host:
                raise AttackPathError("PRECONDITION_VIOLATION", f"{exploit.id}: relay plan for the wrong requirement")
            if not verify_relay_plan(sc.connectivity, state, plan, sc.relay_port):
                raise AttackPathError("PRECONDITION_VIOLATION", f"{exploit.id}: relay plan does not hold")

    def execute(self, exploit: Exploit, state: AttackState, plans=()) -> ExecutionOutcome:
        self._check(exploit, state, tuple(plans))
        truth = self.scenario.truth(exploit.id)
        rng = np.random.default_rng([self.seed, self.draws])
        self.draws += 1
        u_success, u_outcome, u_latency, u_flaky = rng.random(4)

        mean, jitter = truth.latency
        elapsed = max(0.0, mean + jitter * (2.0 * u_latency - 1.0)) * self.latency_scale
        self.clock += elapsed

        success = bool(u_success < truth.p_true)
        if success and truth.flaky_session > 0 and u_flaky < truth.flaky_session:
            success = False
        gained: frozenset[ShellRef] = frozenset()
        if success:
            weights = truth.outcome_weights or tuple(o.weight for o in exploit.outcomes)
            cum = np.cumsum(weights)
            idx = min(int(np.searchsorted(cum, u_outcome * cum[-1], side="right")), len(weights) - 1)
            gained = exploit.outcomes[idx].shells_gained - state.shells
        result = ExecutionOutcome(success, gained, elapsed)
        self.history.append((exploit.id, result))
        return result


@dataclass(frozen=True)
class NoiseModel:
    """How confidence estimates deviate from ground truth.

    ``exact`` copies ``p_true``; ``uniform`` adds U(-eps, eps); ``optimistic``
    adds ``+eps``. Results are clamped to [0, 1].
    """

    kind: str = "exact"
    eps: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        kind, _, eps = text.partition(":")
        if kind not in ("exact", "uniform", "optimistic"):
            raise ValueError(f"unknown noise model {kind!r}")
        return cls(kind, float(eps) if eps else 0.0)


def derive_confidence(ground_truth: Mapping[str, GroundTruth], noise: NoiseModel,
                      rng: np.random.Generator | None = None) -> dict[str, float]:
    rng = rng if rng is not None else np.random.default_rng(0)
    out = {}
    for eid in sorted(ground_truth):
        p = ground_truth[eid].p_true
        if noise.kind == "uniform":
            p = p + rng.uniform(-noise.eps, noise.eps)
        elif noise.kind == "optimistic":
            p = p + noise.eps
        out[eid] = float(min(1.0, max(0.0, p)))
    return out


def with_confidences(scenario: Scenario, confidences: Mapping[str, float]) -> Scenario:
    exploits = tuple(replace(e, confidence=confidences.get(e.id, e.confidence)) for e in scenario.exploits)
    return scenario.replace(exploits=exploits)


def replay(scenario: Scenario, path: list[str], trials: int, seed: int = 0,
           latency_scale: float = 1.0) -> dict:
    """Run a fixed exploit sequence ``trials`` times; stop a trial at its first failure."""
    env = SimulatedEnvironment(scenario, seed=seed, latency_scale=latency_scale)
    wins, steps, seconds = 0, [], []
    for _ in range(trials):
        state = scenario.initial_state
        start = env.clock
        done = 0
        for eid in path:
            action = next((a for a in feasible_actions(state, scenario) if a.exploit.id == eid), None)
            if action is None:
                break
            out = env.execute(action.exploit, state, action.plans)
            if not out.success:
                break
            state = state.union(out.shells_gained)
            done += 1
        wins += goal_reached(state, scenario.goal)
        steps.append(done)
        seconds.append(env.clock - start)
    return {
        "trials": trials,
        "successes": wins,
        "success_rate": wins / trials if trials else 0.0,
        "mean_steps_completed": float(np.mean(steps)) if steps else 0.0,
        "mean_simulated_hours": float(np.mean(seconds)) / 3600.0 if seconds else 0.0,
    }
