"""Planner comparison over generated scenarios.

Four variants run on identical scenarios and identically seeded
environments:

* ``mcts_init``: tree search with attack-graph priors;
* ``mcts_uniform``: the same search with every prior set to 0.5;
* ``greedy``: always the highest-prior action from the current state, no
  backtracking;
* ``random``: uniform over feasible actions that could still add a shell.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import oracle
from .errors import AttackPathError
from .generator import GeneratorConfig, generate_scenario
from .mcts import SearchConfig, SearchResult, UniformPriors, run_search, trace_to_jsonl
from .model import AttackState
from .scenario import Scenario, feasible_actions, goal_reached
from .sim_env import ExecutionOutcome, SimulatedEnvironment
from .value_init import ValueTable, compute_values

VARIANTS = ("mcts_init", "mcts_uniform", "greedy", "random")


def _walk(scenario: Scenario, env, config: SearchConfig, choose) -> SearchResult:
    """Shared loop for the single-trajectory baselines."""
    state = scenario.initial_state
    failed: set[str] = set()
    path = []
    executions, elapsed = 0, 0.0
    reason = "goal"
    while not goal_reached(state, scenario.goal):
        if executions >= config.max_executions:
            reason = "exhausted"
            break
        options = [a for a in feasible_actions(state, scenario)
                   if a.exploit.id not in failed
                   and any(not o.shells_gained <= state.shells for o in a.exploit.outcomes)]
        action = choose(state, options) if options else None
        if action is None:
            reason = "no_positive_value"
            break
        outcome: ExecutionOutcome = env.execute(action.exploit, state, action.plans)
        executions += 1
        elapsed += outcome.elapsed
        if outcome.success and outcome.shells_gained:
            state = state.union(outcome.shells_gained)
            failed.clear()
            path.append((action.exploit.id, action.plans, outcome))
        else:
            failed.add(action.exploit.id)
    return SearchResult(
        goal_reached=goal_reached(state, scenario.goal),
        best_path=path,
        executions_used=executions,
        termination_reason=reason,
        tree_stats={"node_count": len(path) + 1, "executed_nodes": len(path) + 1, "max_depth": len(path)},
        simulated_seconds=elapsed,
    )


def run_greedy(scenario: Scenario, env, config: SearchConfig, table: ValueTable | None = None) -> SearchResult:
    table = table or compute_values(scenario, config.init_config())

    def choose(state: AttackState, options):
        best, best_q = None, 0.0
        for a in options:
            q = table.action_value(state, a.exploit, config.horizon)
            if q > best_q:
                best, best_q = a, q
        return best

    return _walk(scenario, env, config, choose)


def run_random(scenario: Scenario, env, config: SearchConfig, seed: int = 0) -> SearchResult:
    rng = np.random.default_rng([seed, 0x5EED])
    return _walk(scenario, env, config, lambda state, options: options[int(rng.integers(len(options)))])


def run_variant(variant: str, scenario: Scenario, config: SearchConfig, latency_scale: float = 1.0) -> SearchResult:
    env = SimulatedEnvironment(scenario, seed=config.rng_seed, latency_scale=latency_scale)
    if variant == "mcts_init":
        return run_search(scenario, env, config)
    if variant == "mcts_uniform":
        return run_search(scenario, env, config, priors=UniformPriors(scenario))
    if variant == "greedy":
        return run_greedy(scenario, env, config)
    if variant == "random":
        return run_random(scenario, env, config, config.rng_seed)
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class SuiteConfig:
    seeds: tuple[int, ...] = tuple(range(10))
    budget: int = 20
    variants: tuple[str, ...] = VARIANTS
    generator: GeneratorConfig = GeneratorConfig()
    exploration_weight: float = 0.3
    gamma: float = 0.9
    horizon: int = 4
    latency_scale: float = 1.0
    workers: int = 1


@dataclass
class BenchmarkReport:
    rows: list[dict]
    summary: dict[str, dict] = field(default_factory=dict)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows)

    def to_table(self) -> str:
        head = f"{'variant':<14}{'success':>9}{'exec_to_goal':>14}{'sim_hours':>11}{'regret':>9}"
        lines = [head, "-" * len(head)]
        for v, s in self.summary.items():
            def fmt(x, spec):
                return format(x, spec) if x is not None else format("-", spec[0] + spec[1:].split(".")[0])
            lines.append(f"{v:<14}{s['success_rate']:>9.3f}{fmt(s['mean_executions_to_goal'], '>14.2f')}"
                         f"{s['mean_simulated_hours']:>11.2f}{fmt(s['mean_regret'], '>9.3f')}")
        return "\n".join(lines) + "\n"


def trace_digest(result: SearchResult) -> str:
    """SHA-256 over the search trace and the executed path."""
    steps = "".join(f"{eid}:{int(o.success)}\n" for eid, _, o in result.best_path)
    return hashlib.sha256((trace_to_jsonl(result.trace) + steps).encode()).hexdigest()


def _one(args) -> list[dict]:
    seed, suite = args
    scenario = generate_scenario(replace(suite.generator, seed=seed))
    try:
        full_value = oracle.expectimax_value(scenario, suite.gamma, suite.horizon)
    except AttackPathError:
        full_value = None
    rows = []
    for variant in suite.variants:
        config = SearchConfig(exploration_weight=suite.exploration_weight, gamma=suite.gamma,
                              horizon=suite.horizon, max_executions=suite.budget, rng_seed=seed)
        result = run_variant(variant, scenario, config, suite.latency_scale)
        realized = suite.gamma ** result.executions_used if result.goal_reached else 0.0
        rows.append({
            "seed": seed,
            "variant": variant,
            "success": result.goal_reached,
            "executions": result.executions_used,
            "path_length": len(result.best_path),
            "termination_reason": result.termination_reason,
            "simulated_hours": result.simulated_seconds / 3600.0,
            "regret": None if full_value is None else full_value - realized,
            "trace_digest": trace_digest(result),
        })
    return rows


def _summarise(rows: list[dict], variants) -> dict[str, dict]:
    out = {}
    for v in variants:
        mine = [r for r in rows if r["variant"] == v]
        wins = [r for r in mine if r["success"]]
        regrets = [r["regret"] for r in mine if r["regret"] is not None]
        out[v] = {
            "runs": len(mine),
            "success_rate": len(wins) / len(mine) if mine else 0.0,
            "mean_executions_to_goal": float(np.mean([r["executions"] for r in wins])) if wins else None,
            "mean_simulated_hours": float(np.mean([r["simulated_hours"] for r in mine])) if mine else 0.0,
            "mean_regret": float(np.mean(regrets)) if regrets else None,
        }
    return out


def run_benchmark(suite: SuiteConfig | None = None) -> BenchmarkReport:
    """Every variant on every seed. Output is independent of ``workers``."""
    suite = suite or SuiteConfig()
    tasks = [(seed, suite) for seed in suite.seeds]
    if suite.workers > 1:
        with ProcessPoolExecutor(max_workers=suite.workers) as pool:
            chunks = list(pool.map(_one, tasks, chunksize=max(1, len(tasks) // (4 * suite.workers))))
    else:
        chunks = [_one(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    return BenchmarkReport(rows, _summarise(rows, suite.variants))


def suite_to_dict(suite: SuiteConfig) -> dict:
    return asdict(suite)
