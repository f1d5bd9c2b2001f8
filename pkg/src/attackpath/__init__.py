"""Attack-path planning over sets of held shells.

Exploits grow the attacker's state; connectivity and relay chains decide
what can run; a discounted value table seeds a Monte Carlo tree search that
executes against a simulated environment.
"""

from .connectivity import ConnectivityGraph, RelayPlan, plan_relay_chain, verify_relay_plan
from .errors import AttackPathError, SearchAborted
from .generator import GeneratorConfig, generate_scenario, small_config
from .mcts import SearchConfig, SearchResult, run_search
from .model import AttackState, ConnRequirement, ShellRef
from .scenario import Exploit, GroundTruth, Outcome, Scenario, feasible_actions, load_scenario, validate_scenario
from .sim_env import SimulatedEnvironment
from .value_init import InitConfig, ValueTable, compute_values

__version__ = "0.1.0"

__all__ = [
    "AttackPathError", "AttackState", "ConnRequirement", "ConnectivityGraph", "Exploit", "GeneratorConfig",
    "GroundTruth", "InitConfig", "Outcome", "RelayPlan", "Scenario", "SearchAborted", "SearchConfig",
    "SearchResult", "ShellRef", "SimulatedEnvironment", "ValueTable", "compute_values", "feasible_actions",
    "generate_scenario", "load_scenario", "plan_relay_chain", "run_search", "small_config",
    "validate_scenario", "verify_relay_plan",
]
