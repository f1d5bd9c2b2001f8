from __future__ import annotations

import pytest

from attackpath.connectivity import ConnectivityGraph
from attackpath.model import AttackState, ConnRequirement, ShellRef
from attackpath.scenario import Exploit, ExploitKind, GroundTruth, Scenario
from attackpath.sim_env import ExecutionOutcome

KALI = ShellRef.of("kali", "priv")
WEB_U = ShellRef.of("web", "unpriv")
WEB_P = ShellRef.of("web", "priv")
DB_P = ShellRef.of("db", "priv")


def make_tri_chain(p_true: float | None = None) -> Scenario:
    """kali -> web (unpriv) -> web (priv) -> db (priv), confidences 0.8 / 0.5 / 0.9."""
    graph = ConnectivityGraph.build(["kali", "web", "db"], [("kali", "web", 80), ("web", "db", 5432)])
    exploits = (
        Exploit.simple("E1", KALI, [WEB_U], 0.8, conn=[ConnRequirement.of("web", 80)]),
        Exploit.simple("E2", WEB_U, [WEB_P], 0.5, kind=ExploitKind.CODE_EXECUTION),
        Exploit.simple("E3", WEB_P, [DB_P], 0.9, conn=[ConnRequirement.of("db", 5432)]),
    )
    truth = None
    if p_true is not None:
        truth = {e.id: GroundTruth(p_true, latency=(0.0, 0.0)) for e in exploits}
    return Scenario(("kali", "web", "db"), graph, exploits, AttackState.of(KALI), AttackState.of(DB_P),
                    ground_truth=truth)


@pytest.fixture
def tri_chain() -> Scenario:
    return make_tri_chain()


class ScriptedEnv:
    """Environment that answers from a per-exploit script of success flags.

    Once an exploit's script runs out it always succeeds.
    """

    def __init__(self, scenario: Scenario, script: dict[str, list[bool]] | None = None):
        self.scenario = scenario
        self.script = {k: list(v) for k, v in (script or {}).items()}
        self.calls: list[tuple[str, AttackState]] = []

    def execute(self, exploit, state, plans=()):
        self.calls.append((exploit.id, state))
        queue = self.script.get(exploit.id, [])
        ok = queue.pop(0) if queue else True
        if not ok:
            return ExecutionOutcome(False)
        return ExecutionOutcome(True, exploit.outcomes[0].shells_gained - state.shells)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
