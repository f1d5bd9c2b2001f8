from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attackpath import oracle
from attackpath.errors import AttackPathError
from attackpath.generator import generate_scenario, small_config
from attackpath.model import AttackState
from attackpath.scenario import Exploit, Outcome, Scenario
from attackpath.value_init import InitConfig, ValueTable, compute_values, q_value

from .conftest import DB_P, KALI, WEB_P, WEB_U

# V(s0, 4) for the tri-chain, first produced by oracle.brute_force_value and
# matching the hand expansion 0.8 * 0.9 * (0.5 * 0.9 * (0.9 * 0.9 * 1)).
TRI_CHAIN_V = 0.26244


def test_defaults():
    cfg = InitConfig()
    assert (cfg.gamma, cfg.horizon, cfg.goal_value) == (0.9, 4, 1.0)
    with pytest.raises(ValueError):
        InitConfig(gamma=0.0)
    with pytest.raises(ValueError):
        InitConfig(horizon=0)


def test_tri_chain_value(tri_chain):
    assert oracle.brute_force_value(tri_chain, 0.9, 4) == pytest.approx(TRI_CHAIN_V, abs=1e-12)
    table = compute_values(tri_chain, InitConfig())
    assert table.value(tri_chain.initial_state, 4) == pytest.approx(TRI_CHAIN_V, abs=1e-9)


def test_tri_chain_shorter_horizons(tri_chain):
    # three steps needed: nothing positive below depth 3
    table = compute_values(tri_chain)
    assert table.root_values() == pytest.approx([0, 0, 0, TRI_CHAIN_V, TRI_CHAIN_V], abs=1e-12)


def test_zero_confidence_gives_zero_q(tri_chain):
    e1 = replace(tri_chain.exploits[0], confidence=0.0)
    sc = tri_chain.replace(exploits=(e1, *tri_chain.exploits[1:]))
    assert q_value(sc.initial_state, e1, 4, InitConfig(), sc) == 0.0


def test_one_step_to_goal(tri_chain):
    state = AttackState.of(KALI, WEB_U, WEB_P)
    e3 = tri_chain.exploits[2]
    assert q_value(state, e3, 1, InitConfig(), tri_chain) == pytest.approx(0.81, abs=1e-12)


def test_multi_outcome_takes_max(tri_chain):
    # outcomes reach states of value 0.5 and 0.2 at the next depth
    helper_a = Exploit.simple("HA", WEB_P, [DB_P], 0.5 / 0.9)
    helper_b = Exploit.simple("HB", WEB_U, [DB_P], 0.2 / 0.9)
    multi = Exploit("M", frozenset({KALI}), KALI, frozenset(),
                    (Outcome(frozenset({WEB_P}), 0.3), Outcome(frozenset({WEB_U}), 0.7)), 0.8)
    sc = tri_chain.replace(exploits=(helper_a, helper_b, multi))
    table = ValueTable(sc, InitConfig())
    assert table.value(AttackState.of(KALI, WEB_P), 1) == pytest.approx(0.5)
    assert table.value(AttackState.of(KALI, WEB_U), 1) == pytest.approx(0.2)
    assert table.q(sc.initial_state, "M", 2) == pytest.approx(0.8 * 0.9 * 0.5)


def test_goal_already_held(tri_chain):
    sc = tri_chain.replace(goal=AttackState.of(KALI))
    assert compute_values(sc).root_values() == [1.0] * 5


def test_empty_catalog(tri_chain):
    sc = tri_chain.replace(exploits=())
    assert compute_values(sc).root_values() == [0.0] * 5


def test_infeasible_action(tri_chain):
    with pytest.raises(AttackPathError) as err:
        q_value(tri_chain.initial_state, tri_chain.exploits[2], 4, InitConfig(), tri_chain)
    assert err.value.code == "INFEASIBLE_ACTION"


def test_state_cap(tri_chain):
    with pytest.raises(AttackPathError) as err:
        compute_values(tri_chain, node_cap=2)
    assert err.value.code == "STATE_CAP_EXCEEDED"


def _all_states(table: ValueTable):
    return {s for s, _ in table.values}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_value_bounds_and_depth_monotone(seed):
    sc = generate_scenario(small_config(seed))
    table = compute_values(sc)
    for (state, d), v in list(table.values.items()):
        assert 0.0 <= v <= 1.0
        if d == 0:
            assert v in (0.0, 1.0)
        if d < 4:
            assert table.value(state, d + 1) >= v - 1e-15
    assert all(0.0 <= q <= 1.0 for q in table.qvalues.values())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 7), st.floats(0.0, 1.0))
def test_value_monotone_in_confidence(seed, which, bump):
    sc = generate_scenario(small_config(seed))
    exploits = list(sc.exploits)
    i = which % len(exploits)
    raised = min(1.0, exploits[i].confidence + bump)
    exploits[i] = replace(exploits[i], confidence=raised)
    higher = sc.replace(exploits=tuple(exploits))
    base = compute_values(sc).value(sc.initial_state, 4)
    assert compute_values(higher).value(sc.initial_state, 4) >= base - 1e-15


def test_shorter_path_preferred():
    from attackpath.connectivity import ConnectivityGraph

    # two routes to db with equal per-step confidence: one step vs two steps
    g = ConnectivityGraph.build(["kali", "web", "db"], [])
    short = Exploit.simple("A-short", KALI, [DB_P], 0.7)
    long1 = Exploit.simple("B-long1", KALI, [WEB_U], 0.7)
    long2 = Exploit.simple("B-long2", WEB_U, [DB_P], 0.7)
    sc = Scenario(("kali", "web", "db"), g, (short, long1, long2), AttackState.of(KALI), AttackState.of(DB_P))
    table = compute_values(sc)
    assert table.q(sc.initial_state, "A-short", 4) >= table.q(sc.initial_state, "B-long1", 4)


@pytest.mark.parametrize("seed", range(40))
def test_agrees_with_oracle(seed):
    sc = generate_scenario(small_config(seed))
    assert compute_values(sc).value(sc.initial_state, 4) == pytest.approx(
        oracle.brute_force_value(sc, 0.9, 4), abs=1e-9)
