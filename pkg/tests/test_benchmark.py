from dataclasses import replace

from attackpath.benchmark import VARIANTS, SuiteConfig, run_benchmark, run_greedy, run_random
from attackpath.generator import small_config
from attackpath.mcts import SearchConfig
from attackpath.sim_env import SimulatedEnvironment

from .conftest import ScriptedEnv, make_tri_chain

SMALL = SuiteConfig(seeds=tuple(range(10)), budget=20, generator=small_config(), latency_scale=0.0)


def test_rows_per_seed_and_variant():
    report = run_benchmark(SMALL)
    assert len(report.rows) == 40
    assert {r["variant"] for r in report.rows} == set(VARIANTS)
    assert all(r["executions"] <= 20 for r in report.rows)
    assert all(r["regret"] is not None for r in report.rows)
    assert set(report.summary) == set(VARIANTS)
    assert "mcts_init" in report.to_table()


def test_reproducible_and_worker_independent():
    one = run_benchmark(SMALL)
    assert one.to_jsonl() == run_benchmark(SMALL).to_jsonl()
    assert one.to_jsonl() == run_benchmark(replace(SMALL, workers=2)).to_jsonl()


def test_regret_is_none_beyond_oracle_cap():
    report = run_benchmark(SuiteConfig(seeds=(0,), variants=("greedy",), latency_scale=0.0))
    assert report.rows[0]["regret"] is None
    assert report.summary["greedy"]["mean_regret"] is None
    assert "-" in report.to_table()


def test_greedy_follows_chain():
    sc = make_tri_chain(p_true=1.0)
    result = run_greedy(sc, ScriptedEnv(sc), SearchConfig())
    assert result.goal_reached and result.executions_used == 3


def test_greedy_gives_up_after_failure_without_alternative():
    sc = make_tri_chain()
    env = ScriptedEnv(sc, {"E1": [False]})
    result = run_greedy(sc, env, SearchConfig())
    assert not result.goal_reached and result.termination_reason == "no_positive_value"
    assert len(env.calls) == 1


def test_random_is_seeded():
    sc = make_tri_chain(p_true=0.6)
    runs = [run_random(sc, SimulatedEnvironment(sc, seed=1), SearchConfig(), seed=3) for _ in range(2)]
    assert runs[0].executions_used == runs[1].executions_used
    assert runs[0].goal_reached == runs[1].goal_reached
