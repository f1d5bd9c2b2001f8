import json

import pytest

from attackpath.cli import main
from attackpath.scenario import dumps_scenario

from .conftest import make_tri_chain


@pytest.fixture
def tri_file(tmp_path):
    path = tmp_path / "tri.json"
    path.write_text(dumps_scenario(make_tri_chain(p_true=1.0)))
    return path


def test_validate_ok(tri_file, tmp_path, capsys):
    dot = tmp_path / "g.dot"
    assert main(["validate", str(tri_file), "--emit-dot", str(dot)]) == 0
    assert capsys.readouterr().out == ""
    assert dot.read_text().startswith("digraph")


def test_validate_unknown_field(tri_file, capsys):
    doc = json.loads(tri_file.read_text())
    doc["surprise"] = True
    tri_file.write_text(json.dumps(doc))
    assert main(["validate", str(tri_file)]) == 2
    codes = [json.loads(line)["code"] for line in capsys.readouterr().out.splitlines()]
    assert "UNKNOWN_FIELD" in codes


def test_plan_rejects_invalid(tri_file):
    doc = json.loads(tri_file.read_text())
    doc["exploits"][0]["confidence"] = 3
    tri_file.write_text(json.dumps(doc))
    assert main(["plan", str(tri_file)]) == 2


def test_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["--seed", "7", "generate", "--output", str(a)]) == 0
    assert main(["generate", "--seed", "7", "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["hosts"]) == 47
    assert main(["validate", str(a)]) == 0


def test_init_values(tri_file, capsys):
    assert main(["init-values", str(tri_file)]) == 0
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert lines[4] == {"depth": 4, "value": pytest.approx(0.26244)}
    assert lines[5]["exploit"] == "E1"


def test_plan(tri_file, tmp_path, capsys):
    dot = tmp_path / "tree.dot"
    assert main(["plan", str(tri_file), "--budget", "10", "--emit-dot", str(dot)]) == 0
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    result = lines[-1]["result"]
    assert result["goal_reached"] and result["termination_reason"] == "goal"
    assert [p["exploit"] for p in result["best_path"]] == ["E1", "E2", "E3"]
    assert {e["phase"] for e in lines[:-1]} >= {"select", "execute", "backpropagate", "expand"}
    assert "digraph" in dot.read_text()


def test_simulate(tri_file, capsys):
    assert main(["simulate", str(tri_file), "--path", "E1,E2,E3", "--trials", "5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["success_rate"] == 1.0 and out["path"] == ["E1", "E2", "E3"]


def test_oracle(tri_file, capsys):
    assert main(["oracle", str(tri_file)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["best_path"] == ["E1", "E2", "E3"]
    assert out["init_value"] == pytest.approx(0.26244)


def test_oracle_cap(tmp_path):
    path = tmp_path / "big.json"
    assert main(["generate", "--seed", "1", "--output", str(path)]) == 0
    assert main(["oracle", str(path)]) == 3


def test_benchmark(tmp_path, capsys):
    out = tmp_path / "rows.jsonl"
    assert main(["benchmark", "--small", "--seeds", "3", "--no-latency", "--output", str(out)]) == 0
    assert "mcts_init" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 12
