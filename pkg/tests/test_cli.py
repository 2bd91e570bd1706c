import json
import subprocess
import sys

import pytest

from narrplan.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_canonical_and_verify(tmp_path, capsys):
    path = tmp_path / "sa.json"
    assert run(capsys, "canonical", "secret_agent", "--out", str(path))[0] == 0
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0
    assert json.loads(out) == {"task": "secret_agent", "outcome": "Solved", "nodes": json.loads(out)["nodes"],
                               "length": 7}


def test_verify_exit_code_when_budget_runs_out(capsys):
    code, out, _ = run(capsys, "verify", "aladdin", "--max-nodes", "10")
    assert code == 1 and json.loads(out)["outcome"] == "BudgetExceeded"


def test_render(capsys):
    code, out, _ = run(capsys, "render", "western", "--mode", "one_off")
    assert code == 0 and "## Conflict" in out


def test_solve_then_validate(tmp_path, capsys):
    plan = tmp_path / "plan.txt"
    code, out, _ = run(capsys, "solve", "aladdin", "--out", str(plan))
    assert code == 0 and len(out.splitlines()) == 12
    code, out, _ = run(capsys, "validate", "aladdin", str(plan))
    assert code == 0 and json.loads(out)["verdict"] == "accepted"
    lines = plan.read_text().splitlines()
    plan.write_text("\n".join(lines[1:]) + "\n")
    code, out, _ = run(capsys, "validate", "aladdin", str(plan))
    assert code == 1 and json.loads(out)["verdict"] == "rejected"


def test_validate_json_plan(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps([{"action": "move(agent, cell_0_0, cell_0_1)"}]))
    code, out, _ = run(capsys, "validate", "secret_agent", str(plan))
    assert code == 1 and json.loads(out)["violations"][0]["code"] == "goal_unmet"


def test_gen(tmp_path, capsys):
    out_dir = tmp_path / "batch"
    code, out, _ = run(capsys, "gen", "--params", '{"domain": "secret_agent", "n": 4}',
                       "--params", '{"domain": "western", "m": 5, "n_adventurers": 2}',
                       "--count", "2", "--seed", "3", "--out", str(out_dir))
    assert code == 0
    assert len(list(out_dir.glob("0*.json"))) == 4
    assert "wrote 4 tasks" in out
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert [b["retained"] for b in manifest["batches"]] == [2, 2]


def test_gen_shortfall_exit_code(tmp_path, capsys):
    code, _, _ = run(capsys, "gen", "--params", '{"domain": "secret_agent", "n": 2, "obstacle_density": 0.99}',
                     "--count", "1", "--max-draws", "2", "--out", str(tmp_path))
    assert code == 3


def test_run_and_report(tmp_path, capsys):
    records = tmp_path / "runs.jsonl"
    code, out, _ = run(capsys, "run", "--task", "secret_agent", "--task", "western",
                       "--agent", "oracle", "--attempts", "2", "--out", str(records))
    assert code == 0 and "2/2" in out
    summary = tmp_path / "summary.json"
    code, out, _ = run(capsys, "report", str(records), "--json", str(summary))
    assert code == 0 and "2/2" in out
    assert {r["domain"] for r in json.loads(summary.read_text())} == {"secret_agent", "western"}


def test_run_with_config_and_replay(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"agent": "replay", "prompt_mode": "calibrated", "attempts": 1}))
    replies = tmp_path / "replies.json"
    replies.write_text(json.dumps(["move(agent, cell_0_0, cell_1_1)"] * 3))
    code, out, _ = run(capsys, "run", "--task", "secret_agent", "--config", str(config), "--replay", str(replies))
    assert code == 0 and "0/1" in out


@pytest.mark.parametrize("argv", [
    ["verify", "missing.json"],
    ["gen", "--params", "{not json", "--out", "x"],
    ["gen", "--params", '{"domain": "noir"}', "--out", "x"],
    ["run", "--task", "secret_agent", "--agent", "wizard"],
])
def test_errors_exit_2(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "narrplan.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("gen", "verify", "validate", "solve", "run", "report"):
        assert cmd in proc.stdout
