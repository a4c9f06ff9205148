import json

import pytest

from g2flow.cli import main
from g2flow.scenario import Scenario, ScenarioError, parse_scenario

TORUS = """[scenario]
system = torus
seed = 3
[grid]
n = 8
[initial]
recipe = double_curl
a_amplitude = 0.05
[time]
dt = 0.01
t_final = 0.05
sample_every = 2
[output]
snapshot_every = 2
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_suites(capsys):
    assert main(["check", "--list"]) == 0
    assert "red1" in capsys.readouterr().out
    assert main(["check", "su3g2-standard"]) == 0
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert lines and all(r["pass"] and r["residual"] == 0 for r in lines)


def test_failing_suite_exits_one():
    # the literal commutator records fail by design
    assert main(["check", "commutator"]) == 1


def test_usage_errors():
    assert main(["check", "nope"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["run"]) == 2


def test_run_writes_outputs_and_is_deterministic(tmp_path):
    path = write(tmp_path, TORUS)
    assert main(["run", path, "--output", str(tmp_path / "a")]) == 0
    assert main(["run", path, "--output", str(tmp_path / "b")]) == 0
    a, b = (tmp_path / "a" / "diag.csv").read_bytes(), (tmp_path / "b" / "diag.csv").read_bytes()
    assert a == b
    assert len(a.decode().splitlines()) == 1 + 4          # header, steps 0, 2, 4 and the final 5
    assert sorted(p.name for p in (tmp_path / "a").glob("snap_*")) == [
        "snap_000000.g2f", "snap_000002.g2f", "snap_000004.g2f", "snap_000005.g2f"]
    events = [json.loads(x) for x in (tmp_path / "a" / "report.jsonl").read_text().splitlines()]
    assert events[0]["seed"] == 3 and events[-1]["status"] == "ok"


def test_restart_from_snapshot(tmp_path, capsys):
    main(["run", write(tmp_path, TORUS), "--output", str(tmp_path / "a")])
    snap = tmp_path / "a" / "snap_000005.g2f"
    text = TORUS.replace("recipe = double_curl", f"recipe = snapshot\npath = {snap}")
    assert main(["run", write(tmp_path, text, "r.ini"), "--output", str(tmp_path / "r")]) == 0
    assert main(["info", str(snap)]) == 0
    assert '"kind": "torus3"' in capsys.readouterr().out


def test_print_config_roundtrip(tmp_path, capsys):
    assert main(["run", write(tmp_path, TORUS), "--print-config"]) == 0
    text = capsys.readouterr().out
    sc = parse_scenario(text)
    assert sc == parse_scenario(TORUS) and parse_scenario(sc.to_text()) == sc


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ScenarioError, match=":3:"):
        parse_scenario("[grid]\nn = 8\nbogus = 1\n", "x.ini")
    with pytest.raises(ScenarioError, match=":2:"):
        parse_scenario("[grid]\nn = eight\n", "x.ini")
    with pytest.raises(ScenarioError):
        Scenario(system="torus", recipe="su2")


def test_constraint_precondition(tmp_path):
    text = TORUS.replace("[output]", "[guards]\nconstraint_tol = 1e-30\n[output]")
    path = write(tmp_path, text)
    assert main(["run", path, "--output", str(tmp_path / "o")]) == 1
    assert main(["run", path, "--force", "--output", str(tmp_path / "o")]) == 0


def test_radial_guard_exit_code(tmp_path):
    text = "[scenario]\nsystem = radial\n[grid]\nr_min = 0.25\nr_max = 4.25\nm = 257\n" \
           "[initial]\nrecipe = radial_flat\n[time]\ndt = 0.001\nt_final = 0.5\nsample_every = 50\n"
    out = tmp_path / "rad"
    assert main(["run", write(tmp_path, text), "--output", str(out)]) == 3
    last = json.loads((out / "report.jsonl").read_text().splitlines()[-1])
    assert last["status"] == "guard"
    assert len((out / "diag.csv").read_text().splitlines()) > 2


def test_convergence_command(tmp_path, capsys):
    path = write(tmp_path, TORUS.replace("n = 8", "n = 16"))
    assert main(["convergence", path, "--sweep", "dt=4e-3,2e-3,1e-3", "--output", str(tmp_path / "c.csv")]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["metric"] == "wave" and abs(rec["slope"] - 2) < 0.3
    assert main(["convergence", path, "--sweep", "dt=1e-3"]) == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("G2FLOW_THREADS", "x")
    assert main(["check", "--list"]) == 2
    monkeypatch.setenv("G2FLOW_THREADS", "1")
    assert main(["check", "--list"]) == 0
