import io
import json
from importlib import resources

import pytest

from orchsess.cli import EXIT_ERROR_STATE, EXIT_NO, EXIT_OK, EXIT_STEP_LIMIT, EXIT_USAGE, main

CORPUS = resources.files("orchsess").joinpath("corpus")


def corpus(name):
    return str(CORPUS.joinpath(name))


def cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture
def pair(tmp_path):
    c = tmp_path / "c.ost"
    s = tmp_path / "s.ost"
    c.write_text("!Nat.?Bool\n")
    s.write_text("?Nat.!Bool\n")
    return str(c), str(s)


def test_comply_synthesizes(pair):
    code, out = cli("comply", *pair)
    assert code == EXIT_OK
    assert "compliant: yes" in out and "synth:    *.*.1" in out


def test_comply_against_named_orchestrator():
    r = corpus("running.ost")
    code, out = cli("comply", f"{r}:ClntSess", f"{r}:ProvSess", f"{r}:g")
    assert code == EXIT_OK and out.rstrip().endswith("is valid")


def test_comply_no(tmp_path, pair):
    bad = tmp_path / "bad.ost"
    bad.write_text("!Nat\n")
    code, out = cli("comply", pair[0], str(bad))
    assert code == EXIT_NO and "compliant: no" in out


def test_synth_modes():
    p = corpus("priority.ost")
    code, out = cli("synth", f"{p}:ClientSess", f"{p}:ProvSess")
    assert code == EXIT_OK and "rent.ld." in out
    code, out = cli("synth", "--mode", "all", f"{p}:ClientSess", f"{p}:ProvSess")
    assert "(+)" in out


def test_unknown_let_name():
    p = corpus("priority.ost")
    assert cli("synth", f"{p}:Nope", f"{p}:ProvSess")[0] == EXIT_USAGE


def test_typecheck_ok_and_components():
    code, out = cli("typecheck", corpus("running.ost"))
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("[0] ") and lines[-1] == "∅"


def test_typecheck_diagnostic():
    code, out = cli("typecheck", corpus("stuck_outputs.ost"))
    assert code == EXIT_NO
    assert "stuck_outputs.ost:2:1: ComplianceFailure [same-direction]:" in out


def test_run_deadlock_exit_code():
    code, out = cli("run", corpus("cleanup.ost"), "--cleanup", "false")
    assert code == EXIT_ERROR_STATE
    assert "classification: ComplianceDependentDeadlock(c0)" in out


def test_run_json_trace(tmp_path):
    t = tmp_path / "t.json"
    code, out = cli("run", corpus("cleanup.ost"), "--output", "json", "--trace", str(t))
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc == json.loads(t.read_text())
    assert doc["version"] == 1 and doc["cleanup"] is True
    assert [s["step"] for s in doc["steps"]] == list(range(len(doc["steps"])))
    assert {"rule", "channel", "label", "state", "state_hash"} <= set(doc["steps"][0])
    assert doc["final"]["errors"] == [{"kind": "NotAnError", "channel": None}]


def test_run_step_limit():
    code, out = cli("run", corpus("running.ost"), "--step-limit", "3")
    assert code == EXIT_STEP_LIMIT and "step limit 3 reached" in out


def test_run_bad_replay():
    assert cli("run", corpus("cleanup.ost"), "--replay", "OrchComm")[0] == EXIT_USAGE


def test_env_file_tables(tmp_path):
    env = tmp_path / "env.json"
    env.write_text(json.dumps({"wantsToBuy": [[[], True]], "available": [[["zootropolis"], True]]}))
    code, out = cli("run", corpus("running.ost"), "--env-file", str(env))
    assert code == EXIT_OK
    assert "OrchSel c0 buy" in out and "OrchSel c0 ok" in out
    # without the table both conditions stay symbolic and the first branch taken is else
    assert "OrchSel c0 rent" in cli("run", corpus("running.ost"))[1]


def test_env_file_errors(tmp_path):
    env = tmp_path / "env.json"
    env.write_text("[1, 2]")
    assert cli("run", corpus("cleanup.ost"), "--env-file", str(env))[0] == EXIT_USAGE
    env.write_text(json.dumps({"mystery": [[[1], 2]]}))
    assert cli("run", corpus("cleanup.ost"), "--env-file", str(env))[0] == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert cli("run", str(tmp_path / "missing.ost"))[0] == EXIT_USAGE
    assert cli("bogus")[0] == EXIT_USAGE
    bad = tmp_path / "bad.ost"
    bad.write_text("k!<1> junk\n")
    assert cli("run", str(bad))[0] == EXIT_USAGE


def test_fuzz():
    code, out = cli("fuzz", "synth", "--n", "30")
    assert code == EXIT_OK and out.startswith("synth: 30 cases, 0 failures")
