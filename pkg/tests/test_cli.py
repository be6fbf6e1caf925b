import json
import subprocess
import sys

import pytest

from bugnav.cli import FIXTURES, main


def cli(*args):
    try:
        return main([str(a) for a in args])
    except SystemExit as exc:  # argparse usage errors
        return exc.code


def test_run_success_writes_outputs(tmp_path, capsys):
    out, trace, svg = tmp_path / "r.json", tmp_path / "t.csv", tmp_path / "f.svg"
    code = cli("run", "--env", "env2.json", "--variant", "bug2", "--sensor", "laser",
               "--out", out, "--trace", trace, "--svg", svg)
    assert code == 0
    assert capsys.readouterr().out.startswith("Success")
    assert json.loads(out.read_text())["outcome"] == "Success"
    assert trace.read_text().startswith("tick,x,y,theta,mode\n")
    assert svg.read_text().startswith("<svg")
    # no temporary files left behind
    assert sorted(p.name for p in tmp_path.iterdir()) == ["f.svg", "r.json", "t.csv"]


def test_run_failure_exit():
    assert cli("run", "--env", "env1.json", "--variant", "bug1", "--sensor", "laser") == 1


def test_run_timeout_exit():
    assert cli("run", "--env", "env2", "--variant", "bug2", "--sensor", "laser", "--max-ticks", 3) == 2


def test_run_max_ticks_from_environment(monkeypatch):
    monkeypatch.setenv("BUGNAV_MAX_TICKS", "3")
    assert cli("run", "--env", "env2", "--variant", "bug2", "--sensor", "laser") == 2
    monkeypatch.setenv("BUGNAV_MAX_TICKS", "nope")
    assert cli("run", "--env", "env2", "--variant", "bug2", "--sensor", "laser") == 64


def test_run_scan_requirement(capsys):
    assert cli("run", "--env", "env2", "--variant", "tangentbug", "--sensor", "tactile") == 64
    assert "variant requires distance sensing" in capsys.readouterr().err


@pytest.mark.parametrize(
    "args",
    [
        ["run", "--env", "env2", "--variant", "bug9", "--sensor", "laser"],
        ["run", "--env", "env2", "--variant", "bug2"],
        ["run", "--env", "env2", "--variant", "bug2", "--sensor", "laser", "--max-ticks", "0"],
        ["run", "--env", "missing.json", "--variant", "bug2", "--sensor", "laser"],
        ["frobnicate"],
        [],
        ["compare", "--variants", "bug2,nope", "--out", "x.tsv"],
        ["compare", "--envs", "/nonexistent", "--out", "x.tsv"],
        ["oracle", "--env", "env2", "--cell", "-1"],
    ],
)
def test_usage_errors_exit_64(args):
    assert cli(*args) == 64


def test_run_random_world(capsys):
    code = cli("run", "--random-world", 4, "--seed", 3, "--variant", "bug2", "--sensor", "laser")
    assert code in (0, 1)


def test_compare_defaults(tmp_path, capsys):
    out = tmp_path / "table.tsv"
    assert cli("compare", "--out", out, "--jobs", 4) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 42
    cells = [l.split("\t") for l in lines[1:]]
    errors = [c for c in cells if c[3] == "error"]
    assert len(errors) == 6
    assert {(c[0], c[1]) for c in errors} == {("distbug", "ir"), ("tangentbug", "ir")}
    assert all(c[3] == "Failure" for c in cells if c[2] == "env1" and c[3] != "error")
    again = tmp_path / "again.tsv"
    assert cli("compare", "--out", again, "--jobs", 1) == 0
    assert again.read_bytes() == out.read_bytes()


def test_compare_single_variant_single_env(tmp_path):
    envs = tmp_path / "envs"
    envs.mkdir()
    (envs / "env2.json").write_bytes((FIXTURES / "env2.json").read_bytes())
    out = tmp_path / "t.tsv"
    assert cli("compare", "--envs", envs, "--variants", "bug2", "--out", out, "--jobs", 1) == 0
    rows = out.read_text().splitlines()[1:]
    assert [r.split("\t")[1] for r in rows] == ["laser", "ir"]


def test_compare_bad_scenario_is_an_error_row(tmp_path):
    envs = tmp_path / "envs"
    envs.mkdir()
    (envs / "broken.json").write_text('{"start": [0, 0]}')
    out = tmp_path / "t.tsv"
    assert cli("compare", "--envs", envs, "--variants", "bug2", "--sensors", "laser", "--out", out) == 0
    assert out.read_text().splitlines()[1].split("\t")[3] == "error"


@pytest.mark.parametrize("env, code, word", [("env1.json", 1, "unreachable"), ("env2.json", 0, "reachable"), ("empty.json", 0, "reachable")])
def test_oracle(env, code, word, capsys):
    assert cli("oracle", "--env", env) == code
    assert capsys.readouterr().out.strip() == word


def test_oracle_blocked_endpoint(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({
        "start": [1, 1], "goal": [5, 5], "err": 0.2, "bounds": [0, 0, 10, 10],
        "obstacles": [[[4.5, 4.5], [5.5, 4.5], [5.5, 5.5], [4.5, 5.5]]],
    }))
    assert cli("oracle", "--env", p) == 64


def test_validate(tmp_path, capsys):
    for name in ("env1", "env2", "env3", "empty", "disc"):
        assert cli("validate", "--env", name) == 0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"start": [1, 1], "goal": [5, 5], "err": 0.2, "bounds": [0, 0, 10, 10],
                             "obstacles": [], "sensor": {"beam_count": 3}}))
    assert cli("validate", "--env", p) == 64
    assert "invalid" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bugnav", "oracle", "--env", "env2"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "reachable"
