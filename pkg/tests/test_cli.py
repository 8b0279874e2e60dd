import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from adapsca import cli

SMALL = ["--nodes", "30", "--anchor-ratio", "0.2", "--range", "40", "--runs", "2",
         "--max-iters", "20", "--n-particles", "10", "-q"]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    assert cli.main([*argv, "--out", str(out)]) == 0
    return out


def test_run_writes_artifacts_and_manifest(tmp_path, capsys):
    out = run(tmp_path, "run", *SMALL, "--seed", "3")
    names = sorted(p.name for p in out.iterdir())
    assert names == ["convergence.csv", "manifest.json", "runs.csv", "summary.json"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "run"
    assert man["config"]["seed"] == 3
    assert man["config"]["params"]["max_iters"] == 20
    assert man["config"]["params"]["c1"] == 2.2
    assert "pooled error reduction" in capsys.readouterr().out


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    a = run(tmp_path, "run", *SMALL, "--seed", "4", name="a")
    b = run(tmp_path, "run", "--config", str(a / "manifest.json"), "-q", name="b")
    for f in ("runs.csv", "convergence.csv", "summary.json", "manifest.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 9, "runs": 1, "nodes": 30, "range": 40,
                               "anchor_ratio": 0.2, "params": {"max_iters": 5, "beta": 1.0}}))
    out = run(tmp_path, "run", "--config", str(cfg), "--seed", "2", "--beta", "4", "-q")
    c = json.loads((out / "manifest.json").read_text())["config"]
    assert c["seed"] == 2 and c["runs"] == 1
    assert c["params"]["max_iters"] == 5 and c["params"]["beta"] == 4.0


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seeed": 1}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "seeed" in capsys.readouterr().err
    cfg.write_text(json.dumps({"params": {"omega": 1}}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("argv", [
    ["run", "--methods", "pso,magic"],
    ["run", "--scenario", "s9"],
    ["run", "--anchor-ratio", "1.5"],
    ["run", "--workers", "0"],
    ["run", "--omega-min", "2.0"],
    ["convergence", "--methods", "dvhop,pso"],
])
def test_bad_input_exit_code(tmp_path, argv):
    assert cli.main([*argv, "--out", str(tmp_path / "o"), "-q"]) == 2
    assert not (tmp_path / "o").exists()


def test_explicit_fields_equal_to_preset(tmp_path):
    a = run(tmp_path, "run", "--runs", "1", "--max-iters", "5", "-q", name="a")
    b = run(tmp_path, "run", "--nodes", "100", "--anchor-ratio", "0.1", "--range", "30",
            "--runs", "1", "--max-iters", "5", "-q", name="b")
    assert (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()


def test_convergence_command(tmp_path):
    out = run(tmp_path, "convergence", *SMALL)
    assert sorted(p.name for p in out.iterdir()) == ["convergence.csv", "manifest.json"]
    lines = (out / "convergence.csv").read_text().splitlines()
    assert len(lines) == 1 + 3 * 20


def test_replay_matches_run(tmp_path):
    a = run(tmp_path, "run", *SMALL, "--seed", "7", "--save-deployments", name="a")
    dep = a / "deployments" / "custom_run001.json"
    assert dep.exists()
    r = run(tmp_path, "replay", str(dep), "--run-index", "1", "--seed", "7",
            "--max-iters", "20", "--n-particles", "10", "-q", name="r")
    full = [l.split(",") for l in (a / "runs.csv").read_text().splitlines()[1:]]
    rep = [l.split(",") for l in (r / "runs.csv").read_text().splitlines()[1:]]
    want = {row[2]: row[3] for row in full if row[1] == "1"}
    assert {row[2]: row[3] for row in rep} == want
    nodes = (r / "nodes.csv").read_text().splitlines()
    assert nodes[0].startswith("method,node_id,true_x")
    man = json.loads((r / "manifest.json").read_text())
    assert len(man["deployment"]["sha256"]) == 64


def test_out_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["convergence", *SMALL, "--runs", "1"]) == 0
    assert (tmp_path / "envout" / "convergence.csv").exists()


def test_partial_output_removed(tmp_path, monkeypatch):
    out = tmp_path / "o"
    real = Path.write_text
    calls = []

    def flaky(self, text, *a, **k):
        calls.append(self)
        if self.name == "summary.json":
            raise OSError("disk full")
        return real(self, text, *a, **k)
    monkeypatch.setattr(Path, "write_text", flaky)
    with pytest.raises(OSError):
        cli.main(["run", *SMALL, "--runs", "1", "--out", str(out)])
    assert not any(p.is_file() for p in out.rglob("*"))


def test_python_kernel_switch_same_output(tmp_path):
    outs = []
    for k in ("python", "auto"):
        out = tmp_path / k
        env = dict(os.environ, ADAPSCA_KERNEL=k)
        subprocess.run([sys.executable, "-m", "adapsca.cli", "run", *SMALL, "--runs", "1",
                        "--out", str(out)], check=True, env=env, capture_output=True)
        outs.append(out)
    assert (outs[0] / "runs.csv").read_bytes() == (outs[1] / "runs.csv").read_bytes()
    kern = json.loads((outs[0] / "manifest.json").read_text())["kernel"]
    assert kern == "python"
