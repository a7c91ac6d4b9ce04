import csv
import json
import logging
from pathlib import Path

import pytest

from relaxlab.cli import config_hash, main
from relaxlab.scenario import default_burgers, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_config(tmp_path, **run):
    raw = json.loads((CONFIGS / "quick_burgers.json").read_text())
    raw["grid"]["cells"] = 64
    raw["run"].update({"t_end": 0.2, "snapshots": [0.1], "mc_samples": 16})
    raw["run"].update(run)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def out_dir(root, cfg_path, command):
    return root / config_hash(parse_config(cfg_path)) / command


def test_simulate_is_byte_identical(tmp_path):
    cfg = small_config(tmp_path)
    outputs = []
    for run in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / run)]) == 0
        d = out_dir(tmp_path / run, cfg, "simulate")
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outputs[0] == outputs[1]
    names = set(outputs[0])
    assert {"manifest.json", "nodes.csv", "times.csv", "report.csv", "snapshot_000.csv"} <= names
    manifest = json.loads(outputs[0]["manifest.json"])
    assert manifest["passed"] and manifest["seed"] == 0
    assert set(manifest["files"]) == names - {"manifest.json"}


def test_simulate_snapshot_layout(tmp_path):
    cfg = small_config(tmp_path)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    d = out_dir(tmp_path, cfg, "simulate")
    times = list(csv.reader((d / "times.csv").open()))
    assert [float(r[1]) for r in times[1:]] == [0.0, 0.1, 0.2]
    rows = list(csv.reader((d / "snapshot_002.csv").open()))
    assert rows[0][:2] == ["x", "u_0"] and len(rows) == 65


def test_sweep_epsilon_single_eps_warns(tmp_path, caplog):
    cfg = small_config(tmp_path, epsilons=[0.01])
    with caplog.at_level(logging.WARNING, logger="relaxlab"):
        code = main(["sweep-epsilon", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    assert "at least 3" in caplog.text
    d = out_dir(tmp_path, cfg, "sweep-epsilon")
    table = list(csv.reader((d / "sweep_epsilon.csv").open()))
    assert table[0][0] == "epsilon" and len(table) == 2
    names = [r[0] for r in csv.reader((d / "report.csv").open())]
    assert "decay_slope" not in names and "limit_distance" in names


def test_sweep_epsilon_reports_slope(tmp_path):
    cfg = small_config(tmp_path, epsilons=[0.1, 0.01, 0.001])
    main(["sweep-epsilon", "--config", str(cfg), "--out", str(tmp_path), "--threads", "3"])
    d = out_dir(tmp_path, cfg, "sweep-epsilon")
    manifest = json.loads((d / "manifest.json").read_text())
    assert "decay_rate_ok" in manifest["flags"]


def test_threads_do_not_change_results(tmp_path):
    cfg = small_config(tmp_path, epsilons=[0.1, 0.01, 0.001])
    blobs = []
    for threads in ("1", "3"):
        root = tmp_path / threads
        main(["sweep-epsilon", "--config", str(cfg), "--out", str(root), "--threads", threads])
        blobs.append((out_dir(root, cfg, "sweep-epsilon") / "sweep_epsilon.csv").read_bytes())
    assert blobs[0] == blobs[1]


@pytest.mark.parametrize("command", ["sweep-nu", "stats", "cv"])
def test_other_commands_write_reports(tmp_path, command):
    cfg = small_config(tmp_path)
    code = main([command, "--config", str(cfg), "--out", str(tmp_path)])
    d = out_dir(tmp_path, cfg, command)
    manifest = json.loads((d / "manifest.json").read_text())
    assert code == (0 if manifest["passed"] else 1)
    assert manifest["command"] == command
    assert all((d / f).exists() for f in manifest["files"])


def test_env_var_sets_output_root(tmp_path, monkeypatch):
    cfg = small_config(tmp_path)
    monkeypatch.setenv("RELAXLAB_OUT", str(tmp_path / "env"))
    assert main(["stats", "--config", str(cfg)]) == 0
    assert out_dir(tmp_path / "env", cfg, "stats").is_dir()


def test_exit_codes(tmp_path, capsys):
    assert main([]) == 2
    assert main(["simulate"]) == 2
    assert main(["bogus", "--config", "x"]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": {"a": -1}}))
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "model.a" in capsys.readouterr().err
    cfg = small_config(tmp_path)
    assert main(["simulate", "--config", str(cfg), "--threads", "0"]) == 2


def test_failed_check_exits_one(tmp_path):
    # with eps far above t_end the source barely acts, the equilibration
    # norm grows like t_end rather than eps, and the slope check fails
    cfg = small_config(tmp_path, epsilons=[100.0, 50.0, 25.0])
    assert main(["sweep-epsilon", "--config", str(cfg), "--out", str(tmp_path)]) == 1


@pytest.mark.slow
def test_verify_default_scenario_passes(tmp_path):
    cfg = tmp_path / "default.json"
    cfg.write_text((CONFIGS / "default_burgers.json").read_text())
    assert parse_config(cfg) == default_burgers()
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 0
