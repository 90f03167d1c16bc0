import json
import os

import numpy as np
import pytest

from anisolab.cli import main, replay
from anisolab.config import (ConfigError, default_config, parse_config_text)


def test_parse_defaults_and_overrides():
    cfg = parse_config_text("", "voronoi")
    assert cfg["experiment"] == "voronoi"
    assert cfg["seed"] == 0
    assert cfg["threads"] == 1
    assert cfg["run.trials"] == 1000
    cfg = parse_config_text(
        "experiment = voronoi\nseed = 7\ngeometry.H = 0.3, 0.9\n"
        "run.trials = 50  # inline comment\n", "voronoi")
    assert cfg["seed"] == 7
    assert cfg["geometry.H"] == [0.3, 0.9]
    assert cfg["run.trials"] == 50


def test_parse_rejects_bad_input():
    with pytest.raises(ConfigError):
        parse_config_text("bogus.key = 1\n", "voronoi")
    with pytest.raises(ConfigError):
        parse_config_text("seed = 1\nseed = 2\n", "voronoi")
    with pytest.raises(ConfigError):
        parse_config_text("just some words\n", "voronoi")
    with pytest.raises(ConfigError):
        parse_config_text("seed = not-an-int\n", "voronoi")
    with pytest.raises(ConfigError):
        parse_config_text("experiment = covering\n", "voronoi")
    with pytest.raises(ConfigError):
        parse_config_text("", "no-such-family")


def test_default_config_known_for_every_family():
    for name in ("voronoi", "covering", "integral", "slnd", "localtime",
                 "levelset", "she-verify"):
        cfg = default_config(name)
        assert cfg["experiment"] == name
        assert "seed" in cfg and "threads" in cfg


def _run_cli(args):
    return main(args)


def test_cli_usage_errors(tmp_path, capsys):
    assert _run_cli(["no-such-command"]) == 64
    capsys.readouterr()
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus = 1\n")
    out = tmp_path / "never"
    code = _run_cli(["voronoi", "--config", str(bad), "--out", str(out)])
    assert code == 64
    # a config error must not leave partial artifacts behind
    assert not out.exists()


def test_cli_voronoi_run_and_replay(tmp_path, capsys):
    out = tmp_path / "vor"
    cfg = tmp_path / "vor.cfg"
    cfg.write_text("run.trials = 200\n")
    code = _run_cli(["voronoi", "--config", str(cfg), "--seed", "3",
                     "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failures"] == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["csv_files"] == ["voronoi.csv"]
    assert "wrote" in captured.out
    # replay reproduces the CSV byte for byte, at any thread count
    assert replay(str(out)) is True
    assert replay(str(out), threads=4) is True
    assert _run_cli(["replay", str(out / "manifest.json")]) == 0


def test_cli_replay_detects_tampering(tmp_path, capsys):
    out = tmp_path / "cov"
    cfg = tmp_path / "cov.cfg"
    cfg.write_text("run.trials = 40\nrun.points = 10, 20\ngeometry.H = 0.5\n")
    assert _run_cli(["covering", "--config", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    csv_path = out / "covering.csv"
    original = csv_path.read_text()
    csv_path.write_text(original.replace("\n", "\n", 1) + "tampered,0,0\n")
    assert replay(str(out)) is False
    assert _run_cli(["replay", str(out)]) == 1
    csv_path.write_text(original)
    assert replay(str(out)) is True


def test_cli_covering_one_dim_summary(tmp_path, capsys):
    out = tmp_path / "cov1"
    cfg = tmp_path / "cov1.cfg"
    cfg.write_text("geometry.H = 0.5\nrun.trials = 100\nrun.points = 20, 40\n")
    assert _run_cli(["covering", "--config", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["max_count"] == 2


def test_cli_she_verify_white_noise(tmp_path, capsys):
    out = tmp_path / "she"
    assert _run_cli(["she-verify", "--out", str(out)]) == 0
    capsys.readouterr()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["var_u_1_0"] == pytest.approx(0.3989422804014327, rel=1e-10)
    assert summary["var_rel_gap"] < 1e-8
    assert abs(summary["spatial_slope"] - 1.0) < 0.05
    assert abs(summary["temporal_slope"] - 0.5) < 0.05
    assert summary["quadrature_flags"] == 0


def test_cli_thread_count_independence(tmp_path, capsys):
    cfg = tmp_path / "lt.cfg"
    cfg.write_text("run.replicates = 100\nrun.grid = 2048\n"
                   "run.radii = 0.25, 0.176776695296636881, 0.125\n")
    outs = {}
    for threads in (1, 4):
        out = tmp_path / f"lt{threads}"
        code = _run_cli(["localtime", "--config", str(cfg), "--out", str(out),
                         "--threads", str(threads)])
        capsys.readouterr()
        assert code == 0
        outs[threads] = (out / "localtime.csv").read_bytes()
    assert outs[1] == outs[4]


def test_cli_report_renders_figures(tmp_path, capsys):
    out = tmp_path / "slnd"
    cfg = tmp_path / "slnd.cfg"
    cfg.write_text("run.configs = 50\n")
    assert _run_cli(["slnd", "--config", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    figdir = tmp_path / "figs"
    assert _run_cli(["report", str(out), "--out", str(figdir)]) == 0
    capsys.readouterr()
    pngs = [f for f in os.listdir(figdir) if f.endswith(".png")]
    assert pngs
    # empty directory: report is an error, not a silent success
    empty = tmp_path / "empty"
    empty.mkdir()
    assert _run_cli(["report", str(empty)]) == 1
