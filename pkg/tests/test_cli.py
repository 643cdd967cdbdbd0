from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from metricnav.cli import EXIT_BACKEND, EXIT_CONFIG, EXIT_OK, EXIT_REPLAY, EXIT_SCENE, main
from metricnav.evaluation.config import ConfigError, RunConfig, config_from_dict, load_run_config
from metricnav.geometry import AgentState
from metricnav.sim import write_trajectory


def small_suite(tmp_path, fixtures_dir, ids=("sc_straight", "br_corner_ne")):
    rel = [os.path.relpath(fixtures_dir / "episodes" / f"{i}.toml", tmp_path) for i in ids]
    p = tmp_path / "suite.toml"
    p.write_text('format = "metricnav-suite"\nversion = 1\nepisodes = [' + ", ".join(f'"{r}"' for r in rel) + "]\n")
    return p


def run_cfg(tmp_path, body=""):
    p = tmp_path / "run.toml"
    p.write_text('format = "metricnav-run"\nversion = 1\n' + body)
    return p


# configuration


def test_config_defaults_and_digest(tmp_path):
    cfg = load_run_config(run_cfg(tmp_path))
    assert cfg.digest() == RunConfig().digest()
    tweaked = load_run_config(run_cfg(tmp_path, "[thresholds]\ndelta_merge = 0.9\n"))
    assert tweaked.agent.memory.delta_merge == 0.9
    assert tweaked.digest() != cfg.digest()
    assert config_from_dict(tweaked.to_dict()).digest() == tweaked.digest()


@pytest.mark.parametrize(
    "body,key",
    [
        ("[thresholds]\ndelta_merge = -1\n", "thresholds.delta_merge"),
        ("[thresholds]\nbogus = 1\n", "thresholds.bogus"),
        ('backend = "oracle"\n', "backend"),
        ("[map]\nvoxel_size = \"fine\"\n", "map.voxel_size"),
    ],
)
def test_config_errors_name_the_key(tmp_path, body, key):
    with pytest.raises(ConfigError) as err:
        load_run_config(run_cfg(tmp_path, body))
    assert f"'{key}'" in str(err.value)


def test_config_paths_relative_to_file(tmp_path):
    cfg = load_run_config(run_cfg(tmp_path, 'episodes = "suite.toml"\noutput_dir = "out"\n'))
    assert Path(cfg.episodes) == tmp_path / "suite.toml"
    assert Path(cfg.output_dir) == tmp_path / "out"


# commands


def test_run_replay_score_roundtrip(tmp_path, fixtures_dir, capsys):
    suite = small_suite(tmp_path, fixtures_dir)
    out = tmp_path / "run"
    assert main(["run", "--episodes", str(suite), "--backend", "scripted", "--output", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["aggregate"]["sr"] == 1.0
    assert (out / "sc_straight" / "replay.jsonl").exists()
    assert (out / "summary.txt").exists() and (out / "manifest.json").exists()

    assert main(["replay", str(out)]) == EXIT_OK
    assert (out / "replay" / "report.json").read_bytes() == (out / "report.json").read_bytes()

    capsys.readouterr()
    assert main(["score", "--run", str(out)]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert [r["episode_id"] for r in rows] == ["sc_straight", "br_corner_ne"]
    assert all(r["sr"] == 1 for r in rows)


def test_replay_detects_tampering(tmp_path, fixtures_dir):
    suite = small_suite(tmp_path, fixtures_dir, ids=("sc_straight",))
    out = tmp_path / "run"
    assert main(["run", "--episodes", str(suite), "--backend", "scripted", "--output", str(out)]) == EXIT_OK
    log = out / "sc_straight" / "replay.jsonl"
    lines = log.read_text().splitlines()
    rec = json.loads(lines[2])
    rec["response"] = rec["response"].replace('"v": 804', '"v": 700')
    lines[2] = json.dumps(rec)
    log.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(out)]) == EXIT_REPLAY


def test_score_hand_written_log(tmp_path, fixtures_dir, capsys):
    traj = tmp_path / "t.txt"
    write_trajectory([AgentState(0.1 * k, 0.0, 0.0) for k in range(51)], traj)
    ep = fixtures_dir / "episodes" / "sc_straight.toml"
    assert main(["score", "--episode", str(ep), "--trajectory", str(traj)]) == EXIT_OK
    row = json.loads(capsys.readouterr().out)
    assert row["sr"] == 1 and row["spl"] == pytest.approx(1.0)


def test_render_map(tmp_path, fixtures_dir):
    ep = fixtures_dir / "episodes" / "sc_straight.toml"
    out = tmp_path / "maps"
    assert main(["render-map", "--episode", str(ep), "--output", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.glob("*.png")) == ["sc_straight_step_000.png", "sc_straight_step_001.png"]


def test_validate_scene(tmp_path, fixtures_dir, capsys):
    scenes = sorted(str(p) for p in (fixtures_dir / "scenes").glob("*.scene"))
    assert main(["validate-scene", *scenes]) == EXIT_OK
    bad = tmp_path / "bad.scene"
    bad.write_text('format = "metricnav-scene"\nversion = 1\nbounds = [[0, 0], [1, 1]]\n[[box]]\nmin = [1, 1, 1]\nmax = [0, 0, 0]\n')
    assert main(["validate-scene", str(bad)]) == EXIT_SCENE
    assert "bad" in capsys.readouterr().out


def test_exit_codes(tmp_path, fixtures_dir, monkeypatch):
    assert main(["run", "--frobnicate"]) == EXIT_CONFIG
    assert main(["run", "--config", str(run_cfg(tmp_path, "[thresholds]\nbogus = 1\n"))]) == EXIT_CONFIG
    assert main(["run", "--backend", "scripted"]) == EXIT_CONFIG  # no suite
    assert main(["replay", str(tmp_path / "nope")]) == EXIT_CONFIG
    monkeypatch.delenv("METRICNAV_REMOTE_ENDPOINT", raising=False)
    suite = small_suite(tmp_path, fixtures_dir, ids=("sc_straight",))
    assert main(["run", "--episodes", str(suite), "--backend", "remote", "--output", str(tmp_path / "r")]) == EXIT_BACKEND

    broken = tmp_path / "broken.toml"
    text = (fixtures_dir / "episodes" / "sc_straight.toml").read_text()
    broken.write_text(text.replace("../scenes/", str(fixtures_dir / "scenes") + "/").replace("start = [\n    0.0,", "start = [\n    -3.0,"))
    assert main(["validate-scene", str(broken)]) == EXIT_SCENE
