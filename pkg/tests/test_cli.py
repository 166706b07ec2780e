"""End-to-end CLI runs through main(argv) with real files."""

import json
import os

import pytest

from gameforge import cli, gdl, rulesetdesign, trace
from gameforge.gen import random_skeleton


@pytest.fixture
def game_file(tmp_path, bundled_text):
    path = tmp_path / "game.json"
    path.write_text(bundled_text)
    return str(path)


def test_play_random_writes_trace(tmp_path, game_file, capsys):
    out = tmp_path / "episode.trace"
    rc = cli.main(["play", "--game", game_file, "--agent", "random",
                   "--seed", "3", "--trace", str(out)])
    assert rc == 0
    assert "ticks" in capsys.readouterr().out
    tf = trace.parse_trace(out.read_text())
    assert tf.header["level"] == 0 and tf.header["seed"] == 3


def test_play_solve_reports_winnable(game_file, capsys):
    rc = cli.main(["play", "--game", game_file, "--agent", "solve"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["winnable"] is True
    assert doc["shortest_win"]


def test_play_verify_accepts_own_trace(tmp_path, game_file):
    out = tmp_path / "episode.trace"
    cli.main(["play", "--game", game_file, "--agent", "random",
              "--seed", "5", "--trace", str(out)])
    assert cli.main(["play", "--game", game_file,
                     "--verify", str(out)]) == 0


def test_play_verify_rejects_tampered_trace(tmp_path, game_file, capsys):
    out = tmp_path / "episode.trace"
    cli.main(["play", "--game", game_file, "--agent", "random",
              "--seed", "5", "--trace", str(out)])
    lines = out.read_text().splitlines()
    footer = json.loads(lines[-1])
    footer["final"] = "0" * 16
    lines[-1] = json.dumps(footer, sort_keys=True, separators=(",", ":"))
    out.write_text("\n".join(lines) + "\n")
    assert cli.main(["play", "--game", game_file,
                     "--verify", str(out)]) == 1
    assert "rejected" in capsys.readouterr().out


def test_play_mcts_params_file(tmp_path, game_file, capsys):
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"iterations": 30, "rollout_depth": 6}))
    rc = cli.main(["play", "--game", game_file, "--agent", "mcts",
                   "--seed", "1", "--params", str(params)])
    assert rc == 0


def test_play_missing_game_errors(capsys):
    assert cli.main(["play", "--game", "/nonexistent.json"]) == 2
    assert "error:" in capsys.readouterr().err


def test_ruleset_assemble_then_test(tmp_path):
    skel = tmp_path / "skeleton.json"
    skel.write_text(gdl.serialize_game(random_skeleton(7)))
    cat = tmp_path / "catalogue.json"
    cat.write_text(rulesetdesign.catalogue_to_json(
        rulesetdesign.seed_catalogue()))
    out = tmp_path / "assembled.json"
    rc = cli.main(["ruleset", "assemble", "--catalogue", str(cat),
                   "--game", str(skel), "--patterns", "2", "--seed", "7",
                   "--out", str(out)])
    assert rc == 0
    g = gdl.parse_game(out.read_text())
    assert g.rules
    rc = cli.main(["ruleset", "test", "--game", str(out), "--seed", "1"])
    assert rc in (0, 1)  # verdict promising or dead, both well-formed


def test_ruleset_test_output_shape(tmp_path, capsys):
    skel = tmp_path / "skeleton.json"
    skel.write_text(gdl.serialize_game(random_skeleton(7)))
    out = tmp_path / "assembled.json"
    cli.main(["ruleset", "assemble", "--game", str(skel),
              "--patterns", "2", "--seed", "7", "--out", str(out)])
    capsys.readouterr()
    cli.main(["ruleset", "test", "--game", str(out), "--seed", "1"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] in ("promising", "dead")
    assert set(doc["overall"]) >= {"all_rules_firable", "terminates"}


def test_mechanic_mine_writes_report_and_catalogue(tmp_path, capsys):
    cat = tmp_path / "catalogue.json"
    report = tmp_path / "report.json"
    rc = cli.main(["mechanic", "mine", "--count", "4", "--seed", "2",
                   "--catalogue", str(cat), "--report", str(report)])
    assert rc == 0
    rows = json.loads(report.read_text())
    assert len(rows) == 4
    assert all({"id", "rules", "interesting"} <= set(r) for r in rows)
    loaded = rulesetdesign.catalogue_from_json(cat.read_text())
    assert len(loaded.patterns) >= 6


def test_studio_run_and_status(tmp_path, capsys):
    ws = str(tmp_path / "ws")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "mechanic_batch": 2, "mechanic_state_cap": 4000,
        "ga": {"population": 4, "generations": 2, "elitism": 1,
               "probe_cap": 600, "random_episodes": 2, "episode_ticks": 40,
               "mcts": {"iterations": 20, "rollout_depth": 8},
               "mcts_moves": 12},
        "potential": {"random_episodes": 4, "mcts_episodes": 1,
                      "episode_ticks": 60,
                      "mcts": {"iterations": 20, "rollout_depth": 8},
                      "mcts_moves": 20}}))
    rc = cli.main(["studio", "run", "--workspace", ws, "--steps", "3",
                   "--seed", "4", "--config", str(config)])
    assert rc == 0
    assert "digest" in capsys.readouterr().out
    rc = cli.main(["studio", "status", "--workspace", ws])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["steps"] == 3


def test_studio_export_refuses_unready_project(tmp_path, capsys):
    ws = str(tmp_path / "ws")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"mechanic_batch": 2}))
    cli.main(["studio", "run", "--workspace", ws, "--steps", "1",
              "--seed", "0", "--config", str(config)])
    capsys.readouterr()
    rc = cli.main(["studio", "export", "--workspace", ws,
                   "--project", "p9999"])
    assert rc == 2
    assert "no project" in capsys.readouterr().err


def test_workspace_env_var_fallback(tmp_path, capsys, monkeypatch):
    ws = str(tmp_path / "ws")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"mechanic_batch": 2}))
    monkeypatch.setenv("FORGE_WORKSPACE", ws)
    rc = cli.main(["studio", "run", "--steps", "1", "--seed", "0",
                   "--config", str(config)])
    assert rc == 0
    assert os.path.exists(os.path.join(ws, "state.json"))


def test_level_gen_writes_game_and_log(tmp_path, game_file, monkeypatch):
    out = tmp_path / "out.json"
    log = tmp_path / "gen.jsonl"
    # full default GA params take minutes; swap in a small budget
    from gameforge import agents, leveldesign as ld
    small = ld.EvolveParams(population=4, generations=2, elitism=1,
                            probe_cap=600, random_episodes=2,
                            episode_ticks=40,
                            mcts=agents.MctsParams(iterations=20,
                                                   rollout_depth=8),
                            mcts_moves=12)
    monkeypatch.setattr(ld, "EvolveParams", lambda: small)
    rc = cli.main(["level", "gen", "--game", game_file, "--seed", "3",
                   "--out", str(out), "--log", str(log)])
    assert rc == 0
    g = gdl.parse_game(out.read_text())
    original = gdl.parse_game(open(game_file).read())
    assert len(g.levels) == len(original.levels) + 1
    entries = [json.loads(line) for line in log.read_text().splitlines()]
    assert len(entries) == 2
    assert all({"generation", "best", "mean"} <= set(e) for e in entries)
