"""End-to-end acceptance gate: one test per shipped guarantee.

Every test covers one promised property at its stated tolerance, prints a
single ``[ACCEPTANCE] PASS/FAIL`` line with the measured wall-clock time,
and (where a runtime budget applies) asserts that budget.  These tests are
slower than the unit suites; the whole file still finishes well inside the
sum of its budgets on a developer laptop.
"""

import collections
import dataclasses
import json
import os
import time

import pytest

from gameforge import agents, cli, engine, gdl, gen, studio, trace
from gameforge import leveldesign as ld
from gameforge import mechanics as mech
from gameforge import rulesetdesign as rd
from gameforge.rng import Splitmix64, derive_seed
from tests.test_engine import (ENEMY, EXIT, EXIT_RULE, KILL_RULE, PLAYER,
                               WALL, make_game)

CONFORMANCE = os.path.join(os.path.dirname(__file__), os.pardir,
                           "conformance")


def finish(name, t0, budget=None):
    """Print the one-line verdict and enforce the runtime budget."""
    dt = time.perf_counter() - t0
    ok = budget is None or dt <= budget
    tail = f", budget {budget:g}s" if budget is not None else ""
    print(f"[ACCEPTANCE] {'PASS' if ok else 'FAIL'} {name} "
          f"({dt:.2f}s{tail})")
    assert ok, f"{name}: {dt:.1f}s exceeded the {budget:g}s budget"


# ── definition language fidelity ──────────────────────────────────────

def test_gdl_fidelity(bundled_text, bundled_game):
    t0 = time.perf_counter()
    # the bundled example survives parse∘serialize byte-for-byte
    assert gdl.serialize_game(bundled_game) == bundled_text
    # …and so do 100 generator-produced definitions
    for seed in range(100):
        text = gdl.serialize_game(gen.random_definition(seed))
        assert gdl.serialize_game(gdl.parse_game(text)) == text
    # the printed 5×5 grid uses codes {0..4} and the file validates clean
    grid = bundled_game.levels[0]
    assert (grid.width, grid.height) == (5, 5)
    assert set(grid.data) <= {0, 1, 2, 3, 4}
    assert gdl.validate_game(bundled_game).ok()
    finish("GDL fidelity", t0, 1.0)


# ── rule semantics: the kill-on-touch scenario ────────────────────────

def test_rule_semantics_kill_scenario():
    t0 = time.perf_counter()
    g = make_game([PLAYER, ENEMY], rules=[KILL_RULE], width=3,
                  data=[1, 2, 0])
    s = engine.init_state(g, 0, 0)
    s, events = engine.step(s, "Right")
    assert [(e.kind, e.payload) for e in events] == [
        ("Moved", {"id": 0, "piece": "player", "from": [0, 0],
                   "to": [1, 0]}),
        ("RuleFired", {"rule": 0}),
        ("Destroyed", {"id": 1, "piece": "enemy", "cell": [1, 0]}),
        ("Sfx", {"sfx": "punch"}),
        ("VarChanged", {"var": "score", "old": 0, "new": 1}),
    ]
    assert s.variables["score"] == 1
    finish("rule semantics (kill scenario)", t0)


# ── determinism of recorded episodes ──────────────────────────────────

def arena_game():
    """Non-terminating 6×3 arena exercising rng, chase, rules, guards."""
    return make_game(
        [PLAYER, WALL, ("ghost", {"behavior": "random"}),
         ("hound", {"behavior": "chase"})],
        rules=[{"trigger": "OVERLAP player wall", "code": ["SFX bump"]},
               {"trigger": "TICK 7", "code": ["ADD clock 1"]},
               {"trigger": "VAR clock GTE 40", "guards": [],
                "code": ["SET clock 0", "SFX gong"]}],
        variables=[{"name": "score", "onscreen": "", "startvalue": 0},
                   {"name": "clock", "onscreen": "", "startvalue": 0}],
        width=6, height=3,
        data=[1, 0, 3, 0, 0, 2,
              0, 2, 0, 0, 0, 4,
              0, 0, 0, 2, 0, 0],
        tick_cap=2000)


def test_replay_determinism():
    t0 = time.perf_counter()
    g = arena_game()
    text = gdl.serialize_game(g)

    def run(seed):
        ep = agents.random_episode(g, 0, seed, max_ticks=1000,
                                   record_events=False)
        assert ep.ticks == 1000 and ep.outcome == "Running"
        return trace.record_trace(text, 0, seed, list(ep.actions))

    for seed in range(20):
        first, second = run(seed), run(seed)
        assert first == second  # byte-identical trace files
    assert trace.verify_trace(text, run(0)).ok
    finish("determinism (20 seeds × 1000 steps)", t0, 10.0)


# ── agent vs. oracle on certified boards ──────────────────────────────

def craft_level(seed, want_win):
    """5×5 player/wall/exit board certified by the exhaustive solver.

    Winnable boards scatter a handful of walls and require a proof of a
    win in ≤ 15 moves; unwinnable boards seal the exit inside a corner
    ring of walls (no destroy rule exists, so no proof is needed beyond
    the solver saying "unreachable").
    """
    rng = Splitmix64(derive_seed(seed, 99 if want_win else 101))
    cells = [(x, y) for x in range(5) for y in range(5)]
    while True:
        data = [0] * 25
        if want_win:
            walls = set(rng.choice(cells) for _ in range(rng.randrange(5) + 4))
            free = [c for c in cells if c not in walls]
            if len(free) < 2:
                continue
            p = rng.choice(free)
            e = rng.choice([c for c in free if c != p])
            for (x, y) in walls:
                data[y * 5 + x] = 2
            data[p[1] * 5 + p[0]] = 1
            data[e[1] * 5 + e[0]] = 3
        else:
            cx, cy = rng.choice([(0, 0), (4, 0), (0, 4), (4, 4)])
            data[cy * 5 + cx] = 3
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    x, y = cx + dx, cy + dy
                    if (dx, dy) != (0, 0) and 0 <= x < 5 and 0 <= y < 5:
                        data[y * 5 + x] = 2
            free = [i for i, v in enumerate(data) if v == 0]
            data[rng.choice(free)] = 1
        g = make_game([PLAYER, WALL, EXIT], rules=[EXIT_RULE],
                      width=5, height=5, data=data)
        rep = agents.exhaustive_solve(g, 0)
        if rep.truncated:
            continue
        if want_win and rep.winnable and len(rep.shortest_win) <= 15:
            return g
        if not want_win and not rep.winnable:
            return g


def test_agent_oracle_consistency():
    t0 = time.perf_counter()
    won = 0
    for seed in range(20):
        g = craft_level(seed, want_win=True)
        ep = agents.mcts_episode(g, 0, agents.MctsParams(), seed,
                                 max_moves=40, record_events=False)
        won += ep.outcome == "Won"
    assert won >= 18, f"default MCTS won only {won}/20 certified boards"

    for seed in range(10):
        g = craft_level(seed, want_win=False)
        ep = agents.mcts_episode(g, 0, agents.MctsParams(), seed,
                                 max_moves=6, record_events=False)
        assert ep.outcome != "Won"
    finish(f"agent/oracle consistency ({won}/20 won, 0/10 unwinnable)",
           t0, 300.0)


# ── symmetry metric ───────────────────────────────────────────────────

def test_symmetry_metric(bundled_game):
    t0 = time.perf_counter()
    # hand count: mirroring the printed grid matches 21 of 25 cells
    assert ld.symmetry_score(bundled_game.levels[0]) == 21 / 25 == 0.84
    finish("symmetry metric (0.84 exact)", t0)


# ── level evolution at full budget ────────────────────────────────────

def test_level_evolution(bundled_game):
    t0 = time.perf_counter()
    params = ld.EvolveParams()  # population 40 × 50 generations
    assert (params.population, params.generations) == (40, 50)
    level, fit, log = ld.evolve_level(bundled_game, params, 2026)

    bests = [entry["best"] for entry in log]
    assert len(bests) == 50
    assert bests == sorted(bests)  # elitism: best never regresses
    assert fit.playable and fit.mcts_won

    report = agents.exhaustive_solve(
        dataclasses.replace(bundled_game, levels=(level,)), 0)
    assert report.winnable and not report.truncated
    finish("level evolution (40×50, certified winnable)", t0, 600.0)


# ── ruleset potential ─────────────────────────────────────────────────

@pytest.fixture(scope="module")
def environments():
    return mech.builtin_environments()


def adventure_skeleton():
    return make_game([("playerpiece", {"controlled": True}),
                      ("enemy", {}), ("exit", {}),
                      ("wall", {"solid": True})],
                     width=3, data=[1, 2, 3])


def test_ruleset_potential(environments):
    t0 = time.perf_counter()
    # the seeded assembly plays out as promising on the template rooms
    g = rd.assemble_ruleset(rd.seed_catalogue(), adventure_skeleton(), 3, 11)
    rep = rd.test_potential(g)
    assert rep.verdict == "promising"
    assert rep.overall["all_rules_firable"] and rep.overall["terminates"]

    # an instant-loss ruleset is caught downstream by the mechanics filter
    lose = gdl.Rule(gdl.parse_trigger("TICK 1"), (),
                    (gdl.parse_command("LOSE"),))
    cand = mech.MechanicCandidate(mech.candidate_id((lose,)), (lose,), 0)
    verdicts = mech.evaluate_candidate(cand, environments)
    assert not verdicts.interesting
    assert all(d["degenerate"] for d in verdicts.per_env.values())

    # a trigger that can never bind (one wall, wall-on-wall) is dead
    lone = make_game([PLAYER, WALL],
                     rules=[{"trigger": "OVERLAP wall wall",
                             "code": ["WIN"]}],
                     width=3, data=[1, 2, 0])
    assert rd.test_potential(lone).verdict == "dead"
    finish("ruleset potential (promising/degenerate/dead)", t0, 120.0)


# ── mechanic invention ────────────────────────────────────────────────

def candidate(*rule_specs):
    rules = tuple(
        gdl.Rule(gdl.parse_trigger(trig),
                 tuple(gdl.parse_guard(g) for g in guards),
                 tuple(gdl.parse_command(c) for c in code))
        for trig, guards, code in rule_specs)
    return mech.MechanicCandidate(mech.candidate_id(rules), rules, 0)


def test_mechanic_invention(environments):
    t0 = time.perf_counter()
    wall_destroy = candidate(("OVERLAP avatar obstacle", [], ["DESTROY $2"]))
    rep = mech.evaluate_candidate(wall_destroy, environments)
    assert rep.interesting
    gap = rep.per_env["wallgap"]
    assert (5, 2) in gap["newly_reachable_cells"]  # the sealed exit cell
    assert gap["newly_winnable"] and not gap["degenerate"]

    instant_loss = candidate(("TICK 1", [], ["LOSE"]))
    assert not mech.evaluate_candidate(instant_loss, environments).interesting

    noise_only = candidate(("OVERLAP avatar obstacle", [], ["SFX ding"]))
    assert not mech.evaluate_candidate(noise_only, environments).interesting
    finish("mechanic invention (wall-destroy vs. duds)", t0, 120.0)


# ── studio continuity at scale ────────────────────────────────────────

def test_studio_continuity(tmp_path):
    t0 = time.perf_counter()
    ws_a = str(tmp_path / "uninterrupted")
    kb_a, events_a = studio.run_studio(studio.StudioConfig(workspace=ws_a),
                                       seed=1, steps=200)
    seen = collections.Counter(e.activity for e in events_a)
    assert set(seen) == set(studio.ACTIVITIES)

    # kill mid-run (torn half-written event) and restart for the rest
    ws_b = str(tmp_path / "interrupted")
    cfg_b = studio.StudioConfig(workspace=ws_b)
    studio.run_studio(cfg_b, seed=1, steps=120)
    with open(os.path.join(ws_b, "events.jsonl"), "a") as f:
        f.write('{"step": 120, "activ')
    kb_b, _ = studio.run_studio(cfg_b, seed=1, steps=80)
    assert studio.kb_digest(kb_b) == studio.kb_digest(kb_a)
    assert open(os.path.join(ws_b, "events.jsonl")).read() == \
        open(os.path.join(ws_a, "events.jsonl")).read()

    # the feed alone rebuilds the knowledge base
    replayed = studio.replay_feed(ws_a, studio.StudioConfig(workspace=ws_a),
                                  scratch=str(tmp_path / "scratch"))
    assert studio.kb_digest(replayed) == studio.kb_digest(kb_a)

    # at least one export shipped, and its evidence re-verifies
    exports = sorted(os.listdir(os.path.join(ws_a, "exports")))
    sidecars = [f for f in exports if f.endswith(".provenance.json")]
    assert sidecars
    for name in sidecars:
        sidecar = json.load(open(os.path.join(ws_a, "exports", name)))
        text = open(os.path.join(
            ws_a, "exports", name.replace(".provenance", ""))).read()
        assert sidecar["definition_digest"] == gdl.definition_digest(text)
        report = agents.exhaustive_solve(gdl.parse_game(text),
                                         sidecar["evidence"]["level"])
        assert report.winnable and not report.truncated
        assert len(report.shortest_win) == \
            len(sidecar["evidence"]["shortest_win"])
    finish(f"studio continuity (200 steps, {len(sidecars)} exports)",
           t0, 900.0)


# ── browser player parity (cross-component) ───────────────────────────

def test_player_parity():
    t0 = time.perf_counter()
    manifest = json.load(open(os.path.join(CONFORMANCE, "manifest.json")))
    assert manifest["games"] == 5 and len(manifest["traces"]) == 25

    # the golden traces themselves verify against the engine
    for entry in manifest["traces"]:
        game_text = open(os.path.join(CONFORMANCE, entry["game"])).read()
        trace_text = open(os.path.join(CONFORMANCE, entry["trace"])).read()
        assert trace.verify_trace(game_text, trace_text).ok, entry["trace"]

    # the player replayed all 25 with equal final digests (vitest artifact)
    report_path = os.path.join(CONFORMANCE, "reports", "parity_report.json")
    if not os.path.exists(report_path):
        pytest.fail("parity_report.json missing — run `npx vitest run` "
                    "in frontend/ to regenerate it")
    report = json.load(open(report_path))
    assert report["games"] == 5 and len(report["traces"]) == 25
    assert all(entry["ok"] for entry in report["traces"])

    # the scripted 10-key player session round-trips through the verifier
    session_path = os.path.join(CONFORMANCE, "session", "ts_session.jsonl")
    if not os.path.exists(session_path):
        pytest.fail("ts_session.jsonl missing — run `npx vitest run` "
                    "in frontend/ to regenerate it")
    game_path = os.path.join(CONFORMANCE, "games", "g1_corridor_run.json")
    session_text = open(session_path).read()
    assert len(trace.parse_trace(session_text).footer["actions"]) == 10
    assert trace.verify_trace(open(game_path).read(), session_text).ok
    assert cli.main(["play", "--game", game_path,
                     "--verify", session_path]) == 0
    finish("player parity (25 traces + 10-key session)", t0)
