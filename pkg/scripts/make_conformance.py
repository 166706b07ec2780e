#!/usr/bin/env python3
"""Regenerate the conformance corpus: five games, five golden traces each.

The corpus is the cross-implementation contract for step semantics: every
trace is recorded by the engine and must replay bit-identically (event lines,
final digest, tick count) in any other implementation of the step rules.
Output is deterministic, so regenerating over a clean checkout is a no-op.

    python3 scripts/make_conformance.py [--out conformance]

Coverage is asserted, not hoped for: across the 25 traces every event kind
must appear, as must Won, Lost, Timeout, and Running final states, and the
alchemy game must actually fire its SPAWN / TRANSFORM / SET / ADD rules.
"""

import argparse
import collections
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from gameforge import agents, engine, gdl, trace
from gameforge.rng import Splitmix64, derive_seed

BLACK = gdl.ColorTriple(0.1, 0.1, 0.12)
BONE = gdl.ColorTriple(0.9, 0.85, 0.7)
MOSS = gdl.ColorTriple(0.3, 0.55, 0.25)
RUST = gdl.ColorTriple(0.7, 0.3, 0.2)
GOLD = gdl.ColorTriple(0.85, 0.7, 0.2)
ICE = gdl.ColorTriple(0.55, 0.75, 0.9)


def piece(name, sprite, **kw):
    return gdl.PieceDef(name=name, layer=1, sprite=sprite, animated=False,
                        flips=False, **kw)


def var(name, onscreen, start=0):
    return gdl.VariableDef(name, onscreen, start)


def rule(trigger, code, guards=()):
    return gdl.Rule(gdl.parse_trigger(trigger),
                    tuple(gdl.parse_guard(g) for g in guards),
                    tuple(gdl.parse_command(c) for c in code))


def level(width, height, rows):
    data = tuple(code for row in rows for code in row)
    assert len(data) == width * height
    return gdl.LevelDef(width, height, data)


# ── the five games ────────────────────────────────────────────────────

def corridor_run():
    """Movement, solid walls, bump SFX, exit-to-win. No randomness."""
    return gdl.GameDefinition(
        gamename="Corridor Run", numplayers=1, floor="flagstone",
        music="march", color_accent=GOLD, color_body=BLACK,
        variables=(var("score", "Score"),),
        pieces=(piece("avatar", "knight", controlled=True),
                piece("wall", "bricks", solid=True),
                piece("exit", "door")),
        rules=(rule("OVERLAP avatar wall", ["SFX bump"]),
               rule("OVERLAP avatar exit", ["SCORE 1", "SFX fanfare", "WIN"])),
        levels=(level(5, 4, [[1, 0, 2, 0, 0],
                             [0, 0, 2, 0, 0],
                             [0, 0, 2, 0, 3],
                             [0, 0, 0, 0, 0]]),
                level(6, 3, [[1, 0, 2, 0, 0, 3],
                             [0, 0, 2, 0, 2, 2],
                             [0, 0, 0, 0, 0, 0]])),
        tick_cap=200)


def gem_collector():
    """Collect-all via COUNT, score milestones via an edge-triggered VAR."""
    return gdl.GameDefinition(
        gamename="Gem Collector", numplayers=1, floor="cave",
        music="drip", color_accent=ICE, color_body=BLACK,
        variables=(var("score", "Score"), var("bonus", "Bonus")),
        pieces=(piece("avatar", "miner", controlled=True),
                piece("gem", "crystal"),
                piece("wall", "rubble", solid=True)),
        rules=(rule("OVERLAP avatar gem",
                    ["DESTROY $2", "SCORE 1", "SFX pickup"]),
               rule("VAR score GTE 3", ["ADD bonus 5", "SFX jackpot"]),
               rule("COUNT gem EQ 0", ["WIN"])),
        levels=(level(5, 5, [[1, 0, 2, 0, 2],
                             [0, 3, 0, 3, 0],
                             [2, 0, 0, 0, 0],
                             [0, 3, 0, 3, 0],
                             [2, 0, 0, 0, 2]]),),
        tick_cap=200)


def hunted():
    """Chase behavior, a lives counter behind guards, LOSE on depletion."""
    return gdl.GameDefinition(
        gamename="Hunted", numplayers=1, floor="moor",
        music="dread", color_accent=RUST, color_body=BLACK,
        variables=(var("score", "Score"), var("lives", "Lives", 2)),
        pieces=(piece("avatar", "scout", controlled=True),
                piece("hound", "beast", behavior="chase"),
                piece("wall", "thorns", solid=True),
                piece("exit", "gate")),
        rules=(rule("OVERLAP avatar hound",
                    ["ADD lives -1", "SFX bite", "DESTROY $2"]),
               rule("TICK 3", ["SCORE 1"], guards=["VAR lives GTE 1"]),
               rule("VAR lives LTE 0", ["SFX dirge", "LOSE"]),
               rule("OVERLAP avatar exit", ["WIN"])),
        levels=(level(6, 5, [[1, 0, 0, 3, 0, 2],
                             [0, 0, 0, 3, 0, 0],
                             [0, 3, 0, 0, 0, 0],
                             [0, 0, 0, 0, 3, 2],
                             [2, 0, 0, 0, 0, 4]]),),
        tick_cap=150)


def alchemy():
    """The kitchen sink: random movers, a chaser, SPAWN, TRANSFORM, SET, ADD."""
    return gdl.GameDefinition(
        gamename="Alchemy Yard", numplayers=1, floor="workshop",
        music="bubble", color_accent=MOSS, color_body=BLACK,
        variables=(var("score", "Score"), var("mana", "Mana")),
        pieces=(piece("avatar", "adept", controlled=True),
                piece("slime", "blob", behavior="random"),
                piece("crystal", "shard"),
                piece("spark", "mote"),
                piece("warden", "golem", behavior="chase"),
                piece("wall", "fence", solid=True)),
        rules=(rule("OVERLAP avatar slime", ["TRANSFORM $2 crystal", "SFX freeze"]),
               rule("OVERLAP avatar crystal",
                    ["DESTROY $2", "SPAWN spark $1", "ADD mana 2"]),
               rule("OVERLAP warden avatar", ["ADD mana -1", "SFX thud"],
                    guards=["VAR mana GTE 1"]),
               rule("VAR mana GTE 6", ["SET mana 0", "SCORE 1", "SFX chime"]),
               rule("VAR score GTE 2", ["WIN"])),
        levels=(level(5, 5, [[1, 0, 2, 0, 6],
                             [0, 2, 0, 0, 0],
                             [0, 0, 0, 2, 0],
                             [6, 0, 0, 0, 0],
                             [5, 0, 0, 0, 6]]),),
        tick_cap=300)


def timer_gates():
    """TICK-driven gate removal, two avatars, COUNT-to-zero win, Timeout."""
    return gdl.GameDefinition(
        gamename="Timer Gates", numplayers=1, floor="clockwork",
        music="tick", color_accent=BONE, color_body=BLACK,
        variables=(var("score", "Score"), var("open", "")),
        pieces=(piece("avatar", "runner", controlled=True),
                piece("gate", "bars", solid=True),
                piece("exit", "arch")),
        rules=(rule("TICK 5", ["SET open 1", "SFX grind", "DESTROY gate"],
                    guards=["VAR open EQ 0"]),
               rule("OVERLAP avatar exit", ["SCORE 1", "DESTROY $1"]),
               rule("COUNT avatar EQ 0", ["WIN"])),
        levels=(level(6, 4, [[1, 0, 2, 0, 0, 3],
                             [0, 0, 2, 0, 0, 0],
                             [0, 0, 2, 0, 0, 0],
                             [1, 0, 2, 0, 0, 3]]),),
        tick_cap=40)


GAMES = (
    ("g1_corridor_run", corridor_run),
    ("g2_gem_collector", gem_collector),
    ("g3_hunted", hunted),
    ("g4_alchemy_yard", alchemy),
    ("g5_timer_gates", timer_gates),
)


# ── trace recipes ─────────────────────────────────────────────────────

def walk_actions(g, level_index, seed, max_moves, walk_seed):
    """A random walk's action list, truncated at the terminal state."""
    state = engine.init_state(g, level_index, seed)
    rng = Splitmix64(derive_seed(walk_seed, 0x7A))
    actions = []
    while state.status == "Running" and len(actions) < max_moves:
        action = engine.ACTIONS[rng.randrange(5)]
        state, _ = engine.step(state, action, collect=False)
        actions.append(action)
    return actions


def solve_actions(g, level_index):
    report = agents.exhaustive_solve(g, level_index)
    assert report.winnable and not report.truncated
    return list(report.shortest_win)


def trace_specs(name, g):
    """(level, seed, actions) per trace; the fifth is purposeful, not random."""
    specs = []
    n_levels = len(g.levels)
    for i in range(4):
        lev = i % n_levels
        seed = 11 * (i + 1)
        moves = 18 + 9 * i
        specs.append((lev, seed, walk_actions(g, lev, seed, moves,
                                              1000 + 31 * i)))
    if name == "g4_alchemy_yard":
        # random movers make exhaustive play impractical; go long instead
        specs.append((0, 97, walk_actions(g, 0, 97, 60, 4242)))
    elif name == "g5_timer_gates":
        # all-Wait run onto the tick cap: the Timeout golden trace
        specs.append((0, 55, ["Wait"] * 50))
    else:
        specs.append((0, 77, solve_actions(g, 0)))
    return specs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve()
                                         .parent.parent / "conformance"))
    args = ap.parse_args(argv)
    out = pathlib.Path(args.out)
    (out / "games").mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(parents=True, exist_ok=True)

    manifest = []
    kinds_seen = collections.Counter()
    finals = collections.Counter()
    g4_fired = set()

    for name, build in GAMES:
        g = build()
        report = gdl.validate_game(g)
        assert report.ok(), (name, report.violations)
        text = gdl.serialize_game(g)
        assert gdl.parse_game(text) == g
        (out / "games" / f"{name}.json").write_text(text, encoding="utf-8")

        for tno, (lev, seed, actions) in enumerate(trace_specs(name, g), 1):
            # truncate at terminal so the recording never over-steps
            state = engine.init_state(g, lev, seed)
            kept = []
            for action in actions:
                if state.status != "Running":
                    break
                state, evs = engine.step(state, action)
                kept.append(action)
                for ev in evs:
                    kinds_seen[ev.kind] += 1
                    if name == "g4_alchemy_yard" and ev.kind in (
                            "Spawned", "Transformed", "VarChanged"):
                        g4_fired.add(ev.kind)
            assert kept, (name, tno)
            text_trace = trace.record_trace(text, lev, seed, kept)
            check = trace.verify_trace(text, text_trace)
            assert check.ok, (name, tno, check.message)
            finals[state.status] += 1
            fname = f"{name}_t{tno}.jsonl"
            (out / "traces" / fname).write_text(text_trace, encoding="utf-8")
            manifest.append({"game": f"games/{name}.json",
                             "trace": f"traces/{fname}",
                             "level": lev, "seed": seed,
                             "actions": len(kept), "final": state.status})

    want_kinds = {"Moved", "Blocked", "Destroyed", "RuleFired", "Sfx",
                  "VarChanged", "StatusChanged", "Spawned", "Transformed"}
    missing = want_kinds - set(kinds_seen)
    assert not missing, f"corpus never produced {sorted(missing)}"
    assert {"Spawned", "Transformed", "VarChanged"} <= g4_fired
    for status in ("Won", "Lost", "Timeout", "Running"):
        assert finals[status], f"no trace ends {status}"

    (out / "manifest.json").write_text(
        json.dumps({"games": len(GAMES), "traces": manifest}, indent=2)
        + "\n", encoding="utf-8")
    print(f"wrote {len(GAMES)} games, {len(manifest)} traces to {out}")
    print("event kinds:", dict(sorted(kinds_seen.items())))
    print("finals:", dict(sorted(finals.items())))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
