"""Command-line front end.

Subcommands mirror the package layout: `play` and trace verification for
the engine and agents, `level gen` for evolution, `ruleset assemble/test`
for the catalogue, `mechanic mine` for invention, and `studio run/status/
export` for the long-running loop.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import agents, gdl, leveldesign, mechanics, rulesetdesign, studio, trace


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def _write(path: str, text: str) -> None:
    with open(path, "w") as f:
        f.write(text)


def _params_from(path: str | None) -> agents.MctsParams:
    p = agents.MctsParams()
    if path:
        p = dataclasses.replace(p, **json.loads(_read(path)))
    return p


# ── play / verify ────────────────────────────────────────────────────────


def _cmd_play(args) -> int:
    text = _read(args.game)
    if args.verify:
        result = trace.verify_trace(text, _read(args.verify))
        print(("accepted: " if result.ok else "rejected: ") + result.message)
        return 0 if result.ok else 1
    g = gdl.parse_game(text)
    if args.agent == "solve":
        rep = agents.exhaustive_solve(g, args.level)
        doc = {"winnable": rep.winnable, "truncated": rep.truncated,
               "states": len(rep.reachable_hashes),
               "shortest_win": rep.shortest_win}
        print(json.dumps(doc, indent=2))
        if args.trace and rep.winnable:
            _write(args.trace,
                   trace.record_trace(text, args.level, args.seed,
                                      rep.shortest_win))
        return 0
    if args.agent == "random":
        t = agents.random_episode(g, args.level, args.seed)
    else:
        t = agents.mcts_episode(g, args.level, _params_from(args.params),
                                args.seed)
    print(f"{t.outcome} after {t.ticks} ticks, "
          f"{len(t.rules_fired)} rules fired, {t.unique_states} states")
    if args.trace:
        _write(args.trace,
               trace.record_trace(text, args.level, args.seed, t.actions))
    return 0


# ── level gen ────────────────────────────────────────────────────────────


def _cmd_level_gen(args) -> int:
    text = _read(args.game)
    g = gdl.parse_game(text)
    params = leveldesign.EvolveParams()
    level, fit, log = leveldesign.evolve_level(g, params, args.seed)
    g2 = dataclasses.replace(g, levels=g.levels + (level,))
    _write(args.out, gdl.serialize_game(g2))
    if args.log:
        _write(args.log, "".join(json.dumps(entry) + "\n" for entry in log))
    print(f"level {len(g2.levels) - 1}: score {fit.score:.3f} "
          f"mcts_won {fit.mcts_won} playable {fit.playable}")
    return 0


# ── ruleset ──────────────────────────────────────────────────────────────


def _load_catalogue(path: str | None) -> rulesetdesign.Catalogue:
    if path and os.path.exists(path):
        return rulesetdesign.catalogue_from_json(_read(path))
    return rulesetdesign.seed_catalogue()


def _cmd_ruleset_assemble(args) -> int:
    cat = _load_catalogue(args.catalogue)
    g = gdl.parse_game(_read(args.game))
    assembled = rulesetdesign.assemble_ruleset(cat, g, args.patterns,
                                               args.seed)
    out = args.out or args.game
    _write(out, gdl.serialize_game(assembled))
    print(f"{len(assembled.rules)} rules from catalogue v{cat.version} "
          f"-> {out}")
    return 0


def _cmd_ruleset_test(args) -> int:
    g = gdl.parse_game(_read(args.game))
    budget = rulesetdesign.PotentialBudget(seed=args.seed)
    rep = rulesetdesign.test_potential(g, budget)
    doc = {"verdict": rep.verdict, "overall": rep.overall,
           "witnesses": {str(k): v for k, v in rep.witnesses.items()}}
    print(json.dumps(doc, indent=2))
    return 0 if rep.verdict == "promising" else 1


# ── mechanic mine ────────────────────────────────────────────────────────


def _cmd_mechanic_mine(args) -> int:
    cat = _load_catalogue(args.catalogue)
    envs = mechanics.builtin_environments()
    vocab = mechanics.MechanicVocab()
    bounds = mechanics.SynthBounds()
    candidates = mechanics.synthesize_candidates(vocab, bounds, args.count,
                                                 args.seed)
    rows = []
    banked = 0
    for cand in candidates:
        rep = mechanics.evaluate_candidate(cand, envs)
        if rep.interesting:
            cat = mechanics.bank_mechanic(cand, rep, cat)
            banked += 1
        rows.append({
            "id": cand.id,
            "rules": [gdl.trigger_text(r.trigger) for r in cand.rules],
            "interesting": rep.interesting,
            "per_env": rep.per_env,
        })
    if args.report:
        _write(args.report, json.dumps(rows, indent=2) + "\n")
    if args.catalogue:
        _write(args.catalogue, rulesetdesign.catalogue_to_json(cat))
    print(f"evaluated {len(candidates)}, banked {banked}, "
          f"catalogue v{cat.version}")
    return 0


# ── studio ───────────────────────────────────────────────────────────────


def _config_from_json(path: str | None, workspace: str | None) -> studio.StudioConfig:
    cfg = studio.StudioConfig()
    if path:
        doc = json.loads(_read(path))
        if "ga" in doc:
            ga = doc.pop("ga")
            if "mcts" in ga:
                ga["mcts"] = agents.MctsParams(**ga["mcts"])
            cfg.ga = dataclasses.replace(cfg.ga, **ga)
        if "potential" in doc:
            pot = doc.pop("potential")
            if "mcts" in pot:
                pot["mcts"] = agents.MctsParams(**pot["mcts"])
            cfg.potential = dataclasses.replace(cfg.potential, **pot)
        cfg = dataclasses.replace(cfg, **doc)
    if workspace:
        cfg.workspace = workspace
    return cfg


def _cmd_studio_run(args) -> int:
    cfg = _config_from_json(args.config, args.workspace)
    kb, events = studio.run_studio(cfg, args.seed, args.steps)
    for ev in events:
        print(f"{ev.step:5d} {ev.activity:18s} {ev.summary}")
    print(f"knowledge base digest {studio.kb_digest(kb)}")
    return 0


def _cmd_studio_status(args) -> int:
    ws = args.workspace or os.environ.get(studio.ENV_WORKSPACE)
    if not ws:
        print("no workspace given", file=sys.stderr)
        return 2
    print(json.dumps(studio.status_summary(ws), indent=2))
    return 0


def _cmd_studio_export(args) -> int:
    ws = args.workspace or os.environ.get(studio.ENV_WORKSPACE)
    if not ws:
        print("no workspace given", file=sys.stderr)
        return 2
    kb = studio.load_workspace(ws)
    try:
        p = kb.project(args.project)
    except KeyError:
        print(f"no project {args.project}", file=sys.stderr)
        return 2
    try:
        path = studio.export_game(p, ws)
    except studio.StudioError as e:
        print(f"export refused: {e}", file=sys.stderr)
        return 1
    print(path)
    return 0


# ── parser ───────────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gameforge")
    sub = ap.add_subparsers(dest="command", required=True)

    play = sub.add_parser("play", help="run an agent episode or verify a trace")
    play.add_argument("--game", required=True)
    play.add_argument("--level", type=int, default=0)
    play.add_argument("--agent", choices=("random", "mcts", "solve"),
                      default="random")
    play.add_argument("--seed", type=int, default=0)
    play.add_argument("--params", help="JSON file of MCTS parameter overrides")
    play.add_argument("--trace", help="write the episode trace here")
    play.add_argument("--verify", help="verify this trace file instead")
    play.set_defaults(fn=_cmd_play)

    level = sub.add_parser("level", help="level generation")
    level_sub = level.add_subparsers(dest="subcommand", required=True)
    gen_p = level_sub.add_parser("gen", help="evolve a level for a game")
    gen_p.add_argument("--game", required=True)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", required=True)
    gen_p.add_argument("--log", help="JSON Lines per-generation log")
    gen_p.set_defaults(fn=_cmd_level_gen)

    ruleset = sub.add_parser("ruleset", help="catalogue operations")
    rs_sub = ruleset.add_subparsers(dest="subcommand", required=True)
    asm = rs_sub.add_parser("assemble", help="fill a skeleton with patterns")
    asm.add_argument("--catalogue", help="catalogue JSON (seeded if absent)")
    asm.add_argument("--game", required=True)
    asm.add_argument("--patterns", type=int, default=2)
    asm.add_argument("--seed", type=int, default=0)
    asm.add_argument("--out")
    asm.set_defaults(fn=_cmd_ruleset_assemble)
    tst = rs_sub.add_parser("test", help="potential-test a game's ruleset")
    tst.add_argument("--game", required=True)
    tst.add_argument("--seed", type=int, default=0)
    tst.set_defaults(fn=_cmd_ruleset_test)

    mech = sub.add_parser("mechanic", help="mechanic mining")
    m_sub = mech.add_subparsers(dest="subcommand", required=True)
    mine = m_sub.add_parser("mine", help="synthesize and evaluate candidates")
    mine.add_argument("--count", type=int, default=10)
    mine.add_argument("--seed", type=int, default=0)
    mine.add_argument("--catalogue", help="bank results into this file")
    mine.add_argument("--report", help="write per-candidate JSON here")
    mine.set_defaults(fn=_cmd_mechanic_mine)

    st = sub.add_parser("studio", help="the continuous design loop")
    st_sub = st.add_subparsers(dest="subcommand", required=True)
    run = st_sub.add_parser("run")
    run.add_argument("--workspace", default=None)
    run.add_argument("--steps", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--config", help="JSON config overrides")
    run.set_defaults(fn=_cmd_studio_run)
    status = st_sub.add_parser("status")
    status.add_argument("--workspace", default=None)
    status.set_defaults(fn=_cmd_studio_status)
    export = st_sub.add_parser("export")
    export.add_argument("--workspace", default=None)
    export.add_argument("--project", required=True)
    export.set_defaults(fn=_cmd_studio_export)

    return ap


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (gdl.GdlError, trace.TraceFormatError, rulesetdesign.RulesetError,
            mechanics.MechanicsError, leveldesign.LevelDesignError,
            studio.StudioError, agents.AgentError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
