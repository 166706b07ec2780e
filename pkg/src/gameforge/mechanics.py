"""Mechanic invention: synthesize small rule blocks over abstract roles and
keep the ones that provably change what a player can do.

Test environments are tiny rooms whose pieces are literally named after the
roles (avatar, obstacle, hazard, target), each shipping with target cells
certified unreachable under its movement-plus-exit baseline. A candidate is
evaluated by appending its rules to the baseline and re-running the
exhaustive solver: interest requires a concrete witness — a newly reachable
cell or a fresh win — and a degeneracy filter rejects blocks that end the
game within one tick no matter what the player presses.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from . import agents, engine, gdl
from .rng import Splitmix64, derive_seed
from .rulesetdesign import SCORE_VAR, RulePattern, Catalogue


class MechanicsError(Exception):
    pass


class UncertifiedEnvironment(MechanicsError):
    pass


class NotInteresting(MechanicsError):
    pass


ROLES = ("avatar", "obstacle", "hazard", "target")


# ── domain types ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class MechanicCandidate:
    id: str            # digest of the normalized rules
    rules: tuple       # 1–2 gdl.Rule values over role names
    synth_seed: int


@dataclass(frozen=True)
class TestEnvironment:
    name: str
    definition: gdl.GameDefinition  # baseline: movement plus ExitToWin
    level: gdl.LevelDef
    target_cells: tuple             # certified unreachable at build time
    baseline_cells: frozenset = frozenset()
    certified: bool = False


@dataclass
class InterestReport:
    per_env: dict       # name -> newly_reachable_cells/newly_winnable/degenerate
    interesting: bool
    witness: dict | None = None


# ── built-in environments ─────────────────────────────────────────────

def _env_definition(name: str, extra_rules: tuple, level: gdl.LevelDef,
                    hazard_solid: bool = False) -> gdl.GameDefinition:
    pieces = (
        gdl.PieceDef(name="avatar", layer=5, sprite="fighter",
                     animated=True, flips=True, controlled=True),
        gdl.PieceDef(name="obstacle", layer=3, sprite="stonewall",
                     animated=False, flips=False, solid=True),
        gdl.PieceDef(name="hazard", layer=4, sprite="spikes",
                     animated=False, flips=False, solid=hazard_solid),
        gdl.PieceDef(name="target", layer=4, sprite="door",
                     animated=False, flips=False),
    )
    exit_to_win = gdl.Rule(gdl.parse_trigger("OVERLAP avatar target"), (),
                           (gdl.parse_command("DESTROY $1"), gdl.Win()))
    return gdl.GameDefinition(
        gamename=name, numplayers=1, floor="slate", music="drone",
        color_accent=gdl.ColorTriple(0.8, 0.3, 0.2),
        color_body=gdl.ColorTriple(0.2, 0.2, 0.3),
        variables=(SCORE_VAR,), pieces=pieces,
        rules=(exit_to_win,) + extra_rules, levels=(level,))


def _grid(w, h, cells):
    data = [0] * (w * h)
    for (x, y), code in cells.items():
        data[y * w + x] = code
    return gdl.LevelDef(width=w, height=h, data=tuple(data))


def _wall_gap() -> tuple:
    cells = {(4, y): 2 for y in range(5)}  # solid column seals the room
    cells[(1, 2)] = 1
    cells[(5, 2)] = 4
    level = _grid(7, 5, cells)
    targets = tuple((x, y) for x in (4, 5, 6) for y in range(5))
    return _env_definition("wallgap", (), level), level, targets


def _locked_chamber() -> tuple:
    ring = {(x, y) for x in (2, 3, 4) for y in (2, 3, 4)} - {(3, 3)}
    cells = {c: 2 for c in ring}
    cells[(3, 3)] = 4
    cells[(0, 3)] = 1
    level = _grid(7, 7, cells)
    targets = tuple(sorted(ring)) + ((3, 3),)
    return _env_definition("lockedchamber", (), level), level, targets


def _hazard_corridor() -> tuple:
    cells = {(3, y): 3 for y in range(5)}  # deadly but not solid
    cells[(1, 2)] = 1
    cells[(5, 2)] = 4
    level = _grid(7, 5, cells)
    kill = gdl.Rule(gdl.parse_trigger("OVERLAP avatar hazard"), (),
                    (gdl.parse_command("DESTROY $1"),))
    drop = gdl.Rule(gdl.parse_trigger("COUNT avatar EQ 0"), (), (gdl.Lose(),))
    targets = tuple((x, y) for x in (4, 5, 6) for y in range(5))
    return _env_definition("hazardcorridor", (kill, drop), level), level, targets


def builtin_environments(state_cap: int = 50000) -> list:
    """Build the three stock rooms and certify their shipped target cells
    against the exhaustive solver."""
    envs = []
    for build in (_wall_gap, _locked_chamber, _hazard_corridor):
        definition, level, targets = build()
        report = agents.exhaustive_solve(definition, 0, state_cap=state_cap)
        cells = frozenset(report.reachable_cells["avatar"])
        if report.truncated or report.winnable or \
                cells & set(targets):
            raise MechanicsError(
                f"certification failed for {definition.gamename}")
        envs.append(TestEnvironment(definition.gamename, definition, level,
                                    targets, cells, certified=True))
    return envs


# ── candidate synthesis ───────────────────────────────────────────────

@dataclass(frozen=True)
class MechanicVocab:
    roles: tuple = ROLES
    sfx_names: tuple = ("ding", "crash", "zap")
    variables: tuple = ("score",)
    tick_choices: tuple = (1, 5, 10, 25, 100)
    values: tuple = (0, 1, 2, 3)


@dataclass(frozen=True)
class SynthBounds:
    max_rules: int = 2
    max_commands: int = 4  # per rule, per the candidate invariant
    fixed_trigger: str | None = None


def default_vocab() -> MechanicVocab:
    return MechanicVocab()


def _swap_bindings(c):
    flip = {1: 2, 2: 1}
    if isinstance(c, gdl.Destroy) and isinstance(c.target, int):
        return gdl.Destroy(flip[c.target])
    if isinstance(c, gdl.Spawn):
        return replace(c, at_binding=flip[c.at_binding])
    if isinstance(c, gdl.Transform):
        return replace(c, binding=flip[c.binding])
    return c


def _normalize_rule(rule: gdl.Rule) -> gdl.Rule:
    """OVERLAP operands in lexical order, with $1/$2 swapped to match."""
    t = rule.trigger
    if isinstance(t, gdl.OverlapTrigger) and t.piece_a > t.piece_b:
        t = gdl.OverlapTrigger(t.piece_b, t.piece_a)
        return gdl.Rule(t, rule.guards,
                        tuple(_swap_bindings(c) for c in rule.code))
    return rule


def _rule_key(rule: gdl.Rule) -> tuple:
    return (gdl.trigger_text(rule.trigger),
            tuple(gdl.guard_text(g) for g in rule.guards),
            tuple(gdl.command_text(c) for c in rule.code))


def candidate_id(rules: tuple) -> str:
    blob = json.dumps([_rule_key(_normalize_rule(r)) for r in rules])
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _random_trigger(rng, vocab, bounds):
    if bounds.fixed_trigger is not None:
        return gdl.parse_trigger(bounds.fixed_trigger)
    kind = rng.randrange(4)
    if kind == 0:
        return gdl.OverlapTrigger(rng.choice(vocab.roles),
                                  rng.choice(vocab.roles))
    if kind == 1:
        return gdl.TickTrigger(rng.choice(vocab.tick_choices))
    cmp = rng.choice(("EQ", "GTE", "LTE"))
    if kind == 2:
        return gdl.VarTrigger(rng.choice(vocab.variables), cmp,
                              rng.choice(vocab.values))
    return gdl.CountTrigger(rng.choice(vocab.roles), cmp,
                            rng.choice(vocab.values))


def _random_command(rng, vocab, has_bindings):
    kind = rng.randrange(9 if has_bindings else 6)
    if kind == 0:
        return gdl.Destroy(rng.choice(vocab.roles))
    if kind == 1:
        return gdl.Sfx(rng.choice(vocab.sfx_names))
    if kind == 2:
        return gdl.Score(1 + rng.randrange(3))
    if kind == 3:
        var = rng.choice(vocab.variables)
        if rng.randrange(2):
            return gdl.SetVar(var, rng.choice(vocab.values))
        return gdl.AddVar(var, 1 + rng.randrange(3))
    if kind == 4:
        return gdl.Win()
    if kind == 5:
        return gdl.Lose()
    if kind == 6:
        return gdl.Destroy(1 + rng.randrange(2))
    if kind == 7:
        return gdl.Spawn(rng.choice(vocab.roles), 1 + rng.randrange(2))
    return gdl.Transform(1 + rng.randrange(2), rng.choice(vocab.roles))


def _random_rule(rng, vocab, bounds) -> gdl.Rule:
    trigger = _random_trigger(rng, vocab, bounds)
    has_bindings = isinstance(trigger, gdl.OverlapTrigger)
    guards = ()
    if rng.randrange(4) == 0:
        guards = (gdl.Guard(rng.choice(vocab.variables),
                            rng.choice(("EQ", "GTE", "LTE")),
                            rng.choice(vocab.values)),)
    n = 1 + rng.randrange(bounds.max_commands)
    code = tuple(_random_command(rng, vocab, has_bindings) for _ in range(n))
    return _normalize_rule(gdl.Rule(trigger, guards, code))


def synthesize_candidates(vocab: MechanicVocab, bounds: SynthBounds,
                          count: int, seed: int) -> list:
    """Sample `count` distinct normalized candidates (fewer only if the
    bounded space is smaller than asked)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = Splitmix64(derive_seed(seed, 17))
    out = []
    seen = set()
    for _ in range(count * 300):
        n_rules = 1 + rng.randrange(bounds.max_rules)
        rules = tuple(_random_rule(rng, vocab, bounds)
                      for _ in range(n_rules))
        cid = candidate_id(rules)
        if cid in seen:
            continue
        seen.add(cid)
        out.append(MechanicCandidate(cid, rules, seed))
        if len(out) == count:
            break
    return out


# ── evaluation ────────────────────────────────────────────────────────

def evaluate_candidate(m: MechanicCandidate, envs: list,
                       state_cap: int = 200000) -> InterestReport:
    """Append the candidate to each baseline and diff what the exhaustive
    solver can reach; truncation is conservatively degenerate."""
    per_env = {}
    witness = None
    any_positive = False
    all_degenerate = True
    for env in envs:
        if not env.certified:
            raise UncertifiedEnvironment(env.name)
        augmented = replace(env.definition,
                            rules=env.definition.rules + tuple(m.rules))
        report = agents.exhaustive_solve(augmented, 0, state_cap=state_cap)
        new_cells = sorted(set(report.reachable_cells["avatar"])
                           - env.baseline_cells)
        newly_winnable = report.winnable  # baselines are never winnable

        start = engine.init_state(augmented, 0, 0)
        degenerate = report.truncated or all(
            engine.step(start, a, collect=False)[0].status in ("Won", "Lost")
            for a in engine.ACTIONS)

        per_env[env.name] = {"newly_reachable_cells": new_cells,
                             "newly_winnable": newly_winnable,
                             "degenerate": degenerate}
        positive = bool(new_cells) or newly_winnable
        any_positive = any_positive or positive
        all_degenerate = all_degenerate and degenerate
        if positive and witness is None:
            witness = {"environment": env.name,
                       "cell": list(new_cells[0]) if new_cells else None,
                       "win": report.shortest_win if newly_winnable else None}

    interesting = any_positive and not all_degenerate
    return InterestReport(per_env, interesting,
                          witness if interesting else None)


# ── banking ───────────────────────────────────────────────────────────

def bank_mechanic(m: MechanicCandidate, report: InterestReport,
                  c: Catalogue) -> Catalogue:
    """Wrap an interesting candidate as a catalogue pattern; banking the
    same id twice is a no-op."""
    if not report.interesting:
        raise NotInteresting(m.id)
    provenance = f"banked:{m.id}"
    if any(p.provenance == provenance for p in c.patterns):
        return c

    used = set()
    uses_score = False
    for r in m.rules:
        t = r.trigger
        if isinstance(t, gdl.OverlapTrigger):
            used |= {t.piece_a, t.piece_b}
        elif isinstance(t, gdl.CountTrigger):
            used.add(t.piece)
        elif isinstance(t, gdl.VarTrigger):
            uses_score = uses_score or t.var == "score"
        for cmd in r.code:
            if isinstance(cmd, gdl.Destroy) and isinstance(cmd.target, str):
                used.add(cmd.target)
            elif isinstance(cmd, (gdl.Spawn, gdl.Transform)):
                used.add(cmd.piece)
            elif isinstance(cmd, gdl.Score):
                uses_score = True
            elif isinstance(cmd, (gdl.SetVar, gdl.AddVar)):
                uses_score = uses_score or cmd.var == "score"
        uses_score = uses_score or any(g.var == "score" for g in r.guards)

    pattern = RulePattern(
        pattern_name=f"Banked_{m.id[:8]}",
        roles=tuple(role for role in ROLES if role in used),
        rule_templates=tuple(m.rules),
        required_vars=(SCORE_VAR,) if uses_score else (),
        provenance=provenance)
    return Catalogue(c.patterns + [pattern], version=c.version + 1)
