"""Ruleset assembly from a catalogue of rule patterns, and potential testing.

A pattern is a small bundle of rule templates whose piece names are role
placeholders (avatar, hazard, token, ...). Assembly samples patterns,
binds roles to skeleton pieces (avatars only to controlled pieces), and
splices the instantiated rules and any required variables into the
skeleton. Potential testing then plays the result on two fixed template
rooms and asks the weakest useful questions: does every rule fire at
least once, and does the game ever end?
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from . import agents, gdl
from .rng import Splitmix64, derive_seed


class RulesetError(Exception):
    pass


class UnboundRole(RulesetError):
    pass


class UnknownPiece(RulesetError):
    pass


class InsufficientPieces(RulesetError):
    pass


class CatalogueTooSmall(RulesetError):
    pass


# ── catalogue types ───────────────────────────────────────────────────

@dataclass(frozen=True)
class RulePattern:
    pattern_name: str
    roles: tuple           # role names appearing as piece names in templates
    rule_templates: tuple  # gdl.Rule values over role names
    required_vars: tuple   # gdl.VariableDef values, renamed on collision
    provenance: str = "seeded"  # "seeded" or "banked:<mechanic id>"


@dataclass
class Catalogue:
    patterns: list
    version: int = 1

    def names(self):
        return [p.pattern_name for p in self.patterns]


def _pattern(name, roles, rules, variables=(), provenance="seeded"):
    templates = tuple(
        gdl.Rule(gdl.parse_trigger(trig),
                 tuple(gdl.parse_guard(x) for x in guards),
                 tuple(gdl.parse_command(c) for c in code))
        for trig, guards, code in rules)
    return RulePattern(name, tuple(roles), templates, tuple(variables),
                       provenance)


SCORE_VAR = gdl.VariableDef(name="score", onscreen="Score", startvalue=0)


def seed_catalogue() -> Catalogue:
    """The built-in patterns: stock mechanics from well-known genres."""
    patterns = [
        _pattern("ExitToWin", ["avatar", "target"],
                 [("OVERLAP avatar target", [], ["DESTROY $1", "WIN"])]),
        _pattern("KillOnTouch", ["avatar", "hazard"],
                 [("OVERLAP avatar hazard", [],
                   ["DESTROY $2", "SFX punch", "SCORE 1"])],
                 [SCORE_VAR]),
        _pattern("HazardKillsPlayer", ["avatar", "hazard"],
                 [("OVERLAP avatar hazard", [], ["DESTROY $1"]),
                  ("COUNT avatar EQ 0", [], ["LOSE"])]),
        _pattern("LockAndKey", ["avatar", "token", "door"],
                 [("OVERLAP avatar token", [],
                   ["DESTROY $2", "SET haskey 1"]),
                  ("OVERLAP avatar door", ["VAR haskey GTE 1"],
                   ["DESTROY $2"])],
                 [gdl.VariableDef(name="haskey", onscreen="Key",
                                  startvalue=0)]),
        _pattern("CollectAll", ["avatar", "token"],
                 [("OVERLAP avatar token", [], ["DESTROY $2", "SCORE 1"]),
                  ("COUNT token EQ 0", [], ["WIN"])],
                 [SCORE_VAR]),
        _pattern("TimedLoss", [],
                 [("TICK 100", [], ["LOSE"])]),
    ]
    return Catalogue(patterns, version=1)


# ── instantiation ─────────────────────────────────────────────────────

def _sub_name(name, table):
    return table.get(name, name)


def _sub_rule(rule: gdl.Rule, pieces: dict, varmap: dict) -> gdl.Rule:
    t = rule.trigger
    if isinstance(t, gdl.OverlapTrigger):
        t = gdl.OverlapTrigger(_sub_name(t.piece_a, pieces),
                               _sub_name(t.piece_b, pieces))
    elif isinstance(t, gdl.CountTrigger):
        t = replace(t, piece=_sub_name(t.piece, pieces))
    elif isinstance(t, gdl.VarTrigger):
        t = replace(t, var=_sub_name(t.var, varmap))
    guards = tuple(replace(gd, var=_sub_name(gd.var, varmap))
                   for gd in rule.guards)
    code = []
    for c in rule.code:
        if isinstance(c, gdl.Destroy) and isinstance(c.target, str):
            c = gdl.Destroy(_sub_name(c.target, pieces))
        elif isinstance(c, gdl.Spawn):
            c = replace(c, piece=_sub_name(c.piece, pieces))
        elif isinstance(c, gdl.Transform):
            c = replace(c, piece=_sub_name(c.piece, pieces))
        elif isinstance(c, (gdl.SetVar, gdl.AddVar)):
            c = replace(c, var=_sub_name(c.var, varmap))
        code.append(c)
    return gdl.Rule(t, guards, tuple(code))


def instantiate_pattern(p: RulePattern, binding: dict,
                        g: gdl.GameDefinition) -> tuple:
    """Substitute roles per `binding`; returns (rules, new variables).

    Required variables are renamed name → name_2, name_3... when the game
    already defines them — except `score`, which SCORE hard-targets, so an
    existing score variable is reused as-is.
    """
    for role in p.roles:
        if role not in binding:
            raise UnboundRole(role)
    known = {pc.name for pc in g.pieces}
    for role, piece in binding.items():
        if piece not in known:
            raise UnknownPiece(piece)

    taken = {v.name for v in g.variables}
    varmap: dict = {}
    new_vars = []
    for v in p.required_vars:
        if v.name == "score":
            if v.name not in taken:
                new_vars.append(v)
                taken.add(v.name)
            continue
        name = v.name
        k = 2
        while name in taken:
            name = f"{v.name}_{k}"
            k += 1
        taken.add(name)
        varmap[v.name] = name
        new_vars.append(replace(v, name=name))

    rules = tuple(_sub_rule(r, dict(binding), varmap)
                  for r in p.rule_templates)
    return rules, tuple(new_vars)


# ── assembly ──────────────────────────────────────────────────────────

def _has_terminal(p: RulePattern) -> bool:
    return any(isinstance(c, (gdl.Win, gdl.Lose))
               for r in p.rule_templates for c in r.code)


def assemble_ruleset(c: Catalogue, g_skeleton: gdl.GameDefinition,
                     n_patterns: int, seed: int) -> gdl.GameDefinition:
    """Sample patterns without replacement, bind roles over the skeleton's
    pieces, and splice the result in; at least one sampled pattern always
    carries a WIN or LOSE."""
    controlled = [pc.name for pc in g_skeleton.pieces if pc.controlled]
    if len(g_skeleton.pieces) < 2 or not controlled:
        raise InsufficientPieces(
            "skeleton needs >= 2 pieces including a controlled one")
    if n_patterns > len(c.patterns):
        raise CatalogueTooSmall(
            f"asked for {n_patterns} patterns, catalogue has "
            f"{len(c.patterns)}")

    rng = Splitmix64(derive_seed(seed, 7))
    remaining = list(c.patterns)
    sampled = []
    for _ in range(n_patterns):
        sampled.append(remaining.pop(rng.randrange(len(remaining))))
    if not any(_has_terminal(p) for p in sampled):
        terminal = [p for p in remaining if _has_terminal(p)]
        if not terminal:
            raise CatalogueTooSmall("no pattern with WIN or LOSE available")
        sampled[-1] = terminal[rng.randrange(len(terminal))]

    all_names = [pc.name for pc in g_skeleton.pieces]
    game = g_skeleton
    rules = list(g_skeleton.rules)
    for p in sampled:
        binding = {}
        for role in p.roles:
            pool = controlled if role == "avatar" else all_names
            binding[role] = pool[rng.randrange(len(pool))]
        new_rules, new_vars = instantiate_pattern(p, binding, game)
        rules.extend(new_rules)
        game = replace(game, variables=game.variables + new_vars)
    return replace(game, rules=tuple(rules))


# ── potential testing ─────────────────────────────────────────────────

@dataclass
class PotentialBudget:
    random_episodes: int = 20
    mcts_episodes: int = 3
    episode_ticks: int = 150
    mcts: agents.MctsParams = field(default_factory=lambda: agents.MctsParams(
        iterations=40, rollout_depth=12))
    mcts_moves: int = 60
    seed: int = 0


@dataclass
class PotentialReport:
    per_template: list      # CoverageSummary per template room
    overall: dict           # all_rules_firable / terminates / winnable
    verdict: str            # "promising" | "dead"
    witnesses: dict         # rule index -> first firing location


def _border_cells(w: int, h: int) -> list:
    cells = [(x, 0) for x in range(w)]
    cells += [(w - 1, y) for y in range(1, h)]
    cells += [(x, h - 1) for x in range(w - 2, -1, -1)]
    cells += [(0, y) for y in range(h - 2, 0, -1)]
    return cells


def _template_one(g: gdl.GameDefinition) -> gdl.LevelDef:
    """7×7 empty room: controlled pieces around the center, the rest spaced
    along the border."""
    w = h = 7
    grid = [0] * (w * h)
    center = [(3, 3), (3, 2), (2, 3), (4, 3), (3, 4)]
    controlled = [i for i, pc in enumerate(g.pieces) if pc.controlled]
    others = [i for i, pc in enumerate(g.pieces) if not pc.controlled]
    for slot, idx in enumerate(controlled):
        x, y = center[slot % len(center)]
        grid[y * w + x] = idx + 1
    border = _border_cells(w, h)
    for slot, idx in enumerate(others):
        x, y = border[(slot * len(border)) // max(1, len(others))]
        grid[y * w + x] = idx + 1
    return gdl.LevelDef(width=w, height=h, data=tuple(grid))


def _template_two(g: gdl.GameDefinition, seed: int) -> gdl.LevelDef:
    """7×7 room with every piece duplicated twice at seeded positions, so
    COUNT thresholds above one are exercisable."""
    w = h = 7
    grid = [0] * (w * h)
    rng = Splitmix64(derive_seed(seed, 13))
    for idx in range(len(g.pieces)):
        for _ in range(2):
            while True:
                x, y = rng.randrange(w), rng.randrange(h)
                if grid[y * w + x] == 0:
                    grid[y * w + x] = idx + 1
                    break
    return gdl.LevelDef(width=w, height=h, data=tuple(grid))


def test_potential(g: gdl.GameDefinition,
                   budget: PotentialBudget | None = None) -> PotentialReport:
    """Play the ruleset on the template rooms; promising ⇔ every rule fired
    at least once and some episode actually ended."""
    budget = budget or PotentialBudget()
    templates = [_template_one(g), _template_two(g, budget.seed)]
    per_template = []
    witnesses: dict = {}
    terminates = False
    winnable = False

    for ti, level in enumerate(templates):
        candidate = replace(g, levels=(level,))
        traces = []
        runs = [("random", i, lambda i=i: agents.random_episode(
                    candidate, 0, derive_seed(budget.seed, 100 + ti, i),
                    max_ticks=budget.episode_ticks, record_events=False))
                for i in range(budget.random_episodes)]
        runs += [("mcts", i, lambda i=i: agents.mcts_episode(
                    candidate, 0, budget.mcts,
                    derive_seed(budget.seed, 200 + ti, i),
                    max_moves=budget.mcts_moves, record_events=False))
                 for i in range(budget.mcts_episodes)]
        for agent, i, run in runs:
            t = run()
            traces.append(t)
            for rule in sorted(t.rules_fired):
                witnesses.setdefault(rule, {"template": ti, "agent": agent,
                                            "episode": i})
            if t.outcome in ("Won", "Lost"):
                terminates = True
            if t.outcome == "Won":
                winnable = True
        per_template.append(agents.coverage_metrics(traces, g))

    all_fire = set(witnesses) == set(range(len(g.rules)))
    overall = {"all_rules_firable": all_fire, "terminates": terminates,
               "winnable": winnable}
    verdict = "promising" if (all_fire and terminates) else "dead"
    return PotentialReport(per_template, overall, verdict, witnesses)


# ── persistence ───────────────────────────────────────────────────────

def catalogue_to_json(c: Catalogue) -> str:
    docs = []
    for p in c.patterns:
        docs.append({
            "pattern_name": p.pattern_name,
            "roles": list(p.roles),
            "rules": [{"trigger": gdl.trigger_text(r.trigger),
                       "guards": [gdl.guard_text(gd) for gd in r.guards],
                       "code": [gdl.command_text(cm) for cm in r.code]}
                      for r in p.rule_templates],
            "required_vars": [{"name": v.name, "onscreen": v.onscreen,
                               "startvalue": v.startvalue}
                              for v in p.required_vars],
            "provenance": p.provenance,
        })
    return json.dumps({"version": c.version, "patterns": docs},
                      indent=2) + "\n"


def catalogue_from_json(text: str) -> Catalogue:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RulesetError(f"bad catalogue JSON: {exc}") from None
    patterns = []
    for pd in doc.get("patterns", []):
        patterns.append(_pattern(
            pd["pattern_name"], pd["roles"],
            [(r["trigger"], r.get("guards", []), r["code"])
             for r in pd["rules"]],
            [gdl.VariableDef(name=v["name"], onscreen=v["onscreen"],
                             startvalue=v["startvalue"])
             for v in pd.get("required_vars", [])],
            pd.get("provenance", "seeded")))
    names = [p.pattern_name for p in patterns]
    if len(set(names)) != len(names):
        raise RulesetError("duplicate pattern names in catalogue")
    return Catalogue(patterns, version=int(doc.get("version", 1)))
