"""Deterministic turn-based simulation of one level of a game definition.

A step runs four phases in fixed order:

1. movement — every `controlled` instance attempts one cell in the input
   direction (Wait = none), in instance-id order; moves into solid pieces or
   off-grid are Blocked no-ops;
2. behaviors — non-controlled instances act (static / chase / random), with
   solidity respected; random draws come from the state's own generator;
3. rules — evaluated in definition order; OVERLAP pairs are enumerated in
   row-major cell order then instance-id order; commands apply immediately;
   VAR and COUNT triggers are edge-triggered (fire once per false→true
   transition of trigger-and-guards); WIN/LOSE freeze the state and halt the
   rest of the rule phase;
4. tick increments; a Running state whose tick reaches tick_cap times out.

Extension — bump contacts: every blocked move attempt (phases 1 and 2)
records a transient (mover, solid blocker) contact pair, and OVERLAP rules
match those pairs in phase 3 of the same step in addition to co-located
pairs. That is what lets a rule like `OVERLAP avatar wall → DESTROY $2`
carve through solid geometry, which pure co-location could never trigger.

Stepping never mutates its input; it returns a fresh state plus the events
that fully explain the delta.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache

from . import gdl
from .rng import MASK64, splitmix64

ACTIONS = ("Up", "Down", "Left", "Right", "Wait")
# random-behavior draws map rng % 4 onto this prefix
DIR_DELTAS = {"Up": (0, -1), "Down": (0, 1), "Left": (-1, 0), "Right": (1, 0),
              "Wait": (0, 0)}

STATIC, CHASE, RANDOM = 0, 1, 2
_BEHAVIOR_CODE = {"static": STATIC, "chase": CHASE, "random": RANDOM}

# compiled command opcodes
(OP_DESTROY_BINDING, OP_DESTROY_PIECE, OP_SFX, OP_SCORE, OP_SET, OP_ADD,
 OP_WIN, OP_LOSE, OP_SPAWN, OP_TRANSFORM) = range(10)

TRIG_OVERLAP, TRIG_TICK, TRIG_VAR, TRIG_COUNT = range(4)

EQ, GTE, LTE = range(3)
_CMP_CODE = {"EQ": EQ, "GTE": GTE, "LTE": LTE}


class EngineError(Exception):
    pass


class LevelIndexOutOfRange(EngineError):
    pass


class SteppingTerminalState(EngineError):
    pass


class InvalidDefinition(EngineError):
    def __init__(self, report: gdl.ValidationReport):
        super().__init__(f"definition has {len(report.violations)} violation(s): "
                         + "; ".join(str(v) for v in report.violations[:3]))
        self.report = report


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    kind: str
    payload: dict


class _CompiledRule:
    __slots__ = ("kind", "a", "b", "cmp", "value", "guards", "code", "edge")

    def __init__(self, kind, a, b, cmp, value, guards, code):
        self.kind = kind
        self.a = a          # OVERLAP piece-a index / VAR name / COUNT piece index
        self.b = b          # OVERLAP piece-b index / TICK interval
        self.cmp = cmp
        self.value = value
        self.guards = guards  # tuple of (var, cmp_code, value)
        self.code = code
        self.edge = kind in (TRIG_VAR, TRIG_COUNT)


class CompiledLevel:
    """Definition-plus-level lookup tables shared by every state of an episode."""

    __slots__ = ("game", "level_index", "width", "height", "piece_names",
                 "solid", "controlled", "behavior", "rules", "has_tick_rules",
                 "tick_cap", "start_instances")

    def __init__(self, g: gdl.GameDefinition, level_index: int):
        level = g.levels[level_index]
        self.game = g
        self.level_index = level_index
        self.width = level.width
        self.height = level.height
        self.piece_names = tuple(p.name for p in g.pieces)
        self.solid = tuple(p.solid for p in g.pieces)
        self.controlled = tuple(p.controlled for p in g.pieces)
        self.behavior = tuple(_BEHAVIOR_CODE[p.behavior] for p in g.pieces)
        index = {name: i for i, name in enumerate(self.piece_names)}
        self.rules = tuple(_compile_rule(r, index) for r in g.rules)
        self.has_tick_rules = any(r.kind == TRIG_TICK for r in self.rules)
        self.tick_cap = g.tick_cap
        instances = {}
        next_id = 0
        for cell_index, code in enumerate(level.data):
            if code:
                x, y = cell_index % level.width, cell_index // level.width
                instances[next_id] = (code - 1, x, y)
                next_id += 1
        self.start_instances = instances


def _compile_rule(rule: gdl.Rule, index: dict) -> _CompiledRule:
    guards = tuple((g.var, _CMP_CODE[g.cmp], g.value) for g in rule.guards)
    code = tuple(_compile_command(c, index) for c in rule.code)
    t = rule.trigger
    if isinstance(t, gdl.OverlapTrigger):
        return _CompiledRule(TRIG_OVERLAP, index[t.piece_a], index[t.piece_b],
                             None, None, guards, code)
    if isinstance(t, gdl.TickTrigger):
        return _CompiledRule(TRIG_TICK, None, t.every, None, None, guards, code)
    if isinstance(t, gdl.VarTrigger):
        return _CompiledRule(TRIG_VAR, t.var, None, _CMP_CODE[t.cmp], t.value,
                             guards, code)
    return _CompiledRule(TRIG_COUNT, index[t.piece], None, _CMP_CODE[t.cmp],
                         t.value, guards, code)


def _compile_command(c: gdl.Command, index: dict):
    if isinstance(c, gdl.Destroy):
        if isinstance(c.target, int):
            return (OP_DESTROY_BINDING, c.target)
        return (OP_DESTROY_PIECE, index[c.target])
    if isinstance(c, gdl.Sfx):
        return (OP_SFX, c.name)
    if isinstance(c, gdl.Score):
        return (OP_SCORE, c.amount)
    if isinstance(c, gdl.SetVar):
        return (OP_SET, c.var, c.value)
    if isinstance(c, gdl.AddVar):
        return (OP_ADD, c.var, c.delta)
    if isinstance(c, gdl.Win):
        return (OP_WIN,)
    if isinstance(c, gdl.Lose):
        return (OP_LOSE,)
    if isinstance(c, gdl.Spawn):
        return (OP_SPAWN, index[c.piece], c.at_binding)
    return (OP_TRANSFORM, index[c.piece], c.binding)


@lru_cache(maxsize=128)
def _compiled(g: gdl.GameDefinition, level_index: int) -> CompiledLevel:
    return CompiledLevel(g, level_index)


class GameState:
    """One simulation snapshot. Treat as immutable; step() returns a new one."""

    __slots__ = ("comp", "instances", "variables", "tick", "status", "rng",
                 "fired_edges", "next_id")

    def __init__(self, comp, instances, variables, tick, status, rng,
                 fired_edges, next_id):
        self.comp = comp
        self.instances = instances      # id -> (piece_index, x, y)
        self.variables = variables      # name -> int
        self.tick = tick
        self.status = status            # Running | Won | Lost | Timeout
        self.rng = rng                  # splitmix64 state, 64-bit int
        self.fired_edges = fired_edges  # frozenset of edge-rule indices
        self.next_id = next_id

    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return (self.instances == other.instances
                and self.variables == other.variables
                and self.tick == other.tick
                and self.status == other.status
                and self.rng == other.rng
                and self.fired_edges == other.fired_edges
                and self.next_id == other.next_id)

    def __hash__(self):
        return hash((tuple(sorted(self.instances.items())), self.tick,
                     self.status, self.rng))

    def piece_name(self, instance_id: int) -> str:
        return self.comp.piece_names[self.instances[instance_id][0]]

    def grid(self) -> dict:
        """Derived view: (x, y) -> list of instance ids, in id order."""
        cells: dict = {}
        for iid in sorted(self.instances):
            _, x, y = self.instances[iid]
            cells.setdefault((x, y), []).append(iid)
        return cells


def init_state(g: gdl.GameDefinition, level_index: int, seed: int) -> GameState:
    report = gdl.validate_game(g)
    if not report.ok():
        raise InvalidDefinition(report)
    if not 0 <= level_index < len(g.levels):
        raise LevelIndexOutOfRange(f"level {level_index} of {len(g.levels)}")
    comp = _compiled(g, level_index)
    variables = {v.name: v.startvalue for v in g.variables}
    return GameState(comp, dict(comp.start_instances), variables, 0, "Running",
                     seed & MASK64, frozenset(), len(comp.start_instances))


def legal_actions(s: GameState) -> set:
    # blocked moves are legal no-ops, so Running states always offer all five
    return set(ACTIONS) if s.status == "Running" else set()


def random_slots(s: GameState) -> int:
    """How many random-behavior draws the next step will consume (id order)."""
    comp = s.comp
    return sum(1 for iid in s.instances
               if not comp.controlled[s.instances[iid][0]]
               and comp.behavior[s.instances[iid][0]] == RANDOM)


def step(s: GameState, action: str, behavior_choices: tuple | None = None,
         collect: bool = True):
    """Advance one turn; returns (new state, events).

    behavior_choices, when given, supplies the direction index (0..3 =
    Up/Down/Left/Right) for each random-behavior instance in id order instead
    of drawing from the state rng — the exhaustive solver uses this to branch
    over outcomes without consuming randomness. Events are skipped when
    collect is false (the list comes back empty).
    """
    if s.status != "Running":
        raise SteppingTerminalState(s.status)
    if action not in DIR_DELTAS:
        raise ValueError(f"unknown action {action!r}")

    comp = s.comp
    width, height = comp.width, comp.height
    solid, controlled, behavior = comp.solid, comp.controlled, comp.behavior
    # inst preserves ascending-id order: ids only ever grow (spawn uses
    # next_id) and in-place updates/deletes keep dict insertion order, so
    # plain iteration below is id order without re-sorting.
    inst = dict(s.instances)
    variables = dict(s.variables)
    fired = set(s.fired_edges)
    rng = s.rng
    next_id = s.next_id
    tick = s.tick
    events: list = []
    contacts: list = []  # (mover_id, blocker_id) in chronological order

    solid_count: dict = {}
    for pi, x, y in inst.values():
        if solid[pi]:
            cell = (x, y)
            solid_count[cell] = solid_count.get(cell, 0) + 1

    def blockers_at(cell):
        return [iid for iid in inst
                if solid[inst[iid][0]] and (inst[iid][1], inst[iid][2]) == cell]

    def try_move(iid, dx, dy, dir_name):
        nonlocal inst
        pi, x, y = inst[iid]
        nx, ny = x + dx, y + dy
        if not (0 <= nx < width and 0 <= ny < height):
            if collect:
                events.append(TraceEvent(tick, "Blocked", {
                    "id": iid, "piece": comp.piece_names[pi],
                    "from": [x, y], "dir": dir_name}))
            return False
        if solid_count.get((nx, ny)):
            for blocker in blockers_at((nx, ny)):
                contacts.append((iid, blocker))
            if collect:
                events.append(TraceEvent(tick, "Blocked", {
                    "id": iid, "piece": comp.piece_names[pi],
                    "from": [x, y], "dir": dir_name}))
            return False
        inst[iid] = (pi, nx, ny)
        if solid[pi]:
            solid_count[(x, y)] -= 1
            solid_count[(nx, ny)] = solid_count.get((nx, ny), 0) + 1
        if collect:
            events.append(TraceEvent(tick, "Moved", {
                "id": iid, "piece": comp.piece_names[pi],
                "from": [x, y], "to": [nx, ny]}))
        return True

    # ── phase 1: controlled movement ──
    if action != "Wait":
        dx, dy = DIR_DELTAS[action]
        for iid in list(inst):
            if controlled[inst[iid][0]]:
                try_move(iid, dx, dy, action)

    # ── phase 2: behaviors ──
    choice_cursor = 0
    for iid in list(inst):
        pi = inst[iid][0]
        if controlled[pi]:
            continue
        b = behavior[pi]
        if b == STATIC:
            continue
        if b == RANDOM:
            if behavior_choices is not None:
                d = behavior_choices[choice_cursor]
                choice_cursor += 1
            else:
                rng, draw = splitmix64(rng)
                d = draw % 4
            name = ACTIONS[d]
            ddx, ddy = DIR_DELTAS[name]
            try_move(iid, ddx, ddy, name)
            continue
        # chase: one step toward the nearest controlled instance, preferring
        # the larger-delta axis (horizontal on tie), falling back to the
        # other axis when blocked and it still reduces distance
        _, x, y = inst[iid]
        target = None
        best = None
        for cid in inst:
            cpi, cx, cy = inst[cid]
            if controlled[cpi]:
                dist = abs(cx - x) + abs(cy - y)
                if best is None or dist < best:
                    best, target = dist, (cx, cy)
        if target is None:
            continue
        dx, dy = target[0] - x, target[1] - y
        if dx == 0 and dy == 0:
            continue
        horizontal = ("Right" if dx > 0 else "Left") if dx != 0 else None
        vertical = ("Down" if dy > 0 else "Up") if dy != 0 else None
        order = ([horizontal, vertical] if abs(dx) >= abs(dy) else
                 [vertical, horizontal])
        for name in order:
            if name is None:
                continue
            ddx, ddy = DIR_DELTAS[name]
            if try_move(iid, ddx, ddy, name):
                break

    # ── phase 3: rules ──
    status = "Running"

    def cmp_ok(left, cmp_code, right):
        if cmp_code == EQ:
            return left == right
        if cmp_code == GTE:
            return left >= right
        return left <= right

    def guards_ok(rule):
        return all(cmp_ok(variables[v], c, val) for v, c, val in rule.guards)

    def destroy(iid):
        pi, x, y = inst.pop(iid)
        if solid[pi]:
            solid_count[(x, y)] -= 1
        if collect:
            events.append(TraceEvent(tick, "Destroyed", {
                "id": iid, "piece": comp.piece_names[pi], "cell": [x, y]}))

    def run_code(rule_index, rule, bindings):
        """Execute one firing; returns False when WIN/LOSE halted the phase."""
        nonlocal status, next_id
        if collect:
            events.append(TraceEvent(tick, "RuleFired", {"rule": rule_index}))
        for cmd in rule.code:
            op = cmd[0]
            if op == OP_DESTROY_BINDING:
                iid = bindings[cmd[1] - 1]
                if iid in inst:
                    destroy(iid)
            elif op == OP_DESTROY_PIECE:
                for iid in list(inst):
                    if inst[iid][0] == cmd[1]:
                        destroy(iid)
            elif op == OP_SFX:
                if collect:
                    events.append(TraceEvent(tick, "Sfx", {"sfx": cmd[1]}))
            elif op == OP_SCORE or op == OP_ADD:
                var = "score" if op == OP_SCORE else cmd[1]
                delta = cmd[1] if op == OP_SCORE else cmd[2]
                if delta:
                    old = variables[var]
                    variables[var] = old + delta
                    if collect:
                        events.append(TraceEvent(tick, "VarChanged", {
                            "var": var, "old": old, "new": old + delta}))
            elif op == OP_SET:
                old = variables[cmd[1]]
                if old != cmd[2]:
                    variables[cmd[1]] = cmd[2]
                    if collect:
                        events.append(TraceEvent(tick, "VarChanged", {
                            "var": cmd[1], "old": old, "new": cmd[2]}))
            elif op == OP_WIN or op == OP_LOSE:
                status = "Won" if op == OP_WIN else "Lost"
                if collect:
                    events.append(TraceEvent(tick, "StatusChanged",
                                             {"status": status}))
                return False
            elif op == OP_SPAWN:
                anchor = bindings[cmd[2] - 1]
                if anchor in inst:
                    _, ax, ay = inst[anchor]
                    inst[next_id] = (cmd[1], ax, ay)
                    if solid[cmd[1]]:
                        solid_count[(ax, ay)] = solid_count.get((ax, ay), 0) + 1
                    if collect:
                        events.append(TraceEvent(tick, "Spawned", {
                            "id": next_id, "piece": comp.piece_names[cmd[1]],
                            "cell": [ax, ay]}))
                    next_id += 1
            elif op == OP_TRANSFORM:
                iid = bindings[cmd[2] - 1]
                if iid in inst:
                    old_pi, x, y = inst[iid]
                    new_pi = cmd[1]
                    if old_pi != new_pi:
                        inst[iid] = (new_pi, x, y)
                        if solid[old_pi]:
                            solid_count[(x, y)] -= 1
                        if solid[new_pi]:
                            solid_count[(x, y)] = solid_count.get((x, y), 0) + 1
                        if collect:
                            events.append(TraceEvent(tick, "Transformed", {
                                "id": iid, "from": comp.piece_names[old_pi],
                                "to": comp.piece_names[new_pi], "cell": [x, y]}))
        return True

    for rule_index, rule in enumerate(comp.rules):
        if status != "Running":
            break
        kind = rule.kind
        if kind == TRIG_OVERLAP:
            pa, pb = rule.a, rule.b
            # snapshot the pair list; firings re-validate each pair
            a_map: dict = {}
            b_map: dict = a_map if pa == pb else {}
            for iid, (pi, x, y) in inst.items():
                if pi == pa:
                    a_map.setdefault((y, x), []).append(iid)
                elif pi == pb:
                    b_map.setdefault((y, x), []).append(iid)
            pairs = []
            if pa == pb:
                for cell in sorted(a_map):
                    matching = a_map[cell]
                    for n, i in enumerate(matching):
                        for j in matching[n + 1:]:
                            pairs.append((i, j))
            else:
                for cell in sorted(a_map):
                    b_ids = b_map.get(cell)
                    if b_ids:
                        for i in a_map[cell]:
                            for j in b_ids:
                                pairs.append((i, j))
            for mover, blocker in contacts:
                if mover not in inst or blocker not in inst:
                    continue
                mp, bp = inst[mover][0], inst[blocker][0]
                if mp == pa and bp == pb:
                    pairs.append((mover, blocker))
                elif pa != pb and mp == pb and bp == pa:
                    pairs.append((blocker, mover))
            for i, j in pairs:
                if status != "Running":
                    break
                if i not in inst or j not in inst:
                    continue
                if inst[i][0] != pa or inst[j][0] != pb:
                    continue
                if guards_ok(rule):
                    run_code(rule_index, rule, (i, j))
        elif kind == TRIG_TICK:
            # fires when the tick count being completed is a multiple of b
            if (tick + 1) % rule.b == 0 and guards_ok(rule):
                run_code(rule_index, rule, ())
        else:
            if kind == TRIG_VAR:
                left = variables[rule.a]
            else:
                left = sum(1 for v in inst.values() if v[0] == rule.a)
            cond = cmp_ok(left, rule.cmp, rule.value) and guards_ok(rule)
            if cond:
                if rule_index not in fired:
                    fired.add(rule_index)
                    run_code(rule_index, rule, ())
            else:
                fired.discard(rule_index)

    # ── phase 4: tick ──
    tick += 1
    if status == "Running" and tick >= comp.tick_cap:
        status = "Timeout"
        if collect:
            events.append(TraceEvent(s.tick, "StatusChanged", {"status": status}))

    new_state = GameState(comp, inst, variables, tick, status, rng,
                          frozenset(fired), next_id)
    return new_state, events


def state_hash(s: GameState) -> str:
    """16-hex-char digest of (occupancy multiset, variables, status).

    tick, rng, fired_edges, and instance ids are excluded so that revisited
    configurations hash equal; the encoding is canonical JSON shared
    bit-for-bit with the companion player.
    """
    return hashlib.sha256(_hash_blob(s).encode("utf-8")).hexdigest()[:16]


def _hash_blob(s: GameState) -> str:
    names = s.comp.piece_names
    cells: dict = {}
    for pi, x, y in s.instances.values():
        cells.setdefault((y, x), []).append(names[pi])
    occupancy = [[x, y, sorted(members)] for (y, x), members in sorted(cells.items())]
    variables = [[k, v] for k, v in sorted(s.variables.items())]
    return json.dumps(["v1", s.status, occupancy, variables],
                      separators=(",", ":"), ensure_ascii=False)


def content_key(s: GameState):
    """Hashable identity with exactly state_hash's equivalence classes,
    minus the digest cost; for hot loops that only need set membership."""
    return (s.status, tuple(sorted((x, y, pi) for pi, x, y in s.instances.values())),
            tuple(sorted(s.variables.items())))
