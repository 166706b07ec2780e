"""JSON grid-game definitions: parsing, validation, canonical serialization.

A game file is a single JSON object holding cosmetic metadata, declared
variables, piece types, rules, and levels. Rules are a trigger head plus a
command body, both stored as single text lines of space-separated tokens:

    trigger:  OVERLAP <piece> <piece> | TICK <int>
              | VAR <name> <EQ|GTE|LTE> <int> | COUNT <piece> <EQ|GTE|LTE> <int>
    command:  DESTROY <$k|piece> | SFX <name> | SCORE <int> | SET <var> <int>
              | ADD <var> <int> | WIN | LOSE | SPAWN <piece> $<k>
              | TRANSFORM $<k> <piece>

Guards are an optional "guards" array of VAR-grammar strings on a rule.
Levels are row-major integer grids where 0 is empty and code k names the
k-th piece. `parse_game` raises on structural problems; value-level
invariants are reported (not raised) by `validate_game`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

CMP_OPS = ("EQ", "GTE", "LTE")
BEHAVIORS = ("static", "chase", "random")
DEFAULT_TICK_CAP = 1000


# ── Errors ────────────────────────────────────────────────────────────

class GdlError(Exception):
    """Base class for game-definition errors."""


class MalformedJson(GdlError):
    pass


class SchemaError(GdlError):
    """Missing or mistyped field. `path` locates it in the document."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DanglingReference(GdlError):
    """A piece or variable name that resolves to nothing."""

    def __init__(self, name: str, path: str):
        super().__init__(f"{path}: unknown name {name!r}")
        self.name = name
        self.path = path


# ── Domain types ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class ColorTriple:
    r: float
    g: float
    b: float


@dataclass(frozen=True)
class VariableDef:
    name: str
    onscreen: str  # display label; empty string means hidden
    startvalue: int


@dataclass(frozen=True)
class PieceDef:
    name: str
    layer: int
    sprite: str
    animated: bool
    flips: bool
    solid: bool = False
    controlled: bool = False
    behavior: str = "static"


@dataclass(frozen=True)
class OverlapTrigger:
    """Fires per pair of co-located instances; binds them as $1 and $2."""
    piece_a: str
    piece_b: str


@dataclass(frozen=True)
class TickTrigger:
    """Fires on every step whose completed tick count is a multiple of `every`."""
    every: int


@dataclass(frozen=True)
class VarTrigger:
    """Edge-triggered comparison against a variable."""
    var: str
    cmp: str
    value: int


@dataclass(frozen=True)
class CountTrigger:
    """Edge-triggered comparison against the live instance count of a piece."""
    piece: str
    cmp: str
    value: int


Trigger = OverlapTrigger | TickTrigger | VarTrigger | CountTrigger


@dataclass(frozen=True)
class Guard:
    var: str
    cmp: str
    value: int


@dataclass(frozen=True)
class Destroy:
    # 1 or 2 destroys that trigger binding; a piece name destroys all instances
    target: int | str


@dataclass(frozen=True)
class Sfx:
    name: str


@dataclass(frozen=True)
class Score:
    amount: int


@dataclass(frozen=True)
class SetVar:
    var: str
    value: int


@dataclass(frozen=True)
class AddVar:
    var: str
    delta: int


@dataclass(frozen=True)
class Win:
    pass


@dataclass(frozen=True)
class Lose:
    pass


@dataclass(frozen=True)
class Spawn:
    piece: str
    at_binding: int


@dataclass(frozen=True)
class Transform:
    binding: int
    piece: str


Command = Destroy | Sfx | Score | SetVar | AddVar | Win | Lose | Spawn | Transform


@dataclass(frozen=True)
class Rule:
    trigger: Trigger
    guards: tuple[Guard, ...]
    code: tuple[Command, ...]


@dataclass(frozen=True)
class LevelDef:
    width: int
    height: int
    data: tuple[int, ...]  # row-major, 0 = empty, k = pieces[k-1]

    def at(self, x: int, y: int) -> int:
        return self.data[y * self.width + x]


@dataclass(frozen=True)
class GameDefinition:
    gamename: str
    numplayers: int
    floor: str
    music: str
    color_accent: ColorTriple
    color_body: ColorTriple
    variables: tuple[VariableDef, ...]
    pieces: tuple[PieceDef, ...]
    rules: tuple[Rule, ...]
    levels: tuple[LevelDef, ...]
    tick_cap: int = DEFAULT_TICK_CAP

    def piece_names(self) -> list[str]:
        return [p.name for p in self.pieces]

    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]


# ── Trigger / command / guard text grammar ────────────────────────────

def parse_trigger(text: str, path: str = "trigger") -> Trigger:
    tokens = text.split(" ")
    if "" in tokens:
        raise SchemaError(path, f"malformed trigger text {text!r}")
    head = tokens[0]
    if head == "OVERLAP":
        if len(tokens) != 3:
            raise SchemaError(path, "OVERLAP takes two piece names")
        return OverlapTrigger(tokens[1], tokens[2])
    if head == "TICK":
        if len(tokens) != 2:
            raise SchemaError(path, "TICK takes one integer")
        return TickTrigger(_text_int(tokens[1], path))
    if head in ("VAR", "COUNT"):
        if len(tokens) != 4 or tokens[2] not in CMP_OPS:
            raise SchemaError(path, f"{head} takes <name> <EQ|GTE|LTE> <int>")
        value = _text_int(tokens[3], path)
        if head == "VAR":
            return VarTrigger(tokens[1], tokens[2], value)
        return CountTrigger(tokens[1], tokens[2], value)
    raise SchemaError(path, f"unknown trigger {head!r}")


def trigger_text(t: Trigger) -> str:
    if isinstance(t, OverlapTrigger):
        return f"OVERLAP {t.piece_a} {t.piece_b}"
    if isinstance(t, TickTrigger):
        return f"TICK {t.every}"
    if isinstance(t, VarTrigger):
        return f"VAR {t.var} {t.cmp} {t.value}"
    return f"COUNT {t.piece} {t.cmp} {t.value}"


def parse_command(text: str, path: str = "command") -> Command:
    tokens = text.split(" ")
    if "" in tokens:
        raise SchemaError(path, f"malformed command text {text!r}")
    head, rest = tokens[0], tokens[1:]
    if head == "DESTROY":
        if len(rest) != 1:
            raise SchemaError(path, "DESTROY takes one target")
        if rest[0].startswith("$"):
            return Destroy(_binding_index(rest[0], path))
        return Destroy(rest[0])
    if head == "SFX":
        if len(rest) != 1:
            raise SchemaError(path, "SFX takes one name")
        return Sfx(rest[0])
    if head == "SCORE":
        if len(rest) != 1:
            raise SchemaError(path, "SCORE takes one integer")
        return Score(_text_int(rest[0], path))
    if head == "SET":
        if len(rest) != 2:
            raise SchemaError(path, "SET takes <var> <int>")
        return SetVar(rest[0], _text_int(rest[1], path))
    if head == "ADD":
        if len(rest) != 2:
            raise SchemaError(path, "ADD takes <var> <int>")
        return AddVar(rest[0], _text_int(rest[1], path))
    if head == "WIN":
        if rest:
            raise SchemaError(path, "WIN takes no arguments")
        return Win()
    if head == "LOSE":
        if rest:
            raise SchemaError(path, "LOSE takes no arguments")
        return Lose()
    if head == "SPAWN":
        if len(rest) != 2 or not rest[1].startswith("$"):
            raise SchemaError(path, "SPAWN takes <piece> $<k>")
        return Spawn(rest[0], _binding_index(rest[1], path))
    if head == "TRANSFORM":
        if len(rest) != 2 or not rest[0].startswith("$"):
            raise SchemaError(path, "TRANSFORM takes $<k> <piece>")
        return Transform(_binding_index(rest[0], path), rest[1])
    raise SchemaError(path, f"unknown command {head!r}")


def command_text(c: Command) -> str:
    if isinstance(c, Destroy):
        target = f"${c.target}" if isinstance(c.target, int) else c.target
        return f"DESTROY {target}"
    if isinstance(c, Sfx):
        return f"SFX {c.name}"
    if isinstance(c, Score):
        return f"SCORE {c.amount}"
    if isinstance(c, SetVar):
        return f"SET {c.var} {c.value}"
    if isinstance(c, AddVar):
        return f"ADD {c.var} {c.delta}"
    if isinstance(c, Win):
        return "WIN"
    if isinstance(c, Lose):
        return "LOSE"
    if isinstance(c, Spawn):
        return f"SPAWN {c.piece} ${c.at_binding}"
    return f"TRANSFORM ${c.binding} {c.piece}"


def parse_guard(text: str, path: str = "guard") -> Guard:
    t = parse_trigger(text, path)
    if not isinstance(t, VarTrigger):
        raise SchemaError(path, "guards use the VAR grammar")
    return Guard(t.var, t.cmp, t.value)


def guard_text(g: Guard) -> str:
    return f"VAR {g.var} {g.cmp} {g.value}"


def _binding_index(token: str, path: str) -> int:
    try:
        k = int(token[1:])
    except ValueError:
        raise SchemaError(path, f"bad binding reference {token!r}") from None
    return k


def _text_int(token: str, path: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise SchemaError(path, f"expected integer, got {token!r}") from None


# ── Parsing ───────────────────────────────────────────────────────────

def parse_game(text: str) -> GameDefinition:
    """Parse a UTF-8 JSON document into a GameDefinition.

    Structural problems raise MalformedJson / SchemaError; unresolved piece
    or variable names raise DanglingReference. Value-level invariants (level
    code ranges, duplicate names, ...) are left to `validate_game`.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be a JSON object")

    known = {"gamename", "numplayers", "floor", "music", "color_accent",
             "color_body", "variables", "pieces", "rules", "levels", "tick_cap"}
    for key in doc:
        if key not in known:
            raise SchemaError(key, "unexpected field")

    variables = tuple(
        _parse_variable(item, f"variables[{i}]")
        for i, item in enumerate(_need_list(doc, "variables"))
    )
    pieces = tuple(
        _parse_piece(item, f"pieces[{i}]")
        for i, item in enumerate(_need_list(doc, "pieces"))
    )
    rules = tuple(
        _parse_rule(item, f"rules[{i}]")
        for i, item in enumerate(_need_list(doc, "rules"))
    )
    levels = tuple(
        _parse_level(item, f"levels[{i}]")
        for i, item in enumerate(_need_list(doc, "levels"))
    )

    g = GameDefinition(
        gamename=_need_str(doc, "gamename"),
        numplayers=_need_int(doc, "numplayers"),
        floor=_need_str(doc, "floor"),
        music=_need_str(doc, "music"),
        color_accent=_parse_color(doc, "color_accent"),
        color_body=_parse_color(doc, "color_body"),
        variables=variables,
        pieces=pieces,
        rules=rules,
        levels=levels,
        tick_cap=_need_int(doc, "tick_cap", default=DEFAULT_TICK_CAP),
    )
    _check_references(g)
    return g


def _parse_variable(item, path: str) -> VariableDef:
    if not isinstance(item, dict):
        raise SchemaError(path, "expected an object")
    _reject_extras(item, {"name", "onscreen", "startvalue"}, path)
    return VariableDef(
        name=_need_str(item, "name", path),
        onscreen=_need_str(item, "onscreen", path, default=""),
        startvalue=_need_int(item, "startvalue", path),
    )


def _parse_piece(item, path: str) -> PieceDef:
    if not isinstance(item, dict):
        raise SchemaError(path, "expected an object")
    _reject_extras(item, {"name", "layer", "sprite", "animated", "flips",
                          "solid", "controlled", "behavior"}, path)
    behavior = _need_str(item, "behavior", path, default="static")
    if behavior not in BEHAVIORS:
        raise SchemaError(f"{path}.behavior", f"unknown behavior {behavior!r}")
    return PieceDef(
        name=_need_str(item, "name", path),
        layer=_need_int(item, "layer", path),
        sprite=_need_str(item, "sprite", path),
        animated=_need_bool(item, "animated", path),
        flips=_need_bool(item, "flips", path),
        solid=_need_bool(item, "solid", path, default=False),
        controlled=_need_bool(item, "controlled", path, default=False),
        behavior=behavior,
    )


def _parse_rule(item, path: str) -> Rule:
    if not isinstance(item, dict):
        raise SchemaError(path, "expected an object")
    _reject_extras(item, {"trigger", "guards", "code"}, path)
    trigger = parse_trigger(_need_str(item, "trigger", path), f"{path}.trigger")
    raw_guards = item.get("guards", [])
    if not isinstance(raw_guards, list):
        raise SchemaError(f"{path}.guards", "expected a list")
    guards = tuple(
        parse_guard(_as_str(gtext, f"{path}.guards[{i}]"), f"{path}.guards[{i}]")
        for i, gtext in enumerate(raw_guards)
    )
    raw_code = item.get("code")
    if not isinstance(raw_code, list):
        raise SchemaError(f"{path}.code", "expected a list")
    code = tuple(
        parse_command(_as_str(ctext, f"{path}.code[{i}]"), f"{path}.code[{i}]")
        for i, ctext in enumerate(raw_code)
    )
    return Rule(trigger=trigger, guards=guards, code=code)


def _parse_level(item, path: str) -> LevelDef:
    if not isinstance(item, dict):
        raise SchemaError(path, "expected an object")
    _reject_extras(item, {"type", "width", "height", "data"}, path)
    if _need_str(item, "type", path) != "raw":
        raise SchemaError(f"{path}.type", 'only "raw" levels are supported')
    width = _need_int(item, "width", path)
    height = _need_int(item, "height", path)
    if width < 1 or height < 1:
        raise SchemaError(path, "width and height must be positive")
    raw = item.get("data")
    if not isinstance(raw, list):
        raise SchemaError(f"{path}.data", "expected a list")
    data = tuple(_coerce_int(v, f"{path}.data[{i}]") for i, v in enumerate(raw))
    return LevelDef(width=width, height=height, data=data)


def _parse_color(obj: dict, key: str) -> ColorTriple:
    raw = obj.get(key)
    if not isinstance(raw, list) or len(raw) != 3:
        raise SchemaError(key, "expected [r, g, b]")
    channels = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{key}[{i}]", "expected a number")
        channels.append(float(v))
    return ColorTriple(*channels)


def _check_references(g: GameDefinition) -> None:
    pieces = set(g.piece_names())
    variables = set(g.variable_names())

    def need_piece(name: str, path: str) -> None:
        if name not in pieces:
            raise DanglingReference(name, path)

    def need_var(name: str, path: str) -> None:
        if name not in variables:
            raise DanglingReference(name, path)

    for i, rule in enumerate(g.rules):
        path = f"rules[{i}]"
        t = rule.trigger
        if isinstance(t, OverlapTrigger):
            need_piece(t.piece_a, f"{path}.trigger")
            need_piece(t.piece_b, f"{path}.trigger")
        elif isinstance(t, VarTrigger):
            need_var(t.var, f"{path}.trigger")
        elif isinstance(t, CountTrigger):
            need_piece(t.piece, f"{path}.trigger")
        for j, guard in enumerate(rule.guards):
            need_var(guard.var, f"{path}.guards[{j}]")
        for j, cmd in enumerate(rule.code):
            cpath = f"{path}.code[{j}]"
            if isinstance(cmd, Destroy) and isinstance(cmd.target, str):
                need_piece(cmd.target, cpath)
            elif isinstance(cmd, Score):
                need_var("score", cpath)
            elif isinstance(cmd, (SetVar, AddVar)):
                need_var(cmd.var, cpath)
            elif isinstance(cmd, (Spawn, Transform)):
                need_piece(cmd.piece, cpath)


# ── Field helpers ─────────────────────────────────────────────────────

_MISSING = object()


def _reject_extras(item: dict, allowed: set[str], path: str) -> None:
    for key in item:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}", "unexpected field")


def _need_list(obj: dict, key: str) -> list:
    raw = obj.get(key)
    if not isinstance(raw, list):
        raise SchemaError(key, "expected a list")
    return raw


def _need_str(obj: dict, key: str, parent: str = "", default=_MISSING) -> str:
    raw = obj.get(key, default)
    path = f"{parent}.{key}" if parent else key
    if raw is _MISSING:
        raise SchemaError(path, "missing field")
    return _as_str(raw, path)


def _as_str(raw, path: str) -> str:
    if not isinstance(raw, str):
        raise SchemaError(path, "expected a string")
    return raw


def _need_int(obj: dict, key: str, parent: str = "", default=_MISSING) -> int:
    raw = obj.get(key, default)
    path = f"{parent}.{key}" if parent else key
    if raw is _MISSING:
        raise SchemaError(path, "missing field")
    return _coerce_int(raw, path)


def _coerce_int(raw, path: str) -> int:
    # Numeric strings are accepted wherever integers are expected; canonical
    # output always re-emits them as JSON numbers.
    if isinstance(raw, bool):
        raise SchemaError(path, "expected an integer")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, str):
        try:
            return int(raw)
        except ValueError:
            raise SchemaError(path, f"expected an integer, got {raw!r}") from None
    raise SchemaError(path, "expected an integer")


def _need_bool(obj: dict, key: str, parent: str, default=_MISSING) -> bool:
    raw = obj.get(key, default)
    path = f"{parent}.{key}" if parent else key
    if raw is _MISSING:
        raise SchemaError(path, "missing field")
    if not isinstance(raw, bool):
        raise SchemaError(path, "expected a boolean")
    return raw


# ── Canonical serialization ───────────────────────────────────────────

def serialize_game(g: GameDefinition) -> str:
    """Emit the canonical text form: fixed field order, 2-space indentation,
    extension fields elided at their defaults, trailing newline.

    parse_game(serialize_game(g)) == g for every valid definition.
    """
    doc: dict = {
        "gamename": g.gamename,
        "numplayers": g.numplayers,
        "floor": g.floor,
        "music": g.music,
        "color_accent": [g.color_accent.r, g.color_accent.g, g.color_accent.b],
        "color_body": [g.color_body.r, g.color_body.g, g.color_body.b],
        "variables": [
            {"name": v.name, "onscreen": v.onscreen, "startvalue": v.startvalue}
            for v in g.variables
        ],
        "pieces": [_piece_doc(p) for p in g.pieces],
        "rules": [_rule_doc(r) for r in g.rules],
        "levels": [
            {"type": "raw", "width": l.width, "height": l.height,
             "data": list(l.data)}
            for l in g.levels
        ],
    }
    if g.tick_cap != DEFAULT_TICK_CAP:
        doc["tick_cap"] = g.tick_cap
    return _dump_canonical(doc, 0) + "\n"


def _dump_canonical(value, indent: int) -> str:
    # 2-space indentation, except arrays of primitives stay on one line
    # (keeps color triples and level data readable).
    if isinstance(value, dict):
        if not value:
            return "{}"
        pad = " " * (indent + 2)
        items = (
            f"{pad}{json.dumps(key, ensure_ascii=False)}: {_dump_canonical(v, indent + 2)}"
            for key, v in value.items()
        )
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(json.dumps(v, ensure_ascii=False) for v in value) + "]"
        pad = " " * (indent + 2)
        items = (pad + _dump_canonical(v, indent + 2) for v in value)
        return "[\n" + ",\n".join(items) + "\n" + " " * indent + "]"
    return json.dumps(value, ensure_ascii=False)


def _piece_doc(p: PieceDef) -> dict:
    doc: dict = {"name": p.name, "layer": p.layer, "sprite": p.sprite,
                 "animated": p.animated, "flips": p.flips}
    if p.solid:
        doc["solid"] = True
    if p.controlled:
        doc["controlled"] = True
    if p.behavior != "static":
        doc["behavior"] = p.behavior
    return doc


def _rule_doc(r: Rule) -> dict:
    doc: dict = {"trigger": trigger_text(r.trigger)}
    if r.guards:
        doc["guards"] = [guard_text(guard) for guard in r.guards]
    doc["code"] = [command_text(c) for c in r.code]
    return doc


def definition_digest(text: str) -> str:
    """Hex digest identifying a game file by its exact text bytes."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ── Validation ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Violation:
    kind: str
    path: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, path: str, message: str) -> None:
        self.violations.append(Violation(kind, path, message))


def validate_game(g: GameDefinition) -> ValidationReport:
    """Check every definition invariant; violations are data, not errors.

    A definition with an empty report is safe to hand to the engine for any
    of its levels.
    """
    report = ValidationReport()
    pieces = set()
    variables = set()

    if g.numplayers < 1:
        report.add("OutOfRange", "numplayers", "must be positive")
    if g.tick_cap < 1:
        report.add("OutOfRange", "tick_cap", "must be positive")
    for key, color in (("color_accent", g.color_accent), ("color_body", g.color_body)):
        for channel, value in zip("rgb", (color.r, color.g, color.b)):
            if not 0.0 <= value <= 1.0:
                report.add("OutOfRange", f"{key}.{channel}", "channel outside [0, 1]")

    for i, v in enumerate(g.variables):
        if not v.name:
            report.add("BadShape", f"variables[{i}].name", "empty name")
        if v.name in variables:
            report.add("DuplicateName", f"variables[{i}].name", f"duplicate variable {v.name!r}")
        variables.add(v.name)

    for i, p in enumerate(g.pieces):
        if not p.name:
            report.add("BadShape", f"pieces[{i}].name", "empty name")
        if p.name in pieces:
            report.add("DuplicateName", f"pieces[{i}].name", f"duplicate piece {p.name!r}")
        pieces.add(p.name)
        if p.layer < 0:
            report.add("OutOfRange", f"pieces[{i}].layer", "layer must be >= 0")
        if p.behavior not in BEHAVIORS:
            report.add("BadShape", f"pieces[{i}].behavior", f"unknown behavior {p.behavior!r}")

    for i, rule in enumerate(g.rules):
        _validate_rule(rule, f"rules[{i}]", pieces, variables, report)

    for i, level in enumerate(g.levels):
        path = f"levels[{i}]"
        if level.width < 1 or level.height < 1:
            report.add("OutOfRange", path, "width and height must be positive")
            continue
        expected = level.width * level.height
        if len(level.data) != expected:
            report.add("BadShape", f"{path}.data",
                       f"expected {expected} codes, got {len(level.data)}")
        for j, code in enumerate(level.data):
            if not 0 <= code <= len(g.pieces):
                report.add("DanglingCode", f"{path}.data[{j}]",
                           f"code {code} has no piece (codes run 0..{len(g.pieces)})")
    return report


def _validate_rule(rule: Rule, path: str, pieces: set[str], variables: set[str],
                   report: ValidationReport) -> None:
    t = rule.trigger
    bindings = 0
    if isinstance(t, OverlapTrigger):
        bindings = 2
        for name in (t.piece_a, t.piece_b):
            if name not in pieces:
                report.add("DanglingReference", f"{path}.trigger", f"unknown piece {name!r}")
    elif isinstance(t, TickTrigger):
        if t.every < 1:
            report.add("OutOfRange", f"{path}.trigger", "TICK interval must be positive")
    elif isinstance(t, VarTrigger):
        if t.var not in variables:
            report.add("DanglingReference", f"{path}.trigger", f"unknown variable {t.var!r}")
        if t.cmp not in CMP_OPS:
            report.add("BadShape", f"{path}.trigger", f"unknown comparison {t.cmp!r}")
    elif isinstance(t, CountTrigger):
        if t.piece not in pieces:
            report.add("DanglingReference", f"{path}.trigger", f"unknown piece {t.piece!r}")
        if t.cmp not in CMP_OPS:
            report.add("BadShape", f"{path}.trigger", f"unknown comparison {t.cmp!r}")

    for j, guard in enumerate(rule.guards):
        if guard.var not in variables:
            report.add("DanglingReference", f"{path}.guards[{j}]",
                       f"unknown variable {guard.var!r}")
        if guard.cmp not in CMP_OPS:
            report.add("BadShape", f"{path}.guards[{j}]", f"unknown comparison {guard.cmp!r}")

    if not rule.code:
        report.add("EmptyCode", f"{path}.code", "rule body must not be empty")

    for j, cmd in enumerate(rule.code):
        cpath = f"{path}.code[{j}]"
        for k in _binding_refs(cmd):
            if not 1 <= k <= bindings:
                report.add("BadBinding", cpath,
                           f"${k} has no binding under this trigger")
        if isinstance(cmd, Destroy) and isinstance(cmd.target, str):
            if cmd.target not in pieces:
                report.add("DanglingReference", cpath, f"unknown piece {cmd.target!r}")
        elif isinstance(cmd, Score):
            if "score" not in variables:
                report.add("MissingScoreVariable", cpath,
                           'SCORE requires a declared variable named "score"')
        elif isinstance(cmd, (SetVar, AddVar)):
            if cmd.var not in variables:
                report.add("DanglingReference", cpath, f"unknown variable {cmd.var!r}")
        elif isinstance(cmd, (Spawn, Transform)):
            if cmd.piece not in pieces:
                report.add("DanglingReference", cpath, f"unknown piece {cmd.piece!r}")


def _binding_refs(cmd: Command) -> list[int]:
    if isinstance(cmd, Destroy) and isinstance(cmd.target, int):
        return [cmd.target]
    if isinstance(cmd, Spawn):
        return [cmd.at_binding]
    if isinstance(cmd, Transform):
        return [cmd.binding]
    return []
