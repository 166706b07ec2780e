"""Parsing, validation, and canonical serialization of game definitions."""

import json

import pytest

from gameforge import gdl, gen

# ── fixtures ──────────────────────────────────────────────────────────

MINIMAL = {
    "gamename": "t", "numplayers": 1, "floor": "f", "music": "m",
    "color_accent": [0, 0, 0], "color_body": [1, 1, 1],
    "variables": [], "pieces": [], "rules": [],
    "levels": [{"type": "raw", "width": 1, "height": 1, "data": [0]}],
}


def doc(**overrides) -> str:
    d = dict(MINIMAL)
    d.update(overrides)
    return json.dumps(d)


PIECES = [
    {"name": "playerpiece", "layer": 5, "sprite": "fighter",
     "animated": True, "flips": True, "controlled": True},
    {"name": "enemy", "layer": 5, "sprite": "golem",
     "animated": True, "flips": True},
]


# ── preamble fidelity ─────────────────────────────────────────────────

def test_preamble_fields(bundled_game):
    g = bundled_game
    assert g.gamename == "Before Venturing Forth"
    assert g.numplayers == 1
    assert g.floor == "dungeonfloor"
    assert g.music == "ominous"
    assert g.color_accent == gdl.ColorTriple(0.4, 0.56, 0.31)
    assert g.color_body == gdl.ColorTriple(0.19, 0.28, 0.22)
    assert g.variables == (gdl.VariableDef("score", "Score", 0),)
    assert g.pieces[0].name == "playerpiece"
    assert g.pieces[0].sprite == "fighter"
    assert g.pieces[0].layer == 5
    assert g.pieces[0].animated and g.pieces[0].flips


def test_kill_on_touch_rule_shape(bundled_game):
    rule = bundled_game.rules[0]
    assert rule.trigger == gdl.OverlapTrigger("playerpiece", "enemy")
    assert rule.guards == ()
    assert rule.code == (gdl.Destroy(2), gdl.Sfx("punch"), gdl.Score(1))


def test_level_grid_numeric_strings():
    # the printed level uses "5" for width/height; integers may be strings
    text = doc(pieces=PIECES + [
        {"name": "wall", "layer": 3, "sprite": "s", "animated": False,
         "flips": False, "solid": True},
        {"name": "exit", "layer": 2, "sprite": "d", "animated": False,
         "flips": False}],
        levels=[{"type": "raw", "width": "5", "height": "5",
                 "data": [0, 4, 4, 0, 3, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0,
                          1, 0, 0, 0, 0, 0, 0, 4, 0, 3]}])
    g = gdl.parse_game(text)
    level = g.levels[0]
    assert (level.width, level.height) == (5, 5)
    assert level.at(1, 0) == 4 and level.at(4, 1) == 2
    assert gdl.validate_game(g).ok()
    # canonical output re-emits them as JSON numbers
    assert '"width": 5' in gdl.serialize_game(g)


def test_empty_definition_is_valid():
    g = gdl.parse_game(doc())
    assert g.rules == ()
    assert gdl.validate_game(g).ok()


def test_defaults_applied_and_elided():
    g = gdl.parse_game(doc(pieces=[{
        "name": "crate", "layer": 0, "sprite": "box",
        "animated": False, "flips": False}]))
    p = g.pieces[0]
    assert (p.solid, p.controlled, p.behavior) == (False, False, "static")
    assert g.tick_cap == 1000
    out = gdl.serialize_game(g)
    for absent in ('"solid"', '"controlled"', '"behavior"', '"tick_cap"'):
        assert absent not in out


# ── canonical round-trip ──────────────────────────────────────────────

def test_bundled_file_is_canonical(bundled_text, bundled_game):
    assert gdl.serialize_game(bundled_game) == bundled_text


def test_roundtrip_bundled(bundled_text, bundled_game):
    assert gdl.parse_game(gdl.serialize_game(bundled_game)) == bundled_game


@pytest.mark.parametrize("seed", range(100))
def test_roundtrip_generated(seed):
    g = gen.random_definition(seed)
    text = gdl.serialize_game(g)
    assert gdl.parse_game(text) == g
    assert gdl.serialize_game(gdl.parse_game(text)) == text


def test_serialized_field_order(bundled_text):
    keys = [line.split('"')[1] for line in bundled_text.splitlines()
            if line.startswith('  "')]
    assert keys == ["gamename", "numplayers", "floor", "music",
                    "color_accent", "color_body", "variables", "pieces",
                    "rules", "levels"]


def test_tick_cap_serialized_when_non_default():
    g = gdl.parse_game(doc(tick_cap=77))
    assert g.tick_cap == 77
    assert '"tick_cap": 77' in gdl.serialize_game(g)


# ── grammar ───────────────────────────────────────────────────────────

@pytest.mark.parametrize("text,expected", [
    ("OVERLAP a b", gdl.OverlapTrigger("a", "b")),
    ("TICK 5", gdl.TickTrigger(5)),
    ("VAR score GTE 2", gdl.VarTrigger("score", "GTE", 2)),
    ("COUNT enemy EQ 0", gdl.CountTrigger("enemy", "EQ", 0)),
])
def test_trigger_grammar_roundtrip(text, expected):
    assert gdl.parse_trigger(text) == expected
    assert gdl.trigger_text(expected) == text


@pytest.mark.parametrize("text,expected", [
    ("DESTROY $2", gdl.Destroy(2)),
    ("DESTROY wall", gdl.Destroy("wall")),
    ("SFX punch", gdl.Sfx("punch")),
    ("SCORE -1", gdl.Score(-1)),
    ("SET haskey 1", gdl.SetVar("haskey", 1)),
    ("ADD gold -2", gdl.AddVar("gold", -2)),
    ("WIN", gdl.Win()),
    ("LOSE", gdl.Lose()),
    ("SPAWN ghost $1", gdl.Spawn("ghost", 1)),
    ("TRANSFORM $2 ghost", gdl.Transform(2, "ghost")),
])
def test_command_grammar_roundtrip(text, expected):
    assert gdl.parse_command(text) == expected
    assert gdl.command_text(expected) == text


@pytest.mark.parametrize("bad", [
    "OVERLAP a", "TICK", "TICK x", "VAR a XX 1", "COUNT a EQ",
    "NOPE a b", "OVERLAP  a b", "",
])
def test_bad_trigger_text(bad):
    with pytest.raises(gdl.SchemaError):
        gdl.parse_trigger(bad)


@pytest.mark.parametrize("bad", [
    "DESTROY", "DESTROY a b", "SCORE one", "SET x", "WIN now",
    "SPAWN ghost 1", "TRANSFORM ghost $1", "POKE a",
])
def test_bad_command_text(bad):
    with pytest.raises(gdl.SchemaError):
        gdl.parse_command(bad)


def test_guard_uses_var_grammar():
    assert gdl.parse_guard("VAR haskey GTE 1") == gdl.Guard("haskey", "GTE", 1)
    with pytest.raises(gdl.SchemaError):
        gdl.parse_guard("COUNT enemy EQ 0")


# ── parse errors ──────────────────────────────────────────────────────

def test_malformed_json():
    with pytest.raises(gdl.MalformedJson):
        gdl.parse_game("{not json")
    with pytest.raises(gdl.MalformedJson):
        gdl.parse_game('{"a": 1, // comment\n}')


def test_missing_field_path():
    d = dict(MINIMAL)
    del d["gamename"]
    with pytest.raises(gdl.SchemaError) as err:
        gdl.parse_game(json.dumps(d))
    assert err.value.path == "gamename"


def test_mistyped_field():
    with pytest.raises(gdl.SchemaError) as err:
        gdl.parse_game(doc(numplayers=[1]))
    assert err.value.path == "numplayers"


def test_unknown_top_level_field_rejected():
    with pytest.raises(gdl.SchemaError):
        gdl.parse_game(doc(mystery=1))


def test_bad_color_shape():
    with pytest.raises(gdl.SchemaError):
        gdl.parse_game(doc(color_accent=[0.1, 0.2]))
    with pytest.raises(gdl.SchemaError):
        gdl.parse_game(doc(color_accent=[0.1, "x", 0.3]))


def test_nonpositive_dimensions_rejected():
    with pytest.raises(gdl.SchemaError):
        gdl.parse_game(doc(levels=[{"type": "raw", "width": 0, "height": 3,
                                    "data": []}]))


def test_dangling_piece_in_trigger():
    text = doc(pieces=PIECES,
               rules=[{"trigger": "OVERLAP playerpiece ghost", "code": ["WIN"]}])
    with pytest.raises(gdl.DanglingReference) as err:
        gdl.parse_game(text)
    assert err.value.name == "ghost"
    assert err.value.path == "rules[0].trigger"


def test_dangling_variable_in_guard():
    text = doc(pieces=PIECES,
               rules=[{"trigger": "OVERLAP playerpiece enemy",
                       "guards": ["VAR haskey GTE 1"], "code": ["WIN"]}])
    with pytest.raises(gdl.DanglingReference) as err:
        gdl.parse_game(text)
    assert err.value.name == "haskey"


def test_dangling_variable_in_command():
    text = doc(pieces=PIECES,
               rules=[{"trigger": "OVERLAP playerpiece enemy",
                       "code": ["SET gold 3"]}])
    with pytest.raises(gdl.DanglingReference) as err:
        gdl.parse_game(text)
    assert err.value.name == "gold"


# ── validation ────────────────────────────────────────────────────────

def build(**overrides) -> gdl.GameDefinition:
    return gdl.parse_game(doc(**overrides))


def test_dangling_level_code():
    g = build(pieces=PIECES,
              levels=[{"type": "raw", "width": 2, "height": 2,
                       "data": [0, 1, 2, 5]}])
    report = gdl.validate_game(g)
    assert [v.kind for v in report.violations] == ["DanglingCode"]
    assert report.violations[0].path == "levels[0].data[3]"


def test_validate_five_piece_grid_codes_ok():
    g = build(pieces=PIECES + [
        {"name": "wall", "layer": 3, "sprite": "s", "animated": False,
         "flips": False}, {"name": "exit", "layer": 2, "sprite": "d",
                           "animated": False, "flips": False}],
        levels=[{"type": "raw", "width": 5, "height": 5,
                 "data": [0, 4, 4, 0, 3, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0,
                          1, 0, 0, 0, 0, 0, 0, 4, 0, 3]}])
    assert gdl.validate_game(g).ok()


def test_duplicate_names_flagged():
    g = build(variables=[{"name": "a", "onscreen": "", "startvalue": 0},
                         {"name": "a", "onscreen": "", "startvalue": 1}])
    assert any(v.kind == "DuplicateName" for v in gdl.validate_game(g).violations)


def test_out_of_range_values():
    g = build(numplayers=0, tick_cap=0, color_accent=[0, 0, 2.0])
    kinds = [(v.kind, v.path) for v in gdl.validate_game(g).violations]
    assert ("OutOfRange", "numplayers") in kinds
    assert ("OutOfRange", "tick_cap") in kinds
    assert ("OutOfRange", "color_accent.b") in kinds


def test_rule_violations():
    g = gdl.GameDefinition(
        gamename="t", numplayers=1, floor="f", music="m",
        color_accent=gdl.ColorTriple(0, 0, 0), color_body=gdl.ColorTriple(0, 0, 0),
        variables=(), pieces=(gdl.PieceDef("a", 0, "s", False, False),),
        rules=(gdl.Rule(gdl.TickTrigger(0), (), ()),
               gdl.Rule(gdl.TickTrigger(1), (), (gdl.Destroy(2),)),
               gdl.Rule(gdl.OverlapTrigger("a", "a"), (), (gdl.Score(1),))),
        levels=())
    kinds = [v.kind for v in gdl.validate_game(g).violations]
    # deterministic traversal order: rule 0 (interval, empty body), rule 1
    # (binding without OVERLAP), rule 2 (SCORE without "score")
    assert kinds == ["OutOfRange", "EmptyCode", "BadBinding",
                     "MissingScoreVariable"]


def test_validation_report_paths_are_stable():
    g = build(pieces=[{"name": "", "layer": -1, "sprite": "s",
                       "animated": False, "flips": False}])
    report = gdl.validate_game(g)
    assert [(v.kind, v.path) for v in report.violations] == [
        ("BadShape", "pieces[0].name"), ("OutOfRange", "pieces[0].layer")]
