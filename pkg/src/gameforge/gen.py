"""Seeded generators for game definitions.

random_definition produces arbitrary-but-valid definitions for round-trip
and fuzz tests; random_skeleton produces rule-less piece sets ("skeletons")
that the studio's ruleset-design activity fills in. Both are pure functions
of their seed.
"""

from __future__ import annotations

from . import gdl
from .rng import Splitmix64, derive_seed

_ADJECTIVES = ("Lost", "Silent", "Amber", "Sunken", "Gilded", "Wandering",
               "Hollow", "Frozen", "Verdant", "Clockwork")
_NOUNS = ("Vault", "Garden", "Catacomb", "Expedition", "Bastion", "Grotto",
          "Reliquary", "Causeway", "Menagerie", "Threshold")
_PIECE_NAMES = ("crate", "ghost", "coin", "gate", "slime", "torch", "statue",
                "serpent", "shard", "warden")
_SPRITES = ("fighter", "golem", "door", "stonewall", "gem", "skull", "flame",
            "chest", "fountain", "idol")
_FLOORS = ("dungeonfloor", "mosaic", "flagstone", "moss")
_TRACKS = ("ominous", "serene", "martial", "gloom")
_SFX = ("punch", "ding", "door", "fanfare", "thud", "chime")
_VAR_NAMES = ("gold", "keys", "hp")


def _color(rng: Splitmix64) -> gdl.ColorTriple:
    return gdl.ColorTriple(rng.randrange(21) / 20, rng.randrange(21) / 20,
                           rng.randrange(21) / 20)


def _gamename(rng: Splitmix64) -> str:
    return f"The {rng.choice(_ADJECTIVES)} {rng.choice(_NOUNS)}"


def random_definition(seed: int) -> gdl.GameDefinition:
    """An arbitrary valid definition: a controlled piece, 1–4 extra pieces,
    0–4 rules over whatever the piece/variable pools allow."""
    rng = Splitmix64(derive_seed(seed, 0x6E))

    variables = []
    if rng.randrange(10) < 8:
        variables.append(gdl.VariableDef("score", "Score", 0))
    for name in _VAR_NAMES:
        if rng.randrange(10) < 3:
            variables.append(gdl.VariableDef(name, name.title() if
                                             rng.randrange(2) else "",
                                             rng.randrange(6) - 1))

    pieces = [gdl.PieceDef("hero", 5, rng.choice(_SPRITES), True,
                           bool(rng.randrange(2)), controlled=True)]
    names = list(_PIECE_NAMES)
    for _ in range(1 + rng.randrange(4)):
        name = names.pop(rng.randrange(len(names)))
        behavior = ("static", "static", "static", "chase", "random")[rng.randrange(5)]
        pieces.append(gdl.PieceDef(
            name, rng.randrange(7), rng.choice(_SPRITES),
            bool(rng.randrange(2)), bool(rng.randrange(2)),
            solid=rng.randrange(4) == 0, behavior=behavior))

    var_names = [v.name for v in variables]
    rules = [_random_rule(rng, pieces, var_names) for _ in range(rng.randrange(5))]

    levels = []
    for _ in range(1 + rng.randrange(2)):
        w, h = 3 + rng.randrange(4), 3 + rng.randrange(4)
        data = tuple(0 if rng.randrange(10) < 7 else 1 + rng.randrange(len(pieces))
                     for _ in range(w * h))
        levels.append(gdl.LevelDef(w, h, data))

    tick_cap = gdl.DEFAULT_TICK_CAP if rng.randrange(5) else 50 + rng.randrange(450)
    g = gdl.GameDefinition(
        gamename=_gamename(rng), numplayers=1, floor=rng.choice(_FLOORS),
        music=rng.choice(_TRACKS), color_accent=_color(rng),
        color_body=_color(rng), variables=tuple(variables),
        pieces=tuple(pieces), rules=tuple(rules), levels=tuple(levels),
        tick_cap=tick_cap)
    assert gdl.validate_game(g).ok(), "generator must emit valid definitions"
    return g


def _random_rule(rng: Splitmix64, pieces, var_names) -> gdl.Rule:
    piece_names = [p.name for p in pieces]
    cmp = rng.choice(gdl.CMP_OPS)
    kind = rng.randrange(4)
    if kind == 2 and not var_names:
        kind = 0
    if kind == 0:
        trigger = gdl.OverlapTrigger(rng.choice(piece_names), rng.choice(piece_names))
        bindings = 2
    elif kind == 1:
        trigger = gdl.TickTrigger(1 + rng.randrange(9))
        bindings = 0
    elif kind == 2:
        trigger = gdl.VarTrigger(rng.choice(var_names), cmp, rng.randrange(4))
        bindings = 0
    else:
        trigger = gdl.CountTrigger(rng.choice(piece_names), cmp, rng.randrange(3))
        bindings = 0

    guards = ()
    if var_names and rng.randrange(4) == 0:
        guards = (gdl.Guard(rng.choice(var_names), rng.choice(gdl.CMP_OPS),
                            rng.randrange(4)),)

    code = []
    for _ in range(1 + rng.randrange(3)):
        choice = rng.randrange(9)
        if choice == 0 and bindings:
            code.append(gdl.Destroy(1 + rng.randrange(bindings)))
        elif choice == 1:
            code.append(gdl.Destroy(rng.choice(piece_names)))
        elif choice == 2:
            code.append(gdl.Sfx(rng.choice(_SFX)))
        elif choice == 3 and "score" in var_names:
            code.append(gdl.Score(rng.randrange(4) - 1))
        elif choice == 4 and var_names:
            code.append(gdl.SetVar(rng.choice(var_names), rng.randrange(4)))
        elif choice == 5 and var_names:
            code.append(gdl.AddVar(rng.choice(var_names), rng.randrange(3) - 1))
        elif choice == 6:
            code.append(gdl.Win())
        elif choice == 7 and bindings:
            code.append(gdl.Spawn(rng.choice(piece_names), 1 + rng.randrange(bindings)))
        elif choice == 8 and bindings:
            code.append(gdl.Transform(1 + rng.randrange(bindings),
                                      rng.choice(piece_names)))
        else:
            code.append(gdl.Lose())
    return gdl.Rule(trigger, guards, tuple(code))


_SKELETON_EXTRAS = (
    gdl.PieceDef("enemy", 5, "golem", True, True, behavior="chase"),
    gdl.PieceDef("bat", 5, "skull", True, True, behavior="random"),
    gdl.PieceDef("key", 2, "gem", False, False),
    gdl.PieceDef("gate", 3, "door", False, False),
    gdl.PieceDef("gem", 2, "chest", False, False),
    gdl.PieceDef("sentry", 5, "idol", True, False),
)


def random_skeleton(seed: int) -> gdl.GameDefinition:
    """A rule-less, level-less Adventure-flavored piece set for the studio:
    one controlled playerpiece, one solid wall, 2–3 extras."""
    rng = Splitmix64(derive_seed(seed, 0x5C))
    pieces = [
        gdl.PieceDef("playerpiece", 5, "fighter", True, True, controlled=True),
        gdl.PieceDef("wall", 3, "stonewall", False, False, solid=True),
    ]
    pool = list(_SKELETON_EXTRAS)
    for _ in range(2 + rng.randrange(2)):
        pieces.append(pool.pop(rng.randrange(len(pool))))
    g = gdl.GameDefinition(
        gamename=_gamename(rng), numplayers=1, floor=rng.choice(_FLOORS),
        music=rng.choice(_TRACKS), color_accent=_color(rng),
        color_body=_color(rng),
        variables=(gdl.VariableDef("score", "Score", 0),),
        pieces=tuple(pieces), rules=(), levels=(), tick_cap=300)
    assert gdl.validate_game(g).ok()
    return g
