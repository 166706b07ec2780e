"""Evolutionary level generation.

Genomes are ordered lists of primitive shape strokes (rects, lines,
scatters) plus mandatory singleton placements that are stamped last so
players and exits can never be painted over. Fitness rewards levels the
MCTS agent can win, penalizes levels random play wins too often (playable
but not trivial), and adds a light symmetry weighting:

    score = 2*[mcts_won] - random_won_fraction
            + 0.25*symmetry + 0.05*min(1, unique_states/500)

Every candidate is first probed with the exhaustive solver on a small
state budget: a certified-unwinnable grid skips the MCTS episode outright
(the probe is sound, so no winnable level is ever skipped), which keeps
whole-run cost inside the evaluation budget. Per-candidate agent seeds
derive from the grid content, so identical grids share one cached
evaluation and re-evaluating an elite can never change its score.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from . import agents, gdl
from .rng import Splitmix64, derive_seed


class LevelDesignError(Exception):
    pass


class InfeasibleDefinition(LevelDesignError):
    """The definition cannot support level evolution (e.g. no player)."""


# ── genome ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Rect:
    code: int
    x: int
    y: int
    w: int
    h: int
    filled: bool = False


@dataclass(frozen=True)
class Line:
    code: int
    x0: int
    y0: int
    x1: int
    y1: int  # axis-aligned: x0 == x1 or y0 == y1


@dataclass(frozen=True)
class Scatter:
    code: int
    count: int
    seed: int


@dataclass(frozen=True)
class LevelGenome:
    width: int
    height: int
    strokes: tuple
    placements: tuple  # ((code, x, y), ...) stamped after all strokes


@dataclass
class LevelFitness:
    playable: bool
    mcts_won: bool
    random_won_fraction: float
    symmetry: float
    unique_state_count: int
    score: float


@dataclass
class EvolveParams:
    population: int = 40
    generations: int = 50
    tournament_k: int = 3
    crossover_rate: float = 0.7
    mutation_rate: float = 0.2
    elitism: int = 2
    width: int = 5
    height: int = 5
    max_strokes: int = 8
    # evaluation budgets
    random_episodes: int = 6
    episode_ticks: int = 120
    probe_cap: int = 3000
    mcts: agents.MctsParams = field(default_factory=lambda: agents.MctsParams(
        iterations=60, rollout_depth=12))
    mcts_moves: int = 30


# ── decoding ──────────────────────────────────────────────────────────

def decode_genome(genome: LevelGenome, g: gdl.GameDefinition) -> gdl.LevelDef:
    """Rasterize strokes in order (later strokes overwrite), then stamp
    placements."""
    w, h = genome.width, genome.height
    grid = [0] * (w * h)

    def put(code, x, y):
        if 0 <= x < w and 0 <= y < h:
            grid[y * w + x] = code

    for stroke in genome.strokes:
        if isinstance(stroke, Rect):
            for yy in range(stroke.y, stroke.y + stroke.h):
                for xx in range(stroke.x, stroke.x + stroke.w):
                    on_edge = (xx in (stroke.x, stroke.x + stroke.w - 1)
                               or yy in (stroke.y, stroke.y + stroke.h - 1))
                    if stroke.filled or on_edge:
                        put(stroke.code, xx, yy)
        elif isinstance(stroke, Line):
            x0, x1 = sorted((stroke.x0, stroke.x1))
            y0, y1 = sorted((stroke.y0, stroke.y1))
            for yy in range(y0, y1 + 1):
                for xx in range(x0, x1 + 1):
                    put(stroke.code, xx, yy)
        elif isinstance(stroke, Scatter):
            rng = Splitmix64(stroke.seed)
            for _ in range(stroke.count):
                put(stroke.code, rng.randrange(w), rng.randrange(h))
        else:
            raise LevelDesignError(f"unknown stroke {stroke!r}")

    for code, x, y in genome.placements:
        put(code, x, y)
    return gdl.LevelDef(width=w, height=h, data=tuple(grid))


def symmetry_score(level: gdl.LevelDef) -> float:
    """Max mirror-match fraction over the two axes (1.0 for a 1×1 grid)."""
    w, h, d = level.width, level.height, level.data
    total = w * h
    top_bottom = sum(1 for y in range(h) for x in range(w)
                     if d[y * w + x] == d[(h - 1 - y) * w + x])
    left_right = sum(1 for y in range(h) for x in range(w)
                     if d[y * w + x] == d[y * w + (w - 1 - x)])
    return max(top_bottom, left_right) / total


# ── fitness ───────────────────────────────────────────────────────────

def _content_seed(level: gdl.LevelDef) -> int:
    blob = f"{level.width}x{level.height}:" + ",".join(map(str, level.data))
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big")


def scaled_probe(g: gdl.GameDefinition, level_index: int,
                 state_cap: int) -> agents.ReachabilityReport | None:
    """exhaustive_solve with the state budget shrunk by the 4^k branching
    of k random-behavior instances; None when even that is hopeless."""
    from . import engine
    k = engine.random_slots(engine.init_state(g, level_index, 0))
    if k >= 3:
        return None
    return agents.exhaustive_solve(g, level_index,
                                   state_cap=max(64, state_cap >> (3 * k)))


def evaluate_level(g: gdl.GameDefinition, level: gdl.LevelDef,
                   params: EvolveParams) -> tuple[LevelFitness, bool]:
    """Score one grid; also report whether the probe certified it winnable
    (an untruncated exhaustive result, used to break score ties)."""
    candidate = replace(g, levels=(level,))
    base = _content_seed(level)
    probe = scaled_probe(candidate, 0, params.probe_cap)

    wins = 0
    episode_unique = 0
    for i in range(params.random_episodes):
        t = agents.random_episode(candidate, 0, derive_seed(base, 10, i),
                                  max_ticks=params.episode_ticks,
                                  record_events=False)
        wins += t.outcome == "Won"
        episode_unique = max(episode_unique, t.unique_states)
    frac = wins / params.random_episodes if params.random_episodes else 0.0
    unique = len(probe.reachable_hashes) if probe else episode_unique

    if probe is None or probe.winnable or probe.truncated:
        t = agents.mcts_episode(candidate, 0, params.mcts,
                                derive_seed(base, 11),
                                max_moves=params.mcts_moves,
                                record_events=False)
        mcts_won = t.outcome == "Won"
    else:
        mcts_won = False  # certified unwinnable, MCTS cannot disagree

    playable = (probe is not None and probe.winnable) or mcts_won or wins > 0
    sym = symmetry_score(level)
    score = (2.0 * mcts_won - frac + 0.25 * sym
             + 0.05 * min(1.0, unique / 500))
    fit = LevelFitness(playable, mcts_won, frac, sym, unique, score)
    certified = probe is not None and probe.winnable and not probe.truncated
    return fit, certified


# ── genome operators ──────────────────────────────────────────────────

def _mandatory_codes(g: gdl.GameDefinition) -> list:
    """Controlled pieces, plus non-controlled operands of OVERLAP rules
    that award a win (the exit archetype)."""
    names = [p.name for p in g.pieces]
    codes = [i + 1 for i, p in enumerate(g.pieces) if p.controlled]
    for rule in g.rules:
        if not any(isinstance(c, gdl.Win) for c in rule.code):
            continue
        if isinstance(rule.trigger, gdl.OverlapTrigger):
            for name in (rule.trigger.piece_a, rule.trigger.piece_b):
                code = names.index(name) + 1
                if code not in codes:
                    codes.append(code)
    return codes


def _random_stroke(rng: Splitmix64, n_codes: int, w: int, h: int):
    code = 1 + rng.randrange(n_codes)
    kind = rng.randrange(3)
    if kind == 0:
        x, y = rng.randrange(w), rng.randrange(h)
        return Rect(code, x, y, 1 + rng.randrange(w - x),
                    1 + rng.randrange(h - y), rng.randrange(2) == 0)
    if kind == 1:
        if rng.randrange(2):  # horizontal
            y = rng.randrange(h)
            return Line(code, rng.randrange(w), y, rng.randrange(w), y)
        x = rng.randrange(w)
        return Line(code, x, rng.randrange(h), x, rng.randrange(h))
    return Scatter(code, 1 + rng.randrange(4), rng.next_uint64() & 0xFFFF)


def _fresh_placements(rng: Splitmix64, codes: list, w: int, h: int) -> tuple:
    cells: list = []
    out = []
    for code in codes:
        while True:
            cell = (rng.randrange(w), rng.randrange(h))
            if cell not in cells:
                cells.append(cell)
                break
        out.append((code, cell[0], cell[1]))
    return tuple(out)


def _random_genome(rng: Splitmix64, codes: list, n_codes: int,
                   params: EvolveParams) -> LevelGenome:
    w, h = params.width, params.height
    strokes = tuple(_random_stroke(rng, n_codes, w, h)
                    for _ in range(1 + rng.randrange(3)))
    return LevelGenome(w, h, strokes, _fresh_placements(rng, codes, w, h))


def _crossover(rng: Splitmix64, a: LevelGenome, b: LevelGenome,
               params: EvolveParams) -> LevelGenome:
    ca = rng.randrange(len(a.strokes) + 1)
    cb = rng.randrange(len(b.strokes) + 1)
    strokes = (a.strokes[:ca] + b.strokes[cb:])[:params.max_strokes]
    return replace(a, strokes=strokes)


def _perturb_stroke(rng: Splitmix64, stroke, w: int, h: int):
    if isinstance(stroke, Rect):
        x, y = rng.randrange(w), rng.randrange(h)
        return replace(stroke, x=x, y=y, w=1 + rng.randrange(w - x),
                       h=1 + rng.randrange(h - y))
    if isinstance(stroke, Line):
        if stroke.y0 == stroke.y1:
            y = rng.randrange(h)
            return replace(stroke, y0=y, y1=y, x0=rng.randrange(w),
                           x1=rng.randrange(w))
        x = rng.randrange(w)
        return replace(stroke, x0=x, x1=x, y0=rng.randrange(h),
                       y1=rng.randrange(h))
    return replace(stroke, seed=rng.next_uint64() & 0xFFFF,
                   count=1 + rng.randrange(4))


def _mutate(rng: Splitmix64, genome: LevelGenome, n_codes: int,
            params: EvolveParams) -> LevelGenome:
    w, h = genome.width, genome.height
    op = rng.randrange(4)
    strokes = list(genome.strokes)
    if op == 0 and strokes:  # perturb one stroke
        i = rng.randrange(len(strokes))
        strokes[i] = _perturb_stroke(rng, strokes[i], w, h)
    elif op == 1 and len(strokes) < params.max_strokes:  # add
        strokes.append(_random_stroke(rng, n_codes, w, h))
    elif op == 2 and strokes:  # remove
        strokes.pop(rng.randrange(len(strokes)))
    else:  # move one placement off the other placements' cells
        placements = list(genome.placements)
        i = rng.randrange(len(placements))
        taken = {(px, py) for j, (_, px, py) in enumerate(placements)
                 if j != i}
        for _ in range(16):
            cell = (rng.randrange(w), rng.randrange(h))
            if cell not in taken:
                code = placements[i][0]
                placements[i] = (code, cell[0], cell[1])
                break
        return replace(genome, strokes=tuple(strokes),
                       placements=tuple(placements))
    return replace(genome, strokes=tuple(strokes))


# ── the evolutionary loop ─────────────────────────────────────────────

def evolve_level(g: gdl.GameDefinition, params: EvolveParams,
                 seed: int) -> tuple:
    """Run the GA and return (best LevelDef, its LevelFitness, log).

    The log holds one {"generation", "best", "mean"} entry per generation.
    Among equal best scores the earliest probe-certified individual wins.
    """
    if not any(p.controlled for p in g.pieces):
        raise InfeasibleDefinition("no controlled piece to place")
    codes = _mandatory_codes(g)
    if len(codes) > params.width * params.height:
        raise InfeasibleDefinition("board too small for mandatory pieces")
    n_codes = len(g.pieces)

    rng = Splitmix64(derive_seed(seed, 5))
    pop = [_random_genome(rng, codes, n_codes, params)
           for _ in range(params.population)]
    cache: dict = {}

    def fitness_of(genome):
        level = decode_genome(genome, g)
        key = (level.width, level.height, level.data)
        if key not in cache:
            cache[key] = evaluate_level(g, level, params)
        fit, certified = cache[key]
        return level, fit, certified

    def chance(rate):  # deterministic bernoulli draw
        return rng.randrange(1_000_000) < int(rate * 1_000_000)

    def tournament(scored):
        best = None
        for _ in range(params.tournament_k):
            pick = scored[rng.randrange(len(scored))]
            if best is None or pick[2].score > best[2].score:
                best = pick
        return best[1]

    best_entry = None  # (score, certified, level, fitness)
    log = []
    for generation in range(params.generations):
        if generation:
            order = sorted(range(len(scored)),
                           key=lambda i: (-scored[i][2].score, i))
            next_pop = [scored[i][1] for i in order[:params.elitism]]
            while len(next_pop) < params.population:
                parent = tournament(scored)
                if chance(params.crossover_rate):
                    child = _crossover(rng, parent, tournament(scored), params)
                else:
                    child = parent
                if chance(params.mutation_rate):
                    child = _mutate(rng, child, n_codes, params)
                next_pop.append(child)
            pop = next_pop

        scored = []
        for genome in pop:
            level, fit, certified = fitness_of(genome)
            scored.append((level, genome, fit, certified))
            entry = (fit.score, certified, level, fit)
            if (best_entry is None or entry[0] > best_entry[0]
                    or (entry[0] == best_entry[0] and certified
                        and not best_entry[1])):
                best_entry = entry
        scores = [f.score for _, _, f, _ in scored]
        log.append({"generation": generation,
                    "best": max(scores),
                    "mean": sum(scores) / len(scores)})

    _, _, best_level, best_fit = best_entry
    return best_level, best_fit, log
