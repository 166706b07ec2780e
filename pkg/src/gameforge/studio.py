"""Long-running design studio: an activity loop over a persistent workspace.

The studio owns a knowledge base (pattern catalogue, mechanics log, level
sketches, projects in various stages) and on every step picks one bounded
activity by softmax over need-driven utilities, executes it, appends one
event to an append-only feed, and atomically persists the updated state.

Persistence protocol (crash safety): within a step the event line is
appended to events.jsonl *first*, then catalogue.json and state.json are
rewritten via tempfile + rename. state.json records how many events have
been applied plus the rng state left behind by the last applied one, so a
crash between append and save leaves surplus feed lines that the next run
drops and deterministically re-executes. The feed therefore doubles as a
replay log: re-running it over a fresh knowledge base must reproduce the
final state digest, which `replay_feed` checks line by line.

A workspace serves one studio process at a time, enforced by a pid lock
file; locks owned by dead processes are reclaimed.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace

from . import agents, gdl, gen, leveldesign, mechanics, rulesetdesign
from .rng import Splitmix64, derive_seed
from .trace import canonical_json

ENV_WORKSPACE = "FORGE_WORKSPACE"

RULESET_DESIGN = "RulesetDesign"
LEVEL_DESIGN = "LevelDesign"
MECHANIC_INVENTION = "MechanicInvention"
POTENTIAL_TEST = "PotentialTest"
SHELVE = "Shelve"
RESUME = "Resume"
EXPORT = "Export"

ACTIVITIES = (RULESET_DESIGN, LEVEL_DESIGN, MECHANIC_INVENTION,
              POTENTIAL_TEST, SHELVE, RESUME, EXPORT)

STAGES = ("has_ruleset", "ruleset_promising", "has_levels", "levels_playable")

_STATE_FILE = "state.json"
_CATALOGUE_FILE = "catalogue.json"
_EVENTS_FILE = "events.jsonl"
_LOCK_FILE = "lock.pid"


class StudioError(Exception):
    pass


class WorkspaceLocked(StudioError):
    """Another live studio process owns this workspace."""


class CorruptWorkspace(StudioError):
    """Stored state failed validation; carries details of the first fault."""


class PersistenceFailure(StudioError):
    """A write failed mid-step; the studio must stop rather than diverge."""


class IoFailure(StudioError):
    pass


class ProjectIncomplete(StudioError):
    pass


class BelowThreshold(StudioError):
    pass


# ── types ────────────────────────────────────────────────────────────────


@dataclass
class Project:
    """One game under construction. `stage` flags only ever accumulate,
    except when a Resume event revises the project and says so."""

    id: str
    definition: gdl.GameDefinition
    stage: set = field(default_factory=set)
    shelved_since: int | None = None
    quality: float | None = None
    dead_ruleset: bool = False
    exported_step: int | None = None
    evidence: dict | None = None
    history: list = field(default_factory=list)  # [[step, activity], ...]
    seeds: dict = field(default_factory=dict)


@dataclass
class KnowledgeBase:
    catalogue: rulesetdesign.Catalogue
    mechanics_log: list = field(default_factory=list)
    sketches: list = field(default_factory=list)
    projects: list = field(default_factory=list)
    event_log_position: int = 0

    def project(self, pid: str) -> Project:
        for p in self.projects:
            if p.id == pid:
                return p
        raise KeyError(pid)


@dataclass
class ActivityEvent:
    step: int
    activity: str
    project: str | None
    summary: str
    payload: dict


@dataclass
class StudioConfig:
    """Weights and per-activity budgets. Defaults are sized so a few
    hundred steps finish in minutes while every activity stays reachable."""

    workspace: str | None = None
    temperature: float = 1.0
    w_ruleset: float = 1.0
    w_level: float = 3.0
    w_mechanic: float = 0.8
    w_potential: float = 2.5
    w_shelve: float = 1.0
    w_resume: float = 2.0
    w_export: float = 5.0
    max_projects: int = 6
    assemble_patterns: int = 2
    stale_after: int = 25
    resume_cooldown: int = 12
    mechanic_batch: int = 5
    mechanic_state_cap: int = 8000
    certify_cap: int = 20000
    ga: leveldesign.EvolveParams = field(default_factory=lambda:
        leveldesign.EvolveParams(
            population=8, generations=4, probe_cap=1500,
            random_episodes=4, episode_ticks=80,
            mcts=agents.MctsParams(iterations=40, rollout_depth=10),
            mcts_moves=25))
    potential: rulesetdesign.PotentialBudget = field(default_factory=lambda:
        rulesetdesign.PotentialBudget(
            random_episodes=8, mcts_episodes=1, episode_ticks=100,
            mcts=agents.MctsParams(iterations=40, rollout_depth=10),
            mcts_moves=40))


# ── knowledge-base serialization ─────────────────────────────────────────


def _project_doc(p: Project) -> dict:
    return {
        "id": p.id,
        "definition": gdl.serialize_game(p.definition),
        "stage": sorted(p.stage),
        "shelved_since": p.shelved_since,
        "quality": p.quality,
        "dead_ruleset": p.dead_ruleset,
        "exported_step": p.exported_step,
        "evidence": p.evidence,
        "history": p.history,
        "seeds": p.seeds,
    }


def _project_from_doc(doc: dict) -> Project:
    try:
        g = gdl.parse_game(doc["definition"])
    except (gdl.GdlError, KeyError, TypeError) as e:
        raise CorruptWorkspace(f"project definition: {e}") from e
    rep = gdl.validate_game(g)
    if not rep.ok():
        raise CorruptWorkspace(f"project {doc.get('id')}: {rep.errors[0]}")
    stage = set(doc.get("stage", ()))
    if not stage <= set(STAGES):
        raise CorruptWorkspace(f"unknown stage flags {sorted(stage)}")
    return Project(
        id=doc["id"], definition=g, stage=stage,
        shelved_since=doc.get("shelved_since"),
        quality=doc.get("quality"),
        dead_ruleset=doc.get("dead_ruleset", False),
        exported_step=doc.get("exported_step"),
        evidence=doc.get("evidence"),
        history=[list(h) for h in doc.get("history", [])],
        seeds=dict(doc.get("seeds", {})))


def _kb_doc(kb: KnowledgeBase) -> dict:
    return {
        "catalogue_version": kb.catalogue.version,
        "mechanics_log": kb.mechanics_log,
        "sketches": kb.sketches,
        "projects": [_project_doc(p) for p in kb.projects],
        "event_log_position": kb.event_log_position,
    }


def kb_digest(kb: KnowledgeBase) -> str:
    """Identity of the whole knowledge base, catalogue included."""
    doc = _kb_doc(kb)
    doc["catalogue"] = json.loads(rulesetdesign.catalogue_to_json(kb.catalogue))
    blob = canonical_json(doc)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _event_doc(ev: ActivityEvent) -> dict:
    return {"step": ev.step, "activity": ev.activity, "project": ev.project,
            "summary": ev.summary, "payload": ev.payload}


def _event_from_doc(doc: dict) -> ActivityEvent:
    try:
        return ActivityEvent(doc["step"], doc["activity"], doc["project"],
                             doc["summary"], doc["payload"])
    except (KeyError, TypeError) as e:
        raise CorruptWorkspace(f"event record: {e}") from e


# ── workspace persistence ────────────────────────────────────────────────


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    try:
        with open(tmp, "w") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as e:
        raise PersistenceFailure(f"writing {os.path.basename(path)}: {e}") from e


def save_workspace(kb: KnowledgeBase, workspace: str,
                   rng_state: int | None = None, seed: int | None = None) -> None:
    """Atomically rewrite catalogue.json then state.json. When rng_state or
    seed are omitted the values already on disk are preserved."""
    os.makedirs(workspace, exist_ok=True)
    prior = {}
    state_path = os.path.join(workspace, _STATE_FILE)
    if (rng_state is None or seed is None) and os.path.exists(state_path):
        try:
            with open(state_path) as f:
                prior = json.load(f)
        except (OSError, ValueError):
            prior = {}
    doc = _kb_doc(kb)
    doc["schema"] = 1
    doc["rng_state"] = rng_state if rng_state is not None else prior.get("rng_state", 0)
    doc["seed"] = seed if seed is not None else prior.get("seed", 0)
    _atomic_write(os.path.join(workspace, _CATALOGUE_FILE),
                  rulesetdesign.catalogue_to_json(kb.catalogue))
    _atomic_write(state_path, canonical_json(doc) + "\n")


def _read_json(path: str, what: str):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise IoFailure(f"reading {what}: {e}") from e
    try:
        return json.loads(text)
    except ValueError as e:
        raise CorruptWorkspace(f"{what}: {e}") from e


def _load_state(workspace: str) -> tuple[KnowledgeBase, int, int]:
    """(kb, rng_state, seed). CorruptWorkspace on any validation failure."""
    state_path = os.path.join(workspace, _STATE_FILE)
    if not os.path.exists(state_path):
        raise IoFailure(f"no workspace state at {state_path}")
    doc = _read_json(state_path, _STATE_FILE)
    try:
        catalogue = rulesetdesign.catalogue_from_json(
            open(os.path.join(workspace, _CATALOGUE_FILE)).read())
    except OSError as e:
        raise CorruptWorkspace(f"catalogue missing: {e}") from e
    except rulesetdesign.RulesetError as e:
        raise CorruptWorkspace(f"catalogue: {e}") from e
    if not isinstance(doc, dict):
        raise CorruptWorkspace("state.json is not an object")
    if doc.get("catalogue_version", catalogue.version) > catalogue.version:
        raise CorruptWorkspace("state expects a newer catalogue than stored")
    projects = [_project_from_doc(d) for d in doc.get("projects", [])]
    ids = [p.id for p in projects]
    if len(set(ids)) != len(ids):
        raise CorruptWorkspace("duplicate project ids")
    kb = KnowledgeBase(
        catalogue=catalogue,
        mechanics_log=list(doc.get("mechanics_log", [])),
        sketches=list(doc.get("sketches", [])),
        projects=projects,
        event_log_position=int(doc.get("event_log_position", 0)))
    return kb, int(doc.get("rng_state", 0)), int(doc.get("seed", 0))


def load_workspace(workspace: str) -> KnowledgeBase:
    """Load and validate a stored knowledge base."""
    return _load_state(workspace)[0]


def load_events(workspace: str) -> list[ActivityEvent]:
    """Parse the feed, silently dropping a torn trailing line."""
    path = os.path.join(workspace, _EVENTS_FILE)
    if not os.path.exists(path):
        return []
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise IoFailure(f"reading {_EVENTS_FILE}: {e}") from e
    events = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            events.append(_event_from_doc(json.loads(line)))
        except ValueError:
            if i == len(lines) - 1:
                break  # torn tail from a crash mid-append
            raise CorruptWorkspace(f"events.jsonl line {i + 1} is not JSON")
    for i, ev in enumerate(events):
        if ev.step != i:
            raise CorruptWorkspace(
                f"events.jsonl line {i + 1}: step {ev.step}, expected {i}")
    return events


def _append_event(workspace: str, ev: ActivityEvent) -> None:
    try:
        with open(os.path.join(workspace, _EVENTS_FILE), "a") as f:
            f.write(canonical_json(_event_doc(ev)) + "\n")
            f.flush()
            os.fsync(f.fileno())
    except OSError as e:
        raise PersistenceFailure(f"appending event: {e}") from e


def _truncate_events(workspace: str, count: int) -> None:
    """Drop feed lines past `count` (surplus from a crash before save)."""
    path = os.path.join(workspace, _EVENTS_FILE)
    events = load_events(workspace)[:count]
    text = "".join(canonical_json(_event_doc(e)) + "\n" for e in events)
    _atomic_write(path, text)


# ── locking ──────────────────────────────────────────────────────────────


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


class _Lock:
    def __init__(self, workspace: str):
        self.path = os.path.join(workspace, _LOCK_FILE)

    def acquire(self) -> None:
        if os.path.exists(self.path):
            try:
                pid = int(open(self.path).read().strip())
            except (OSError, ValueError):
                pid = -1
            if pid > 0 and _pid_alive(pid):
                raise WorkspaceLocked(f"workspace held by pid {pid}")
            # stale lock from a dead process: reclaim
        _atomic_write(self.path, str(os.getpid()))

    def release(self) -> None:
        try:
            os.unlink(self.path)
        except OSError:
            pass


# ── activity selection ───────────────────────────────────────────────────


def _active(kb: KnowledgeBase) -> list:
    return [p for p in kb.projects
            if p.shelved_since is None and p.exported_step is None]


def _needs_ruleset(kb): return [p for p in _active(kb)
                                if "has_ruleset" not in p.stage]


def _needs_potential(kb): return [p for p in _active(kb)
                                  if "has_ruleset" in p.stage
                                  and "ruleset_promising" not in p.stage
                                  and not p.dead_ruleset]


def _win_within(g: gdl.GameDefinition, horizon: int) -> bool:
    """True when some WIN rule can fire within `horizon` ticks: slow-burn
    TICK wins past the level-design budget can never be witnessed there."""
    for r in g.rules:
        if not any(isinstance(c, gdl.Win) for c in r.code):
            continue
        if not isinstance(r.trigger, gdl.TickTrigger) or r.trigger.every <= horizon:
            return True
    return False


def _needs_levels(kb, horizon): return [
    p for p in _active(kb)
    if "ruleset_promising" in p.stage
    and "levels_playable" not in p.stage
    and not p.dead_ruleset
    and _win_within(p.definition, horizon)]


def _last_touch(p: Project) -> int:
    return p.history[-1][0] if p.history else 0


def _shelvable(kb, cfg, step): return [
    p for p in _active(kb)
    if p.dead_ruleset or step - _last_touch(p) > cfg.stale_after]


def _resumable(kb, cfg, step): return [
    p for p in kb.projects
    if p.shelved_since is not None and p.exported_step is None
    and step - p.shelved_since >= cfg.resume_cooldown]


def _export_ready(kb): return [
    p for p in _active(kb)
    if "ruleset_promising" in p.stage and "levels_playable" in p.stage
    and p.evidence is not None and p.evidence.get("winnable")]


def utilities(kb: KnowledgeBase, cfg: StudioConfig) -> dict:
    """Need scores per activity; zero means structurally unavailable."""
    step = kb.event_log_position
    banked = [e["step"] for e in kb.mechanics_log if e.get("banked")]
    staleness = step - (max(banked) if banked else -20)
    room = 1 if len(_active(kb)) < cfg.max_projects else 0
    return {
        RULESET_DESIGN: cfg.w_ruleset * (room + len(_needs_ruleset(kb))),
        LEVEL_DESIGN: cfg.w_level * len(_needs_levels(kb, cfg.ga.mcts_moves)),
        MECHANIC_INVENTION: cfg.w_mechanic * (1 + staleness / 20),
        POTENTIAL_TEST: cfg.w_potential * len(_needs_potential(kb)),
        SHELVE: cfg.w_shelve * len(_shelvable(kb, cfg, step)),
        RESUME: cfg.w_resume * len(_resumable(kb, cfg, step)),
        EXPORT: cfg.w_export * len(_export_ready(kb)),
    }


def select_activity(kb: KnowledgeBase, rng: Splitmix64,
                    cfg: StudioConfig | None = None) -> tuple[str, str | None]:
    """Softmax draw over positive-utility activities; the per-activity
    target is the lowest-id eligible project, chosen without randomness."""
    cfg = cfg or StudioConfig()
    step = kb.event_log_position
    util = utilities(kb, cfg)
    live = [a for a in ACTIVITIES if util[a] > 0.0]
    if not live:
        live = [MECHANIC_INVENTION]
    if cfg.temperature <= 1e-9:
        choice = max(live, key=lambda a: util[a])  # ties: first in ACTIVITIES
    else:
        top = max(util[a] for a in live)
        ws = [math.exp((util[a] - top) / cfg.temperature) for a in live]
        total = sum(ws)
        r = (rng.next_uint64() >> 11) / float(1 << 53) * total
        choice = live[-1]
        for a, w in zip(live, ws):
            r -= w
            if r < 0:
                choice = a
                break

    def first(ps):
        return min(ps, key=lambda p: p.id).id if ps else None

    target = None
    if choice == RULESET_DESIGN:
        target = first(_needs_ruleset(kb))
    elif choice == POTENTIAL_TEST:
        target = first(_needs_potential(kb))
    elif choice == LEVEL_DESIGN:
        target = first(_needs_levels(kb, cfg.ga.mcts_moves))
    elif choice == SHELVE:
        target = first(_shelvable(kb, cfg, step))
    elif choice == RESUME:
        target = first(_resumable(kb, cfg, step))
    elif choice == EXPORT:
        target = first(_export_ready(kb))
    return choice, target


# ── activities ───────────────────────────────────────────────────────────


def _touch(p: Project, step: int, activity: str) -> None:
    p.history.append([step, activity])


def _act_ruleset(kb, rng, cfg, envs, target, step, workspace):
    if target is None:
        seed = rng.next_uint64()
        skel = gen.random_skeleton(seed)
        p = Project(id=f"p{len(kb.projects) + 1:04d}", definition=skel)
        p.seeds["skeleton"] = seed
        kb.projects.append(p)
    else:
        p = kb.project(target)
    seed = rng.next_uint64()
    p.definition = rulesetdesign.assemble_ruleset(
        kb.catalogue, p.definition, cfg.assemble_patterns, seed)
    p.seeds["assembly"] = seed
    p.stage.add("has_ruleset")
    _touch(p, step, RULESET_DESIGN)
    names = sorted({r.trigger.__class__.__name__ for r in p.definition.rules})
    return (f"assembled {len(p.definition.rules)} rules for {p.id}",
            {"rules": len(p.definition.rules), "triggers": names,
             "catalogue_version": kb.catalogue.version}, p.id)


def _act_potential(kb, rng, cfg, envs, target, step, workspace):
    p = kb.project(target)
    budget = replace(cfg.potential, seed=rng.next_uint64())
    rep = rulesetdesign.test_potential(p.definition, budget)
    p.seeds["potential"] = budget.seed
    if rep.verdict == "promising":
        p.stage.add("ruleset_promising")
        if not _win_within(p.definition, cfg.ga.mcts_moves):
            p.dead_ruleset = True  # no reachable win: publishable never
    else:
        p.dead_ruleset = True
    _touch(p, step, POTENTIAL_TEST)
    return (f"{p.id} ruleset is {rep.verdict}",
            {"verdict": rep.verdict, "witnesses": len(rep.witnesses),
             "overall": rep.overall}, p.id)


def _act_level(kb, rng, cfg, envs, target, step, workspace):
    p = kb.project(target)
    seed = rng.next_uint64()
    level, fit, log = leveldesign.evolve_level(p.definition, cfg.ga, seed)
    p.seeds.setdefault("levels", []).append(seed)
    p.definition = replace(p.definition,
                           levels=p.definition.levels + (level,))
    idx = len(p.definition.levels) - 1
    p.stage.add("has_levels")
    p.quality = fit.score
    evidence = None
    if fit.mcts_won:
        probe = leveldesign.scaled_probe(p.definition, idx, cfg.certify_cap)
        if probe is not None and probe.winnable and not probe.truncated:
            p.stage.add("levels_playable")
            evidence = {"level": idx, "winnable": True,
                        "shortest_win": list(probe.shortest_win)}
            p.evidence = evidence
    kb.sketches.append({"project": p.id, "step": step,
                        "level": {"width": level.width, "height": level.height,
                                  "data": list(level.data)},
                        "score": fit.score, "mcts_won": fit.mcts_won})
    if evidence is None and len(p.definition.levels) >= 3:
        p.dead_ruleset = True  # three strikes: send it back for revision
    _touch(p, step, LEVEL_DESIGN)
    return (f"evolved level {idx} for {p.id} (score {fit.score:.2f})",
            {"level": idx, "score": fit.score, "mcts_won": fit.mcts_won,
             "playable": fit.playable, "certified": evidence is not None},
            p.id)


def _act_mechanic(kb, rng, cfg, envs, target, step, workspace):
    vocab = mechanics.MechanicVocab()
    bounds = mechanics.SynthBounds()
    seed = rng.next_uint64()
    known = {e["id"] for e in kb.mechanics_log}
    batch = [c for c in mechanics.synthesize_candidates(
                 vocab, bounds, cfg.mechanic_batch * 2, seed)
             if c.id not in known][:cfg.mechanic_batch]
    banked = 0
    for cand in batch:
        rep = mechanics.evaluate_candidate(cand, envs,
                                           state_cap=cfg.mechanic_state_cap)
        entry = {"step": step, "id": cand.id,
                 "rules": [gdl.trigger_text(r.trigger) for r in cand.rules],
                 "interesting": rep.interesting, "banked": False}
        if rep.interesting:
            kb.catalogue = mechanics.bank_mechanic(cand, rep, kb.catalogue)
            entry["banked"] = True
            banked += 1
        kb.mechanics_log.append(entry)
    return (f"mined {len(batch)} candidates, banked {banked}",
            {"evaluated": len(batch), "banked": banked,
             "catalogue_version": kb.catalogue.version}, None)


def _act_shelve(kb, rng, cfg, envs, target, step, workspace):
    p = kb.project(target)
    reason = "dead ruleset" if p.dead_ruleset else "stale"
    p.shelved_since = step
    _touch(p, step, SHELVE)
    return f"shelved {p.id} ({reason})", {"reason": reason}, p.id


def _act_resume(kb, rng, cfg, envs, target, step, workspace):
    """Revision: un-shelve and strip the ruleset so the design loop can
    rebuild it; the only sanctioned way stage flags ever go backwards."""
    p = kb.project(target)
    cleared = sorted(p.stage & {"has_ruleset", "ruleset_promising",
                                "levels_playable"})
    p.stage -= set(cleared)
    p.definition = replace(p.definition, rules=())
    p.dead_ruleset = False
    p.shelved_since = None
    p.evidence = None
    _touch(p, step, RESUME)
    return (f"resumed {p.id} for revision",
            {"revision": True, "cleared": cleared}, p.id)


def _act_export(kb, rng, cfg, envs, target, step, workspace):
    p = kb.project(target)
    path = export_game(p, workspace)
    p.exported_step = step
    _touch(p, step, EXPORT)
    return (f"exported {p.id} to {os.path.basename(path)}",
            {"path": os.path.relpath(path, workspace),
             "digest": gdl.definition_digest(gdl.serialize_game(p.definition))},
            p.id)


_EXECUTORS = {
    RULESET_DESIGN: _act_ruleset,
    LEVEL_DESIGN: _act_level,
    MECHANIC_INVENTION: _act_mechanic,
    POTENTIAL_TEST: _act_potential,
    SHELVE: _act_shelve,
    RESUME: _act_resume,
    EXPORT: _act_export,
}


# ── export ───────────────────────────────────────────────────────────────


def export_game(p: Project, workspace: str) -> str:
    """Write the finished game plus a provenance sidecar; returns the game
    path. The sidecar's winnability evidence can be re-checked by running
    exhaustive_solve on the exported definition."""
    if "has_ruleset" not in p.stage or "has_levels" not in p.stage:
        missing = [s for s in ("has_ruleset", "has_levels") if s not in p.stage]
        raise ProjectIncomplete(f"{p.id} missing {missing}")
    if ("ruleset_promising" not in p.stage or "levels_playable" not in p.stage
            or not p.evidence or not p.evidence.get("winnable")):
        raise BelowThreshold(f"{p.id} has not met the publish threshold")
    text = gdl.serialize_game(p.definition)
    rep = gdl.validate_game(p.definition)
    if not rep.ok():
        raise ProjectIncomplete(f"{p.id}: {rep.errors[0]}")
    out_dir = os.path.join(workspace, "exports")
    os.makedirs(out_dir, exist_ok=True)
    slug = "".join(c if c.isalnum() else "_"
                   for c in p.definition.gamename.lower())
    game_path = os.path.join(out_dir, f"{p.id}_{slug}.json")
    sidecar = {
        "project": p.id,
        "definition_digest": gdl.definition_digest(text),
        "seeds": p.seeds,
        "events": [{"step": s, "activity": a} for s, a in p.history],
        "evidence": p.evidence,
        "quality": p.quality,
    }
    if not any(e["activity"] == LEVEL_DESIGN for e in sidecar["events"]):
        raise ProjectIncomplete(f"{p.id} has no level-design history")
    if not any(e["activity"] == RULESET_DESIGN for e in sidecar["events"]):
        raise ProjectIncomplete(f"{p.id} has no ruleset-design history")
    _atomic_write(game_path, text)
    _atomic_write(os.path.join(out_dir, f"{p.id}_{slug}.provenance.json"),
                  canonical_json(sidecar) + "\n")
    return game_path


# ── the loop ─────────────────────────────────────────────────────────────


def _studio_iteration(kb: KnowledgeBase, rng: Splitmix64, cfg: StudioConfig,
                      envs: list, workspace: str) -> ActivityEvent:
    step = kb.event_log_position
    rng_before = rng.state
    activity, target = select_activity(kb, rng, cfg)
    summary, payload, pid = _EXECUTORS[activity](kb, rng, cfg, envs, target,
                                                 step, workspace)
    payload = dict(payload, rng_before=rng_before, rng_after=rng.state)
    kb.event_log_position = step + 1
    return ActivityEvent(step, activity, pid, summary, payload)


def _recover(kb: KnowledgeBase, workspace: str) -> None:
    """Reconcile feed vs state after a possible crash: surplus feed lines
    (appended but never saved) and torn tails are dropped; the dropped
    steps re-execute identically from the persisted rng state."""
    events = load_events(workspace)
    if len(events) < kb.event_log_position:
        raise CorruptWorkspace(
            f"feed has {len(events)} events but state expects "
            f"{kb.event_log_position}")
    path = os.path.join(workspace, _EVENTS_FILE)
    raw = 0
    if os.path.exists(path):
        raw = sum(1 for line in open(path) if line.strip())
    if len(events) > kb.event_log_position or raw > len(events):
        _truncate_events(workspace, kb.event_log_position)


def run_studio(cfg: StudioConfig, seed: int,
               steps: int) -> tuple[KnowledgeBase, list[ActivityEvent]]:
    """Run `steps` activities against cfg.workspace, creating it on first
    use. `seed` feeds the master rng only at creation; later runs resume
    the persisted stream, so run(k1) then run(k2) equals run(k1+k2)."""
    workspace = cfg.workspace or os.environ.get(ENV_WORKSPACE)
    if not workspace:
        raise StudioError(f"no workspace configured (set {ENV_WORKSPACE})")
    os.makedirs(workspace, exist_ok=True)
    lock = _Lock(workspace)
    lock.acquire()
    try:
        if os.path.exists(os.path.join(workspace, _STATE_FILE)):
            kb, rng_state, seed = _load_state(workspace)
            rng = Splitmix64(rng_state)
        else:
            if os.path.exists(os.path.join(workspace, _EVENTS_FILE)):
                raise CorruptWorkspace("feed present without state.json")
            kb = KnowledgeBase(catalogue=rulesetdesign.seed_catalogue())
            rng = Splitmix64(derive_seed(seed, 23))
            save_workspace(kb, workspace, rng_state=rng.state, seed=seed)
        _recover(kb, workspace)
        envs = mechanics.builtin_environments()
        new_events = []
        for _ in range(steps):
            ev = _studio_iteration(kb, rng, cfg, envs, workspace)
            _append_event(workspace, ev)
            save_workspace(kb, workspace, rng_state=rng.state, seed=seed)
            new_events.append(ev)
        return kb, new_events
    finally:
        lock.release()


def replay_feed(workspace: str, cfg: StudioConfig | None = None,
                scratch: str | None = None) -> KnowledgeBase:
    """Rebuild the knowledge base by re-executing every feed event over a
    fresh kb, checking each regenerated event against the stored one.
    Returns the rebuilt kb; compare kb_digest against the live one."""
    cfg = cfg or StudioConfig()
    events = load_events(workspace)
    _, _, seed = _load_state(workspace)
    kb = KnowledgeBase(catalogue=rulesetdesign.seed_catalogue())
    rng = Splitmix64(derive_seed(seed, 23))
    envs = mechanics.builtin_environments()
    out_dir = scratch or tempfile.mkdtemp(prefix="forge-replay-")
    for stored in events:
        if rng.state != stored.payload["rng_before"]:
            raise CorruptWorkspace(
                f"step {stored.step}: rng diverged before execution")
        ev = _studio_iteration(kb, rng, cfg, envs, out_dir)
        # compare as canonical text: stored payloads round-tripped via JSON
        if canonical_json(_event_doc(ev)) != canonical_json(_event_doc(stored)):
            raise CorruptWorkspace(f"step {stored.step}: replay diverged")
    return kb


def status_summary(workspace: str) -> dict:
    """Cheap read-only snapshot for the CLI."""
    kb = load_workspace(workspace)
    events = load_events(workspace)
    stages = {p.id: sorted(p.stage) for p in kb.projects}
    return {
        "steps": kb.event_log_position,
        "catalogue_version": kb.catalogue.version,
        "patterns": len(kb.catalogue.patterns),
        "projects": len(kb.projects),
        "shelved": sum(p.shelved_since is not None for p in kb.projects),
        "exported": sum(p.exported_step is not None for p in kb.projects),
        "stages": stages,
        "recent": [f"{e.step}: {e.activity} {e.summary}" for e in events[-5:]],
        "digest": kb_digest(kb),
    }
