"""Playtesting agents: random, novelty-bonus MCTS, and an exhaustive
breadth-first solver, plus the coverage metrics the creative activities use.

The MCTS agent follows plain UCT with one twist: a rollout's reward is the
terminal reward plus novelty_bonus for every state hash first seen in that
iteration, counted against a search-wide seen-set (which an episode carries
across moves). There is no goal-distance heuristic of any kind.

The exhaustive solver treats random-behavior pieces by branching over all
their joint direction outcomes rather than sampling, so its reachability
verdicts are sound; it is the ground-truth oracle for level winnability and
mechanic interestingness.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product

from . import engine, gdl
from .engine import ACTIONS
from .rng import Splitmix64, derive_seed


class AgentError(Exception):
    pass


class TerminalStateSearch(AgentError):
    pass


class EmptyInput(AgentError):
    pass


@dataclass
class Playtrace:
    actions: list
    events: list
    outcome: str
    ticks: int
    unique_states: int
    rules_fired: set


@dataclass
class MctsParams:
    # desk-scale defaults, all overridable per call site
    iterations: int = 5000
    exploration_c: float = 1.41
    rollout_depth: int = 40
    novelty_bonus: float = 0.01
    win_reward: float = 1.0
    loss_reward: float = 0.0
    timeout_reward: float = 0.0


@dataclass
class ReachabilityReport:
    reachable_hashes: set
    reachable_cells: dict          # controlled piece name -> set of (x, y)
    winnable: bool
    shortest_win: list | None
    truncated: bool
    states_explored: int = 0


@dataclass
class CoverageSummary:
    rules_fired_fraction: float
    terminating_fraction: float
    won_any: bool


# ── random agent ──────────────────────────────────────────────────────

def random_episode(g: gdl.GameDefinition, level: int, seed: int,
                   max_ticks: int | None = None,
                   record_events: bool = True) -> Playtrace:
    """Uniform random actions until terminal (or an optional tick budget)."""
    state = engine.init_state(g, level, derive_seed(seed, 0))
    chooser = Splitmix64(derive_seed(seed, 1))
    actions: list = []
    events: list = []
    rules_fired: set = set()
    hashes = {engine.content_key(state)}
    budget = g.tick_cap if max_ticks is None else min(max_ticks, g.tick_cap)
    while state.status == "Running" and state.tick < budget:
        action = chooser.choice(ACTIONS)
        state, evs = engine.step(state, action, collect=record_events)
        actions.append(action)
        if record_events:
            events.extend(evs)
            rules_fired.update(ev.payload["rule"] for ev in evs
                               if ev.kind == "RuleFired")
        hashes.add(engine.content_key(state))
    if not record_events:
        rules_fired = _scan_rules_fired(g, level, seed, actions)
    return Playtrace(actions, events, state.status, state.tick,
                     len(hashes), rules_fired)


def _scan_rules_fired(g, level, seed, actions) -> set:
    # event-free replay still needs rule coverage; rerun cheaply with events
    state = engine.init_state(g, level, derive_seed(seed, 0))
    fired: set = set()
    for action in actions:
        state, evs = engine.step(state, action)
        fired.update(ev.payload["rule"] for ev in evs if ev.kind == "RuleFired")
    return fired


# ── MCTS with novelty bonus ───────────────────────────────────────────

class _Node:
    __slots__ = ("state", "children", "visits", "value", "n_expanded")

    def __init__(self, state):
        self.state = state
        self.children = [None] * len(ACTIONS)
        self.visits = 0
        self.value = 0.0
        self.n_expanded = 0


def _terminal_reward(status: str, p: MctsParams) -> float:
    if status == "Won":
        return p.win_reward
    if status == "Lost":
        return p.loss_reward
    return p.timeout_reward


def mcts_search(s: engine.GameState, g: gdl.GameDefinition, p: MctsParams,
                seed: int, seen_hashes: set | None = None) -> str:
    """One UCT search from s; returns the root action with most visits
    (ties broken in fixed Up/Down/Left/Right/Wait order)."""
    if s.status != "Running":
        raise TerminalStateSearch(s.status)
    seen = seen_hashes if seen_hashes is not None else set()
    seen.add(engine.content_key(s))
    rng = Splitmix64(seed)
    root = _Node(s)
    c = p.exploration_c

    for _ in range(p.iterations):
        node = root
        path = [root]
        new_hashes = 0
        reward = 0.0
        # selection / expansion
        while True:
            if node.state.status != "Running":
                reward = _terminal_reward(node.state.status, p)
                break
            if node.n_expanded < len(ACTIONS):
                action = ACTIONS[node.n_expanded]
                node.n_expanded += 1
                child_state, _ = engine.step(node.state, action, collect=False)
                child = _Node(child_state)
                node.children[ACTIONS.index(action)] = child
                path.append(child)
                h = engine.content_key(child_state)
                if h not in seen:
                    seen.add(h)
                    new_hashes += 1
                # rollout
                roll = child_state
                if roll.status != "Running":
                    reward = _terminal_reward(roll.status, p)
                else:
                    for _ in range(p.rollout_depth):
                        roll, _ = engine.step(roll, ACTIONS[rng.randrange(5)],
                                              collect=False)
                        h = engine.content_key(roll)
                        if h not in seen:
                            seen.add(h)
                            new_hashes += 1
                        if roll.status != "Running":
                            reward = _terminal_reward(roll.status, p)
                            break
                break
            # fully expanded: descend by UCT, first-in-order wins ties
            log_n = math.log(node.visits)
            best, best_uct = None, -math.inf
            for child in node.children:
                uct = (child.value / child.visits
                       + c * math.sqrt(log_n / child.visits))
                if uct > best_uct:
                    best, best_uct = child, uct
            node = best
            path.append(node)

        reward += p.novelty_bonus * new_hashes
        for visited in path:
            visited.visits += 1
            visited.value += reward

    best_index, best_visits = 0, -1
    for i, child in enumerate(root.children):
        visits = child.visits if child is not None else 0
        if visits > best_visits:
            best_index, best_visits = i, visits
    return ACTIONS[best_index]


def mcts_episode(g: gdl.GameDefinition, level: int, p: MctsParams, seed: int,
                 max_moves: int | None = None,
                 record_events: bool = True) -> Playtrace:
    """Play one episode, re-searching each move; the novelty seen-set
    persists across the whole episode."""
    state = engine.init_state(g, level, derive_seed(seed, 0))
    seen: set = set()
    actions: list = []
    events: list = []
    rules_fired: set = set()
    hashes = {engine.content_key(state)}
    budget = g.tick_cap if max_moves is None else min(max_moves, g.tick_cap)
    move = 0
    while state.status == "Running" and move < budget:
        action = mcts_search(state, g, p, derive_seed(seed, 2, move), seen)
        state, evs = engine.step(state, action, collect=record_events)
        actions.append(action)
        if record_events:
            events.extend(evs)
            rules_fired.update(ev.payload["rule"] for ev in evs
                               if ev.kind == "RuleFired")
        hashes.add(engine.content_key(state))
        move += 1
    if not record_events:
        rules_fired = _scan_rules_fired(g, level, seed, actions)
    return Playtrace(actions, events, state.status, state.tick,
                     len(hashes), rules_fired)


# ── exhaustive solver ─────────────────────────────────────────────────

def _solver_key(state: engine.GameState, include_tick: bool):
    key = (tuple(sorted(state.instances.items())),
           tuple(sorted(state.variables.items())),
           state.status,
           state.fired_edges)
    return key + (state.tick,) if include_tick else key


def exhaustive_solve(g: gdl.GameDefinition, level: int,
                     state_cap: int = 200000) -> ReachabilityReport:
    """Breadth-first expansion of the full state graph.

    Random-behavior pieces branch over all 4^k joint outcomes, so the report
    is sound, not sampled. The tick joins the dedup key only when TICK rules
    exist; otherwise dynamics are tick-independent and each configuration is
    explored at its earliest arrival, which preserves reachability.
    """
    start = engine.init_state(g, level, 0)
    include_tick = start.comp.has_tick_rules
    controlled_names = {start.comp.piece_names[i]
                        for i in range(len(start.comp.piece_names))
                        if start.comp.controlled[i]}

    reachable_hashes = {engine.state_hash(start)}
    reachable_cells: dict = {name: set() for name in controlled_names}
    for pi, x, y in start.instances.values():
        name = start.comp.piece_names[pi]
        if name in controlled_names:
            reachable_cells[name].add((x, y))

    start_key = _solver_key(start, include_tick)
    parents: dict = {start_key: None}
    queue = deque([(start, start_key)])
    winnable = False
    shortest_win: list | None = None
    truncated = False

    while queue:
        state, key = queue.popleft()
        if state.status != "Running":
            continue
        k = engine.random_slots(state)
        outcome_sets = list(product(range(4), repeat=k)) if k else [()]
        for action in ACTIONS:
            for choices in outcome_sets:
                succ, events = engine.step(state, action,
                                           behavior_choices=choices)
                for ev in events:
                    if ev.kind == "Moved":
                        name, cell = ev.payload["piece"], ev.payload["to"]
                    elif ev.kind == "Spawned":
                        name, cell = ev.payload["piece"], ev.payload["cell"]
                    elif ev.kind == "Transformed":
                        name, cell = ev.payload["to"], ev.payload["cell"]
                    else:
                        continue
                    if name in controlled_names:
                        reachable_cells[name].add(tuple(cell))
                skey = _solver_key(succ, include_tick)
                if skey in parents:
                    continue
                parents[skey] = (key, action)
                reachable_hashes.add(engine.state_hash(succ))
                if succ.status == "Won" and not winnable:
                    winnable = True
                    shortest_win = _reconstruct(parents, skey)
                if len(parents) >= state_cap:
                    truncated = True
                    queue.clear()
                    break
                queue.append((succ, skey))
            if truncated:
                break

    return ReachabilityReport(reachable_hashes, reachable_cells, winnable,
                              shortest_win, truncated, len(parents))


def _reconstruct(parents: dict, key) -> list:
    actions = []
    while parents[key] is not None:
        key, action = parents[key]
        actions.append(action)
    actions.reverse()
    return actions


# ── coverage ──────────────────────────────────────────────────────────

def coverage_metrics(traces: list, g: gdl.GameDefinition) -> CoverageSummary:
    """Aggregate rule/termination coverage; Timeout counts as non-terminating,
    and an empty ruleset is vacuously fully fired."""
    if not traces:
        raise EmptyInput("no traces to aggregate")
    fired: set = set()
    terminated = 0
    won = False
    for t in traces:
        fired.update(t.rules_fired)
        if t.outcome in ("Won", "Lost"):
            terminated += 1
        if t.outcome == "Won":
            won = True
    n_rules = len(g.rules)
    fraction = 1.0 if n_rules == 0 else len(fired) / n_rules
    return CoverageSummary(fraction, terminated / len(traces), won)
