/** Deterministic turn simulation, reimplemented to match the engine exactly.
 *
 * A step runs four phases in fixed order: controlled movement, behaviors
 * (static / chase / random), rules in definition order, then the tick.
 * Blocked move attempts record transient bump contacts that OVERLAP rules
 * match during phase 3 of the same step in addition to co-located pairs;
 * VAR and COUNT triggers are edge-triggered; WIN/LOSE halt the rule phase;
 * every event carries the pre-increment tick. Random-behavior draws come
 * from the state's own splitmix64 word, so a (definition, level, seed,
 * actions) tuple replays to the same final state here and there.
 *
 * Iteration mirrors the reference's id ordering: instance Maps only ever
 * grow by next-id inserts, and in-place updates keep insertion order, so
 * plain Map iteration is ascending-id order.
 */

import { canonicalJson, cmpCodePoints, type Json } from "./canon";
import { sha256Hex } from "./digest";
import {
  type Cmp, type Command, type GameDefinition, type Rule, type Trigger,
  validateGame,
} from "./gdl";
import { MASK64, splitmix64 } from "./rng";

export const ACTIONS = ["Up", "Down", "Left", "Right", "Wait"] as const;
export type Action = (typeof ACTIONS)[number];
export type Status = "Running" | "Won" | "Lost" | "Timeout";

const DIR_DELTAS: Record<Action, [number, number]> = {
  Up: [0, -1], Down: [0, 1], Left: [-1, 0], Right: [1, 0], Wait: [0, 0],
};

export class EngineError extends Error {}
export class LevelIndexOutOfRange extends EngineError {}
export class SteppingTerminalState extends EngineError {}
export class InvalidDefinition extends EngineError {}

/** Merged event document: {tick, kind, ...payload}, one trace line each. */
export type EventDoc = { tick: number; kind: string } & Record<string, Json>;

/** Instance record: [pieceIndex, x, y]. */
export type Instance = [number, number, number];

const STATIC = 0, CHASE = 1, RANDOM = 2;
const BEHAVIOR_CODE = { static: STATIC, chase: CHASE, random: RANDOM } as const;

interface CompiledRule {
  trigger: Trigger;
  guards: [string, Cmp, number][];
  code: Command[];
  edge: boolean;
  overlapA: number; // piece indices, -1 when not an overlap rule
  overlapB: number;
  countPiece: number;
}

export class CompiledLevel {
  readonly width: number;
  readonly height: number;
  readonly pieceNames: string[];
  readonly solid: boolean[];
  readonly controlled: boolean[];
  readonly behavior: number[];
  readonly rules: CompiledRule[];
  readonly tickCap: number;
  readonly startInstances: [number, Instance][];

  constructor(readonly game: GameDefinition, readonly levelIndex: number) {
    const level = game.levels[levelIndex];
    this.width = level.width;
    this.height = level.height;
    this.pieceNames = game.pieces.map((p) => p.name);
    this.solid = game.pieces.map((p) => p.solid);
    this.controlled = game.pieces.map((p) => p.controlled);
    this.behavior = game.pieces.map((p) => BEHAVIOR_CODE[p.behavior]);
    const index = new Map(this.pieceNames.map((n, i) => [n, i]));
    this.rules = game.rules.map((r) => compileRule(r, index));
    this.tickCap = game.tickCap;
    this.startInstances = [];
    let nextId = 0;
    level.data.forEach((code, cell) => {
      if (code) {
        this.startInstances.push([nextId++, [
          code - 1, cell % level.width, Math.floor(cell / level.width)]]);
      }
    });
  }
}

function compileRule(rule: Rule, index: Map<string, number>): CompiledRule {
  const t = rule.trigger;
  return {
    trigger: t,
    guards: rule.guards.map((g) => [g.name, g.cmp, g.value]),
    code: rule.code,
    edge: t.kind === "var" || t.kind === "count",
    overlapA: t.kind === "overlap" ? index.get(t.pieceA)! : -1,
    overlapB: t.kind === "overlap" ? index.get(t.pieceB)! : -1,
    countPiece: t.kind === "count" ? index.get(t.piece)! : -1,
  };
}

export class GameState {
  constructor(
    readonly comp: CompiledLevel,
    readonly instances: Map<number, Instance>,
    readonly variables: Map<string, number>,
    readonly tick: number,
    readonly status: Status,
    readonly rng: bigint,
    readonly firedEdges: Set<number>,
    readonly nextId: number,
  ) {}

  pieceName(instanceId: number): string {
    return this.comp.pieceNames[this.instances.get(instanceId)![0]];
  }
}

export function initState(g: GameDefinition, levelIndex: number, seed: bigint | number): GameState {
  const violations = validateGame(g);
  if (violations.length) {
    throw new InvalidDefinition(
      `definition has ${violations.length} violation(s): `
      + violations.slice(0, 3).map((v) => `${v.path}: ${v.message}`).join("; "));
  }
  if (!(levelIndex >= 0 && levelIndex < g.levels.length)) {
    throw new LevelIndexOutOfRange(`level ${levelIndex} of ${g.levels.length}`);
  }
  const comp = new CompiledLevel(g, levelIndex);
  const variables = new Map(g.variables.map((v) => [v.name, v.startvalue]));
  const instances = new Map(comp.startInstances.map(([id, inst]) => [id, [...inst] as Instance]));
  return new GameState(comp, instances, variables, 0, "Running",
    BigInt(seed) & MASK64, new Set(), instances.size);
}

function cmpOk(left: number, cmp: Cmp, right: number): boolean {
  if (cmp === "EQ") return left === right;
  if (cmp === "GTE") return left >= right;
  return left <= right;
}

export function step(s: GameState, action: Action | string): [GameState, EventDoc[]] {
  if (s.status !== "Running") throw new SteppingTerminalState(s.status);
  if (!(action in DIR_DELTAS)) throw new EngineError(`unknown action ${JSON.stringify(action)}`);

  const comp = s.comp;
  const { width, height, solid, controlled, behavior } = comp;
  // instance records are replaced wholesale on every write, never mutated,
  // so sharing them across states is safe
  const inst = new Map(s.instances);
  const variables = new Map(s.variables);
  const fired = new Set(s.firedEdges);
  let rng = s.rng;
  let nextId = s.nextId;
  const tick = s.tick; // every event of this step carries the pre-increment tick
  const events: EventDoc[] = [];
  const contacts: [number, number][] = [];

  const cellOf = (x: number, y: number) => y * width + x;
  const solidCount = new Map<number, number>();
  for (const [pi, x, y] of inst.values()) {
    if (solid[pi]) {
      const cell = cellOf(x, y);
      solidCount.set(cell, (solidCount.get(cell) ?? 0) + 1);
    }
  }

  const blockersAt = (cell: number): number[] => {
    const out: number[] = [];
    for (const [iid, [pi, x, y]] of inst) {
      if (solid[pi] && cellOf(x, y) === cell) out.push(iid);
    }
    return out;
  };

  const tryMove = (iid: number, dx: number, dy: number, dirName: string): boolean => {
    const [pi, x, y] = inst.get(iid)!;
    const nx = x + dx, ny = y + dy;
    if (!(nx >= 0 && nx < width && ny >= 0 && ny < height)) {
      events.push({ tick, kind: "Blocked", id: iid, piece: comp.pieceNames[pi],
        from: [x, y], dir: dirName });
      return false;
    }
    if (solidCount.get(cellOf(nx, ny))) {
      for (const blocker of blockersAt(cellOf(nx, ny))) contacts.push([iid, blocker]);
      events.push({ tick, kind: "Blocked", id: iid, piece: comp.pieceNames[pi],
        from: [x, y], dir: dirName });
      return false;
    }
    inst.set(iid, [pi, nx, ny]);
    if (solid[pi]) {
      solidCount.set(cellOf(x, y), solidCount.get(cellOf(x, y))! - 1);
      solidCount.set(cellOf(nx, ny), (solidCount.get(cellOf(nx, ny)) ?? 0) + 1);
    }
    events.push({ tick, kind: "Moved", id: iid, piece: comp.pieceNames[pi],
      from: [x, y], to: [nx, ny] });
    return true;
  };

  // ── phase 1: controlled movement ──
  if (action !== "Wait") {
    const [dx, dy] = DIR_DELTAS[action as Action];
    for (const iid of [...inst.keys()]) {
      if (controlled[inst.get(iid)![0]]) tryMove(iid, dx, dy, action);
    }
  }

  // ── phase 2: behaviors ──
  for (const iid of [...inst.keys()]) {
    const pi = inst.get(iid)![0];
    if (controlled[pi]) continue;
    const b = behavior[pi];
    if (b === STATIC) continue;
    if (b === RANDOM) {
      let draw: bigint;
      [rng, draw] = splitmix64(rng);
      const name = ACTIONS[Number(draw % 4n)];
      const [ddx, ddy] = DIR_DELTAS[name];
      tryMove(iid, ddx, ddy, name);
      continue;
    }
    // chase: one step toward the nearest controlled instance, preferring
    // the larger-delta axis (horizontal on tie), falling back to the other
    // axis when blocked and it still reduces distance
    const [, x, y] = inst.get(iid)!;
    let target: [number, number] | null = null;
    let best: number | null = null;
    for (const [cpi, cx, cy] of inst.values()) {
      if (controlled[cpi]) {
        const dist = Math.abs(cx - x) + Math.abs(cy - y);
        if (best === null || dist < best) {
          best = dist;
          target = [cx, cy];
        }
      }
    }
    if (target === null) continue;
    const dx = target[0] - x, dy = target[1] - y;
    if (dx === 0 && dy === 0) continue;
    const horizontal = dx !== 0 ? (dx > 0 ? "Right" : "Left") : null;
    const vertical = dy !== 0 ? (dy > 0 ? "Down" : "Up") : null;
    const order = Math.abs(dx) >= Math.abs(dy) ? [horizontal, vertical] : [vertical, horizontal];
    for (const name of order) {
      if (name === null) continue;
      const [ddx, ddy] = DIR_DELTAS[name as Action];
      if (tryMove(iid, ddx, ddy, name)) break;
    }
  }

  // ── phase 3: rules ──
  let status: Status = "Running";

  const guardsOk = (rule: CompiledRule): boolean =>
    rule.guards.every(([v, c, val]) => cmpOk(variables.get(v)!, c, val));

  const destroy = (iid: number): void => {
    const [pi, x, y] = inst.get(iid)!;
    inst.delete(iid);
    if (solid[pi]) solidCount.set(cellOf(x, y), solidCount.get(cellOf(x, y))! - 1);
    events.push({ tick, kind: "Destroyed", id: iid, piece: comp.pieceNames[pi],
      cell: [x, y] });
  };

  const runCode = (ruleIndex: number, rule: CompiledRule, bindings: number[]): boolean => {
    events.push({ tick, kind: "RuleFired", rule: ruleIndex });
    for (const cmd of rule.code) {
      switch (cmd.kind) {
        case "destroy": {
          if (typeof cmd.target === "number") {
            const iid = bindings[cmd.target - 1];
            if (inst.has(iid)) destroy(iid);
          } else {
            const pieceIndex = comp.pieceNames.indexOf(cmd.target);
            for (const iid of [...inst.keys()]) {
              if (inst.get(iid)![0] === pieceIndex) destroy(iid);
            }
          }
          break;
        }
        case "sfx":
          events.push({ tick, kind: "Sfx", sfx: cmd.name });
          break;
        case "score":
        case "add": {
          const varName = cmd.kind === "score" ? "score" : cmd.name;
          const delta = cmd.kind === "score" ? cmd.amount : cmd.delta;
          if (delta) {
            const old = variables.get(varName)!;
            variables.set(varName, old + delta);
            events.push({ tick, kind: "VarChanged", var: varName, old, new: old + delta });
          }
          break;
        }
        case "set": {
          const old = variables.get(cmd.name)!;
          if (old !== cmd.value) {
            variables.set(cmd.name, cmd.value);
            events.push({ tick, kind: "VarChanged", var: cmd.name, old, new: cmd.value });
          }
          break;
        }
        case "win":
        case "lose":
          status = cmd.kind === "win" ? "Won" : "Lost";
          events.push({ tick, kind: "StatusChanged", status });
          return false;
        case "spawn": {
          const anchor = bindings[cmd.atBinding - 1];
          if (inst.has(anchor)) {
            const [, ax, ay] = inst.get(anchor)!;
            const pieceIndex = comp.pieceNames.indexOf(cmd.piece);
            inst.set(nextId, [pieceIndex, ax, ay]);
            if (solid[pieceIndex]) {
              solidCount.set(cellOf(ax, ay), (solidCount.get(cellOf(ax, ay)) ?? 0) + 1);
            }
            events.push({ tick, kind: "Spawned", id: nextId,
              piece: comp.pieceNames[pieceIndex], cell: [ax, ay] });
            nextId += 1;
          }
          break;
        }
        case "transform": {
          const iid = bindings[cmd.binding - 1];
          if (inst.has(iid)) {
            const [oldPi, x, y] = inst.get(iid)!;
            const newPi = comp.pieceNames.indexOf(cmd.piece);
            if (oldPi !== newPi) {
              inst.set(iid, [newPi, x, y]);
              if (solid[oldPi]) solidCount.set(cellOf(x, y), solidCount.get(cellOf(x, y))! - 1);
              if (solid[newPi]) solidCount.set(cellOf(x, y), (solidCount.get(cellOf(x, y)) ?? 0) + 1);
              events.push({ tick, kind: "Transformed", id: iid,
                from: comp.pieceNames[oldPi], to: comp.pieceNames[newPi], cell: [x, y] });
            }
          }
          break;
        }
      }
    }
    return true;
  };

  comp.rules.forEach((rule, ruleIndex) => {
    if (status !== "Running") return;
    const t = rule.trigger;
    if (t.kind === "overlap") {
      const pa = rule.overlapA, pb = rule.overlapB;
      // snapshot the pair list; firings re-validate each pair
      const aMap = new Map<number, number[]>();
      const bMap = pa === pb ? aMap : new Map<number, number[]>();
      for (const [iid, [pi, x, y]] of inst) {
        if (pi === pa) {
          const cell = cellOf(x, y);
          const ids = aMap.get(cell);
          if (ids) ids.push(iid); else aMap.set(cell, [iid]);
        } else if (pi === pb) {
          const cell = cellOf(x, y);
          const ids = bMap.get(cell);
          if (ids) ids.push(iid); else bMap.set(cell, [iid]);
        }
      }
      const pairs: [number, number][] = [];
      const cells = [...aMap.keys()].sort((a, b) => a - b); // row-major order
      if (pa === pb) {
        for (const cell of cells) {
          const matching = aMap.get(cell)!;
          for (let n = 0; n < matching.length; n++) {
            for (let m = n + 1; m < matching.length; m++) {
              pairs.push([matching[n], matching[m]]);
            }
          }
        }
      } else {
        for (const cell of cells) {
          const bIds = bMap.get(cell);
          if (bIds) {
            for (const i of aMap.get(cell)!) {
              for (const j of bIds) pairs.push([i, j]);
            }
          }
        }
      }
      for (const [mover, blocker] of contacts) {
        if (!inst.has(mover) || !inst.has(blocker)) continue;
        const mp = inst.get(mover)![0], bp = inst.get(blocker)![0];
        if (mp === pa && bp === pb) pairs.push([mover, blocker]);
        else if (pa !== pb && mp === pb && bp === pa) pairs.push([blocker, mover]);
      }
      for (const [i, j] of pairs) {
        if (status !== "Running") break;
        if (!inst.has(i) || !inst.has(j)) continue;
        if (inst.get(i)![0] !== pa || inst.get(j)![0] !== pb) continue;
        if (guardsOk(rule)) runCode(ruleIndex, rule, [i, j]);
      }
    } else if (t.kind === "tick") {
      // fires when the tick count being completed is a multiple of `every`
      if ((tick + 1) % t.every === 0 && guardsOk(rule)) runCode(ruleIndex, rule, []);
    } else {
      let left: number;
      if (t.kind === "var") {
        left = variables.get(t.name)!;
      } else {
        left = 0;
        for (const [pi] of inst.values()) if (pi === rule.countPiece) left += 1;
      }
      const cond = cmpOk(left, t.cmp, t.value) && guardsOk(rule);
      if (cond) {
        if (!fired.has(ruleIndex)) {
          fired.add(ruleIndex);
          runCode(ruleIndex, rule, []);
        }
      } else {
        fired.delete(ruleIndex);
      }
    }
  });

  // ── phase 4: tick ──
  const newTick = tick + 1;
  if (status === "Running" && newTick >= comp.tickCap) {
    status = "Timeout";
    events.push({ tick: s.tick, kind: "StatusChanged", status });
  }

  return [new GameState(comp, inst, variables, newTick, status, rng, fired, nextId), events];
}

/** 16-hex-char digest of (occupancy multiset, variables, status); tick, rng,
 * fired edges, and instance ids are excluded so revisited configurations
 * hash equal. Byte-identical to the engine's hashing. */
export function stateHash(s: GameState): string {
  const names = s.comp.pieceNames;
  const cells = new Map<number, string[]>();
  const w = s.comp.width;
  for (const [pi, x, y] of s.instances.values()) {
    const key = y * w + x;
    const members = cells.get(key);
    if (members) members.push(names[pi]); else cells.set(key, [names[pi]]);
  }
  const occupancy = [...cells.keys()].sort((a, b) => a - b).map((key) => [
    key % w, Math.floor(key / w), cells.get(key)!.slice().sort(cmpCodePoints),
  ]);
  const variables = [...s.variables.keys()].sort(cmpCodePoints)
    .map((k) => [k, s.variables.get(k)!]);
  const blob = canonicalJson(["v1", s.status, occupancy, variables] as Json);
  return sha256Hex(blob).slice(0, 16);
}
