/** Game-definition loading: JSON schema checks, the rule text grammar,
 * reference resolution, and value-level validation.
 *
 * This mirrors the engine-side loader so any file it exports loads here
 * with the same acceptance boundary: structural problems throw ParseError
 * with a document path, value-level invariants come back as violations
 * from validateGame.
 */

import { sha256Hex } from "./digest";

export const CMP_OPS = ["EQ", "GTE", "LTE"] as const;
export type Cmp = (typeof CMP_OPS)[number];
export const BEHAVIORS = ["static", "chase", "random"] as const;
export type Behavior = (typeof BEHAVIORS)[number];
export const DEFAULT_TICK_CAP = 1000;

export class ParseError extends Error {
  constructor(public path: string, message: string) {
    super(`${path}: ${message}`);
    this.name = "ParseError";
  }
}

export interface VariableDef {
  name: string;
  onscreen: string; // display label; empty string means hidden
  startvalue: number;
}

export interface PieceDef {
  name: string;
  layer: number;
  sprite: string;
  animated: boolean;
  flips: boolean;
  solid: boolean;
  controlled: boolean;
  behavior: Behavior;
}

export type Trigger =
  | { kind: "overlap"; pieceA: string; pieceB: string }
  | { kind: "tick"; every: number }
  | { kind: "var"; name: string; cmp: Cmp; value: number }
  | { kind: "count"; piece: string; cmp: Cmp; value: number };

export type Command =
  | { kind: "destroy"; target: number | string } // number = $binding
  | { kind: "sfx"; name: string }
  | { kind: "score"; amount: number }
  | { kind: "set"; name: string; value: number }
  | { kind: "add"; name: string; delta: number }
  | { kind: "win" }
  | { kind: "lose" }
  | { kind: "spawn"; piece: string; atBinding: number }
  | { kind: "transform"; binding: number; piece: string };

export interface Guard {
  name: string;
  cmp: Cmp;
  value: number;
}

export interface Rule {
  trigger: Trigger;
  guards: Guard[];
  code: Command[];
}

export interface LevelDef {
  width: number;
  height: number;
  data: number[]; // row-major, 0 = empty, k = pieces[k-1]
}

export type Color = [number, number, number];

export interface GameDefinition {
  gamename: string;
  numplayers: number;
  floor: string;
  music: string;
  colorAccent: Color;
  colorBody: Color;
  variables: VariableDef[];
  pieces: PieceDef[];
  rules: Rule[];
  levels: LevelDef[];
  tickCap: number;
}

export function definitionDigest(text: string): string {
  return sha256Hex(text);
}

// ── rule text grammar ─────────────────────────────────────────────────

function textInt(token: string, path: string): number {
  if (!/^-?\d+$/.test(token)) {
    throw new ParseError(path, `expected integer, got ${JSON.stringify(token)}`);
  }
  return parseInt(token, 10);
}

function bindingIndex(token: string, path: string): number {
  const raw = token.slice(1);
  if (!/^-?\d+$/.test(raw)) {
    throw new ParseError(path, `bad binding reference ${JSON.stringify(token)}`);
  }
  return parseInt(raw, 10);
}

export function parseTrigger(text: string, path = "trigger"): Trigger {
  const tokens = text.split(" ");
  if (tokens.includes("")) {
    throw new ParseError(path, `malformed trigger text ${JSON.stringify(text)}`);
  }
  const head = tokens[0];
  if (head === "OVERLAP") {
    if (tokens.length !== 3) throw new ParseError(path, "OVERLAP takes two piece names");
    return { kind: "overlap", pieceA: tokens[1], pieceB: tokens[2] };
  }
  if (head === "TICK") {
    if (tokens.length !== 2) throw new ParseError(path, "TICK takes one integer");
    return { kind: "tick", every: textInt(tokens[1], path) };
  }
  if (head === "VAR" || head === "COUNT") {
    if (tokens.length !== 4 || !(CMP_OPS as readonly string[]).includes(tokens[2])) {
      throw new ParseError(path, `${head} takes <name> <EQ|GTE|LTE> <int>`);
    }
    const value = textInt(tokens[3], path);
    if (head === "VAR") return { kind: "var", name: tokens[1], cmp: tokens[2] as Cmp, value };
    return { kind: "count", piece: tokens[1], cmp: tokens[2] as Cmp, value };
  }
  throw new ParseError(path, `unknown trigger ${JSON.stringify(head)}`);
}

export function parseCommand(text: string, path = "command"): Command {
  const tokens = text.split(" ");
  if (tokens.includes("")) {
    throw new ParseError(path, `malformed command text ${JSON.stringify(text)}`);
  }
  const [head, ...rest] = tokens;
  switch (head) {
    case "DESTROY":
      if (rest.length !== 1) throw new ParseError(path, "DESTROY takes one target");
      if (rest[0].startsWith("$")) return { kind: "destroy", target: bindingIndex(rest[0], path) };
      return { kind: "destroy", target: rest[0] };
    case "SFX":
      if (rest.length !== 1) throw new ParseError(path, "SFX takes one name");
      return { kind: "sfx", name: rest[0] };
    case "SCORE":
      if (rest.length !== 1) throw new ParseError(path, "SCORE takes one integer");
      return { kind: "score", amount: textInt(rest[0], path) };
    case "SET":
      if (rest.length !== 2) throw new ParseError(path, "SET takes <var> <int>");
      return { kind: "set", name: rest[0], value: textInt(rest[1], path) };
    case "ADD":
      if (rest.length !== 2) throw new ParseError(path, "ADD takes <var> <int>");
      return { kind: "add", name: rest[0], delta: textInt(rest[1], path) };
    case "WIN":
      if (rest.length) throw new ParseError(path, "WIN takes no arguments");
      return { kind: "win" };
    case "LOSE":
      if (rest.length) throw new ParseError(path, "LOSE takes no arguments");
      return { kind: "lose" };
    case "SPAWN":
      if (rest.length !== 2 || !rest[1].startsWith("$")) {
        throw new ParseError(path, "SPAWN takes <piece> $<k>");
      }
      return { kind: "spawn", piece: rest[0], atBinding: bindingIndex(rest[1], path) };
    case "TRANSFORM":
      if (rest.length !== 2 || !rest[0].startsWith("$")) {
        throw new ParseError(path, "TRANSFORM takes $<k> <piece>");
      }
      return { kind: "transform", binding: bindingIndex(rest[0], path), piece: rest[1] };
    default:
      throw new ParseError(path, `unknown command ${JSON.stringify(head)}`);
  }
}

export function parseGuard(text: string, path = "guard"): Guard {
  const t = parseTrigger(text, path);
  if (t.kind !== "var") throw new ParseError(path, "guards use the VAR grammar");
  return { name: t.name, cmp: t.cmp, value: t.value };
}

// ── document field helpers ────────────────────────────────────────────

type Doc = Record<string, unknown>;

function isObject(v: unknown): v is Doc {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function rejectExtras(item: Doc, allowed: Set<string>, path: string): void {
  for (const key of Object.keys(item)) {
    if (!allowed.has(key)) throw new ParseError(path ? `${path}.${key}` : key, "unexpected field");
  }
}

const MISSING = Symbol("missing");

function needStr(obj: Doc, key: string, parent = "", dflt: string | typeof MISSING = MISSING): string {
  const path = parent ? `${parent}.${key}` : key;
  const raw = key in obj ? obj[key] : dflt;
  if (raw === MISSING) throw new ParseError(path, "missing field");
  if (typeof raw !== "string") throw new ParseError(path, "expected a string");
  return raw;
}

function coerceInt(raw: unknown, path: string): number {
  // numeric strings are accepted wherever integers are expected
  if (typeof raw === "boolean") throw new ParseError(path, "expected an integer");
  if (typeof raw === "number" && Number.isInteger(raw)) return raw;
  if (typeof raw === "string") {
    if (/^-?\d+$/.test(raw)) return parseInt(raw, 10);
    throw new ParseError(path, `expected an integer, got ${JSON.stringify(raw)}`);
  }
  throw new ParseError(path, "expected an integer");
}

function needInt(obj: Doc, key: string, parent = "", dflt: number | typeof MISSING = MISSING): number {
  const path = parent ? `${parent}.${key}` : key;
  const raw = key in obj ? obj[key] : dflt;
  if (raw === MISSING) throw new ParseError(path, "missing field");
  return coerceInt(raw, path);
}

function needBool(obj: Doc, key: string, parent: string, dflt: boolean | typeof MISSING = MISSING): boolean {
  const path = parent ? `${parent}.${key}` : key;
  const raw = key in obj ? obj[key] : dflt;
  if (raw === MISSING) throw new ParseError(path, "missing field");
  if (typeof raw !== "boolean") throw new ParseError(path, "expected a boolean");
  return raw;
}

function needList(obj: Doc, key: string): unknown[] {
  const raw = obj[key];
  if (!Array.isArray(raw)) throw new ParseError(key, "expected a list");
  return raw;
}

function parseColor(obj: Doc, key: string): Color {
  const raw = obj[key];
  if (!Array.isArray(raw) || raw.length !== 3) throw new ParseError(key, "expected [r, g, b]");
  const channels = raw.map((v, i) => {
    if (typeof v === "boolean" || typeof v !== "number") {
      throw new ParseError(`${key}[${i}]`, "expected a number");
    }
    return v;
  });
  return channels as Color;
}

// ── parsing ───────────────────────────────────────────────────────────

function parseVariable(item: unknown, path: string): VariableDef {
  if (!isObject(item)) throw new ParseError(path, "expected an object");
  rejectExtras(item, new Set(["name", "onscreen", "startvalue"]), path);
  return {
    name: needStr(item, "name", path),
    onscreen: needStr(item, "onscreen", path, ""),
    startvalue: needInt(item, "startvalue", path),
  };
}

function parsePiece(item: unknown, path: string): PieceDef {
  if (!isObject(item)) throw new ParseError(path, "expected an object");
  rejectExtras(item, new Set(["name", "layer", "sprite", "animated", "flips",
    "solid", "controlled", "behavior"]), path);
  const behavior = needStr(item, "behavior", path, "static");
  if (!(BEHAVIORS as readonly string[]).includes(behavior)) {
    throw new ParseError(`${path}.behavior`, `unknown behavior ${JSON.stringify(behavior)}`);
  }
  return {
    name: needStr(item, "name", path),
    layer: needInt(item, "layer", path),
    sprite: needStr(item, "sprite", path),
    animated: needBool(item, "animated", path),
    flips: needBool(item, "flips", path),
    solid: needBool(item, "solid", path, false),
    controlled: needBool(item, "controlled", path, false),
    behavior: behavior as Behavior,
  };
}

function parseRule(item: unknown, path: string): Rule {
  if (!isObject(item)) throw new ParseError(path, "expected an object");
  rejectExtras(item, new Set(["trigger", "guards", "code"]), path);
  const trigger = parseTrigger(needStr(item, "trigger", path), `${path}.trigger`);
  const rawGuards = "guards" in item ? item.guards : [];
  if (!Array.isArray(rawGuards)) throw new ParseError(`${path}.guards`, "expected a list");
  const guards = rawGuards.map((g, i) => {
    const gp = `${path}.guards[${i}]`;
    if (typeof g !== "string") throw new ParseError(gp, "expected a string");
    return parseGuard(g, gp);
  });
  const rawCode = item.code;
  if (!Array.isArray(rawCode)) throw new ParseError(`${path}.code`, "expected a list");
  const code = rawCode.map((c, i) => {
    const cp = `${path}.code[${i}]`;
    if (typeof c !== "string") throw new ParseError(cp, "expected a string");
    return parseCommand(c, cp);
  });
  return { trigger, guards, code };
}

function parseLevel(item: unknown, path: string): LevelDef {
  if (!isObject(item)) throw new ParseError(path, "expected an object");
  rejectExtras(item, new Set(["type", "width", "height", "data"]), path);
  if (needStr(item, "type", path) !== "raw") {
    throw new ParseError(`${path}.type`, 'only "raw" levels are supported');
  }
  const width = needInt(item, "width", path);
  const height = needInt(item, "height", path);
  if (width < 1 || height < 1) throw new ParseError(path, "width and height must be positive");
  const raw = item.data;
  if (!Array.isArray(raw)) throw new ParseError(`${path}.data`, "expected a list");
  const data = raw.map((v, i) => coerceInt(v, `${path}.data[${i}]`));
  return { width, height, data };
}

const KNOWN_KEYS = new Set(["gamename", "numplayers", "floor", "music",
  "color_accent", "color_body", "variables", "pieces", "rules", "levels",
  "tick_cap"]);

export function parseGame(text: string): GameDefinition {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new ParseError("$", `malformed JSON: ${(exc as Error).message}`);
  }
  if (!isObject(doc)) throw new ParseError("$", "top level must be a JSON object");
  rejectExtras(doc, KNOWN_KEYS, "");

  const g: GameDefinition = {
    gamename: needStr(doc, "gamename"),
    numplayers: needInt(doc, "numplayers"),
    floor: needStr(doc, "floor"),
    music: needStr(doc, "music"),
    colorAccent: parseColor(doc, "color_accent"),
    colorBody: parseColor(doc, "color_body"),
    variables: needList(doc, "variables").map((v, i) => parseVariable(v, `variables[${i}]`)),
    pieces: needList(doc, "pieces").map((p, i) => parsePiece(p, `pieces[${i}]`)),
    rules: needList(doc, "rules").map((r, i) => parseRule(r, `rules[${i}]`)),
    levels: needList(doc, "levels").map((l, i) => parseLevel(l, `levels[${i}]`)),
    tickCap: needInt(doc, "tick_cap", "", DEFAULT_TICK_CAP),
  };
  checkReferences(g);
  return g;
}

function checkReferences(g: GameDefinition): void {
  const pieces = new Set(g.pieces.map((p) => p.name));
  const variables = new Set(g.variables.map((v) => v.name));
  const needPiece = (name: string, path: string) => {
    if (!pieces.has(name)) throw new ParseError(path, `unknown name ${JSON.stringify(name)}`);
  };
  const needVar = (name: string, path: string) => {
    if (!variables.has(name)) throw new ParseError(path, `unknown name ${JSON.stringify(name)}`);
  };
  g.rules.forEach((rule, i) => {
    const path = `rules[${i}]`;
    const t = rule.trigger;
    if (t.kind === "overlap") {
      needPiece(t.pieceA, `${path}.trigger`);
      needPiece(t.pieceB, `${path}.trigger`);
    } else if (t.kind === "var") {
      needVar(t.name, `${path}.trigger`);
    } else if (t.kind === "count") {
      needPiece(t.piece, `${path}.trigger`);
    }
    rule.guards.forEach((guard, j) => needVar(guard.name, `${path}.guards[${j}]`));
    rule.code.forEach((cmd, j) => {
      const cpath = `${path}.code[${j}]`;
      if (cmd.kind === "destroy" && typeof cmd.target === "string") needPiece(cmd.target, cpath);
      else if (cmd.kind === "score") needVar("score", cpath);
      else if (cmd.kind === "set" || cmd.kind === "add") needVar(cmd.name, cpath);
      else if (cmd.kind === "spawn" || cmd.kind === "transform") needPiece(cmd.piece, cpath);
    });
  });
}

// ── validation ────────────────────────────────────────────────────────

export interface Violation {
  kind: string;
  path: string;
  message: string;
}

function bindingRefs(cmd: Command): number[] {
  if (cmd.kind === "destroy" && typeof cmd.target === "number") return [cmd.target];
  if (cmd.kind === "spawn") return [cmd.atBinding];
  if (cmd.kind === "transform") return [cmd.binding];
  return [];
}

/** Value-level invariants; an empty list means safe to simulate. */
export function validateGame(g: GameDefinition): Violation[] {
  const out: Violation[] = [];
  const add = (kind: string, path: string, message: string) => out.push({ kind, path, message });
  const pieces = new Set<string>();
  const variables = new Set<string>();

  if (g.numplayers < 1) add("OutOfRange", "numplayers", "must be positive");
  if (g.tickCap < 1) add("OutOfRange", "tick_cap", "must be positive");
  for (const [key, color] of [["color_accent", g.colorAccent], ["color_body", g.colorBody]] as const) {
    ["r", "g", "b"].forEach((ch, i) => {
      if (!(color[i] >= 0 && color[i] <= 1)) add("OutOfRange", `${key}.${ch}`, "channel outside [0, 1]");
    });
  }
  g.variables.forEach((v, i) => {
    if (!v.name) add("BadShape", `variables[${i}].name`, "empty name");
    if (variables.has(v.name)) {
      add("DuplicateName", `variables[${i}].name`, `duplicate variable ${JSON.stringify(v.name)}`);
    }
    variables.add(v.name);
  });
  g.pieces.forEach((p, i) => {
    if (!p.name) add("BadShape", `pieces[${i}].name`, "empty name");
    if (pieces.has(p.name)) {
      add("DuplicateName", `pieces[${i}].name`, `duplicate piece ${JSON.stringify(p.name)}`);
    }
    pieces.add(p.name);
    if (p.layer < 0) add("OutOfRange", `pieces[${i}].layer`, "layer must be >= 0");
  });

  g.rules.forEach((rule, i) => {
    const path = `rules[${i}]`;
    const t = rule.trigger;
    let bindings = 0;
    if (t.kind === "overlap") {
      bindings = 2;
      for (const name of [t.pieceA, t.pieceB]) {
        if (!pieces.has(name)) add("DanglingReference", `${path}.trigger`, `unknown piece ${JSON.stringify(name)}`);
      }
    } else if (t.kind === "tick") {
      if (t.every < 1) add("OutOfRange", `${path}.trigger`, "TICK interval must be positive");
    } else if (t.kind === "var") {
      if (!variables.has(t.name)) add("DanglingReference", `${path}.trigger`, `unknown variable ${JSON.stringify(t.name)}`);
    } else if (!pieces.has(t.piece)) {
      add("DanglingReference", `${path}.trigger`, `unknown piece ${JSON.stringify(t.piece)}`);
    }
    rule.guards.forEach((guard, j) => {
      if (!variables.has(guard.name)) {
        add("DanglingReference", `${path}.guards[${j}]`, `unknown variable ${JSON.stringify(guard.name)}`);
      }
    });
    if (!rule.code.length) add("EmptyCode", `${path}.code`, "rule body must not be empty");
    rule.code.forEach((cmd, j) => {
      const cpath = `${path}.code[${j}]`;
      for (const k of bindingRefs(cmd)) {
        if (!(k >= 1 && k <= bindings)) add("BadBinding", cpath, `$${k} has no binding under this trigger`);
      }
      if (cmd.kind === "destroy" && typeof cmd.target === "string" && !pieces.has(cmd.target)) {
        add("DanglingReference", cpath, `unknown piece ${JSON.stringify(cmd.target)}`);
      } else if (cmd.kind === "score" && !variables.has("score")) {
        add("MissingScoreVariable", cpath, 'SCORE requires a declared variable named "score"');
      } else if ((cmd.kind === "set" || cmd.kind === "add") && !variables.has(cmd.name)) {
        add("DanglingReference", cpath, `unknown variable ${JSON.stringify(cmd.name)}`);
      } else if ((cmd.kind === "spawn" || cmd.kind === "transform") && !pieces.has(cmd.piece)) {
        add("DanglingReference", cpath, `unknown piece ${JSON.stringify(cmd.piece)}`);
      }
    });
  });

  g.levels.forEach((level, i) => {
    const path = `levels[${i}]`;
    if (level.width < 1 || level.height < 1) {
      add("OutOfRange", path, "width and height must be positive");
      return;
    }
    const expected = level.width * level.height;
    if (level.data.length !== expected) {
      add("BadShape", `${path}.data`, `expected ${expected} codes, got ${level.data.length}`);
    }
    level.data.forEach((code, j) => {
      if (!(code >= 0 && code <= g.pieces.length)) {
        add("DanglingCode", `${path}.data[${j}]`,
          `code ${code} has no piece (codes run 0..${g.pieces.length})`);
      }
    });
  });
  return out;
}
