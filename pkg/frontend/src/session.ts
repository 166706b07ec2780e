/** Interactive sessions: keyboard play, trace replay, and trace export.
 *
 * A play session drives the simulation from key presses and records every
 * action and event so `exportTrace` can emit a verifier-ready file. A
 * replay session takes its inputs only from a loaded trace; loading one
 * against the wrong game file is refused up front by digest.
 */

import {
  type Action, type EventDoc, type GameState, initState, stateHash, step,
} from "./engine";
import { definitionDigest, parseGame, type GameDefinition } from "./gdl";
import { eventLine, formatTrace, parseTrace, type TraceFile } from "./trace";

export class SessionError extends Error {}
export class EmptySession extends SessionError {}
export class DigestMismatch extends SessionError {}

export const KEY_ACTIONS: Record<string, Action> = {
  ArrowUp: "Up",
  ArrowDown: "Down",
  ArrowLeft: "Left",
  ArrowRight: "Right",
  " ": "Wait",
  Space: "Wait",
  Spacebar: "Wait",
};

export type Mode = "play" | "replay";

export interface Session {
  definitionText: string;
  game: GameDefinition;
  digest: string;
  mode: Mode;
  level: number;
  seed: number; // JSON-interchange ints (< 2^53); traces store it verbatim
  state: GameState;
  actions: Action[];
  eventLines: string[];
  /** Fresh event docs from the most recent step, for rendering and SFX. */
  lastEvents: EventDoc[];
  replay?: { trace: TraceFile; cursor: number };
}

export interface LoadOptions {
  traceText?: string;
  level?: number;
  seed?: number;
}

export function loadSession(gameText: string, opts: LoadOptions = {}): Session {
  const game = parseGame(gameText); // ParseError carries the document path
  const digest = definitionDigest(gameText);
  if (opts.traceText !== undefined) {
    const trace = parseTrace(opts.traceText);
    if (trace.header.definition !== digest) {
      throw new DigestMismatch(
        `definition digest mismatch (trace ${trace.header.definition.slice(0, 12)}…, `
        + `file ${digest.slice(0, 12)}…)`);
    }
    return {
      definitionText: gameText, game, digest, mode: "replay",
      level: trace.header.level, seed: trace.header.seed,
      state: initState(game, trace.header.level, trace.header.seed),
      actions: [], eventLines: [], lastEvents: [],
      replay: { trace, cursor: 0 },
    };
  }
  const level = opts.level ?? 0;
  const seed = opts.seed ?? 0;
  return {
    definitionText: gameText, game, digest, mode: "play", level, seed,
    state: initState(game, level, seed),
    actions: [], eventLines: [], lastEvents: [],
  };
}

function applyAction(session: Session, action: Action): void {
  const [state, events] = step(session.state, action);
  session.state = state;
  session.actions.push(action);
  session.eventLines.push(...events.map(eventLine));
  session.lastEvents = events;
}

/** One key press in play mode. Unknown keys, replay mode, and terminal
 * states are all ignored (the board freezes once the game ends). */
export function inputStep(session: Session, key: string): Session {
  if (session.mode !== "play") return session;
  const action = KEY_ACTIONS[key];
  if (action === undefined) return session;
  if (session.state.status !== "Running") return session;
  applyAction(session, action);
  return session;
}

/** Advance a replay by one recorded action; false when exhausted. */
export function replayStep(session: Session): boolean {
  const replay = session.replay;
  if (session.mode !== "replay" || !replay) return false;
  if (replay.cursor >= replay.trace.footer.actions.length) return false;
  if (session.state.status !== "Running") return false;
  applyAction(session, replay.trace.footer.actions[replay.cursor] as Action);
  replay.cursor += 1;
  return true;
}

export function exportTrace(session: Session): string {
  if (!session.actions.length) throw new EmptySession("no actions taken");
  return formatTrace(session.definitionText, session.level, session.seed,
    session.actions, session.eventLines, stateHash(session.state),
    session.state.tick);
}
