import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { stateHash } from "../src/engine";
import {
  EmptySession, exportTrace, inputStep, loadSession, replayStep,
} from "../src/session";
import { parseTrace } from "../src/trace";
import { CONFORMANCE, readGame, readTrace } from "./helpers";

const G1 = readGame("g1_corridor_run.json");

// the scripted "human at the keyboard" session: ten arrow keys
const TEN_KEYS = [
  "ArrowRight", "ArrowDown", "ArrowDown", "ArrowRight", "ArrowUp",
  "ArrowLeft", "ArrowDown", "ArrowRight", "ArrowUp", "ArrowDown",
];

describe("play sessions", () => {
  it("exports a ten-key session trace for the engine-side verifier", () => {
    const session = loadSession(G1, { level: 0, seed: 5 });
    for (const key of TEN_KEYS) inputStep(session, key);
    expect(session.actions).toHaveLength(10);
    expect(session.state.status).toBe("Running");
    // final digest recorded from the engine on the same action list
    expect(stateHash(session.state)).toBe("45937557980bcb26");

    const text = exportTrace(session);
    const tf = parseTrace(text);
    expect(tf.header).toEqual({ definition: session.digest, level: 0, seed: 5 });
    expect(tf.footer.actions).toEqual([
      "Right", "Down", "Down", "Right", "Up",
      "Left", "Down", "Right", "Up", "Down",
    ]);
    expect(tf.footer.ticks).toBe(10);

    mkdirSync(join(CONFORMANCE, "session"), { recursive: true });
    writeFileSync(join(CONFORMANCE, "session", "ts_session.jsonl"), text);
  });

  it("ignores keys that do not map to actions", () => {
    const session = loadSession(G1, { seed: 5 });
    inputStep(session, "x");
    inputStep(session, "Enter");
    expect(session.actions).toHaveLength(0);
  });

  it("space maps to Wait", () => {
    const session = loadSession(G1, { seed: 5 });
    inputStep(session, " ");
    expect(session.actions).toEqual(["Wait"]);
  });

  it("freezes at a terminal state", () => {
    const session = loadSession(G1, { level: 0, seed: 1 });
    // shortest winning line for this level, from the exhaustive solver
    for (const a of ["Down", "Down", "Down", "Right", "Right", "Right", "Up", "Right"]) {
      inputStep(session, { Up: "ArrowUp", Down: "ArrowDown", Left: "ArrowLeft", Right: "ArrowRight" }[a]!);
    }
    expect(session.state.status).toBe("Won");
    expect(stateHash(session.state)).toBe("b01035c89a52004e");
    const before = session.actions.length;
    inputStep(session, "ArrowUp"); // no state change after Won
    expect(session.actions).toHaveLength(before);
    expect(session.state.status).toBe("Won");
  });

  it("refuses to export an empty session", () => {
    const session = loadSession(G1, { seed: 5 });
    expect(() => exportTrace(session)).toThrowError(EmptySession);
  });
});

describe("replay sessions", () => {
  it("replays an exported session to the same end state", () => {
    const play = loadSession(G1, { level: 0, seed: 5 });
    for (const key of TEN_KEYS) inputStep(play, key);
    const text = exportTrace(play);

    const replay = loadSession(G1, { traceText: text });
    expect(replay.mode).toBe("replay");
    expect(replay.level).toBe(0);
    expect(replay.seed).toBe(5);
    while (replayStep(replay)) { /* run to the end */ }
    expect(stateHash(replay.state)).toBe(stateHash(play.state));
    expect(replay.state.tick).toBe(play.state.tick);
    // a fully replayed session re-exports the identical bytes
    expect(exportTrace(replay)).toBe(text);
  });

  it("keyboard input is ignored in replay mode", () => {
    const replay = loadSession(G1, { traceText: readTrace("g1_corridor_run_t1.jsonl") });
    inputStep(replay, "ArrowRight");
    expect(replay.actions).toHaveLength(0);
  });

  it("refuses a trace whose digest names another game", () => {
    const other = readTrace("g2_gem_collector_t1.jsonl");
    expect(() => loadSession(G1, { traceText: other }))
      .toThrowError(/definition digest mismatch/);
  });

  it("replays a corpus golden trace in full", () => {
    const replay = loadSession(G1, { traceText: readTrace("g1_corridor_run_t5.jsonl") });
    let steps = 0;
    while (replayStep(replay)) steps += 1;
    expect(steps).toBeGreaterThan(0);
    expect(stateHash(replay.state)).toBe(replay.replay!.trace.footer.final);
  });
});
