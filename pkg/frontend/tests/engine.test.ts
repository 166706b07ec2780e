import { describe, expect, it } from "vitest";

import { initState, stateHash, step, SteppingTerminalState } from "../src/engine";
import { parseGame } from "../src/gdl";
import { readGame } from "./helpers";

const G1 = parseGame(readGame("g1_corridor_run.json"));
const G4 = parseGame(readGame("g4_alchemy_yard.json"));
const G5 = parseGame(readGame("g5_timer_gates.json"));

// reference digests recorded from the engine on the same inputs
describe("initState", () => {
  it("hashes the initial board like the engine", () => {
    expect(stateHash(initState(G1, 0, 5))).toBe("ffe8adcf7b25cae8");
  });

  it("throws on a bad level index", () => {
    expect(() => initState(G1, 2, 0)).toThrowError(/level 2 of 2/);
  });
});

describe("step", () => {
  it("moves and hashes like the engine", () => {
    const s0 = initState(G1, 0, 5);
    const [s1, events] = step(s0, "Right");
    expect(stateHash(s1)).toBe("45f8c718e7d0eea9");
    expect(events).toEqual([
      { tick: 0, kind: "Moved", id: 0, piece: "avatar", from: [0, 0], to: [1, 0] },
    ]);
    expect(s1.tick).toBe(1);
  });

  it("bump contact fires the overlap rule on a blocked move", () => {
    const s0 = initState(G1, 0, 5);
    const [s1] = step(s0, "Right"); // (0,0) -> (1,0)
    const [, events] = step(s1, "Right"); // wall at (2,0)
    expect(events.map((e) => e.kind)).toEqual(["Blocked", "RuleFired", "Sfx"]);
    expect(events[0]).toMatchObject({ id: 0, from: [1, 0], dir: "Right" });
    expect(events[2]).toMatchObject({ sfx: "bump" });
  });

  it("replays random movers bit-for-bit (rng word advances identically)", () => {
    let s = initState(G4, 0, 9);
    for (const a of ["Down", "Right", "Right"] as const) [s] = step(s, a);
    expect(s.rng).toBe(0x538454127b09649cn);
    expect(stateHash(s)).toBe("1d43d6e750817e99");
  });

  it("hits the tick cap with a Timeout status event", () => {
    let s = initState(G5, 0, 3);
    let last: ReturnType<typeof step>[1] = [];
    while (s.status === "Running") [s, last] = step(s, "Wait");
    expect(s.status).toBe("Timeout");
    expect(s.tick).toBe(40);
    expect(last[last.length - 1]).toEqual({ tick: 39, kind: "StatusChanged", status: "Timeout" });
    expect(() => step(s, "Wait")).toThrowError(SteppingTerminalState);
  });

  it("guard-latched TICK rules fire once", () => {
    // gate destruction is guarded by open == 0 and sets open = 1, so the
    // TICK 5 rule fires exactly once over 40 ticks
    let s = initState(G5, 0, 3);
    let fired = 0;
    while (s.status === "Running") {
      const [next, events] = step(s, "Wait");
      fired += events.filter((e) => e.kind === "RuleFired" && e.rule === 0).length;
      s = next;
    }
    expect(fired).toBe(1);
  });

  it("VAR triggers are edge-triggered, not level-triggered", () => {
    const g = parseGame(JSON.stringify({
      gamename: "t", numplayers: 1, floor: "f", music: "m",
      color_accent: [0, 0, 0], color_body: [1, 1, 1],
      variables: [{ name: "score", onscreen: "", startvalue: 0 }],
      pieces: [
        { name: "avatar", layer: 1, sprite: "a", animated: false, flips: false, controlled: true },
        { name: "gem", layer: 1, sprite: "g", animated: false, flips: false },
      ],
      rules: [
        { trigger: "OVERLAP avatar gem", code: ["DESTROY $2", "SCORE 1"] },
        { trigger: "VAR score GTE 1", code: ["SFX ding"] },
      ],
      levels: [{ type: "raw", width: 3, height: 1, data: [1, 2, 0] }],
    }));
    let s = initState(g, 0, 0);
    let events;
    [s, events] = step(s, "Right"); // collect: score 0 -> 1, edge fires
    expect(events.filter((e) => e.kind === "Sfx")).toHaveLength(1);
    [s, events] = step(s, "Right"); // score stays 1: no new edge
    expect(events.filter((e) => e.kind === "Sfx")).toHaveLength(0);
  });
});
