import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

/** Repo-level conformance corpus shared with the engine's test suite. */
export const CONFORMANCE = fileURLToPath(new URL("../../conformance", import.meta.url));

export function readGame(name: string): string {
  return readFileSync(join(CONFORMANCE, "games", name), "utf-8");
}

export function readTrace(name: string): string {
  return readFileSync(join(CONFORMANCE, "traces", name), "utf-8");
}

export function listTraces(): string[] {
  return readdirSync(join(CONFORMANCE, "traces")).filter((f) => f.endsWith(".jsonl")).sort();
}

export function listGames(): string[] {
  return readdirSync(join(CONFORMANCE, "games")).filter((f) => f.endsWith(".json")).sort();
}
