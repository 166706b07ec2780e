/** Episode trace files: JSON Lines with a header, one event per line, and a
 * closing footer, byte-identical to the engine's writer so either side can
 * verify the other's recordings.
 */

import { canonicalJson, type Json } from "./canon";
import type { EventDoc } from "./engine";
import { definitionDigest } from "./gdl";

export class TraceFormatError extends Error {}

export interface TraceFile {
  header: { definition: string; level: number; seed: number };
  eventLines: string[]; // canonical JSON strings, as stored
  footer: { actions: string[]; final: string; ticks: number };
}

export function eventLine(ev: EventDoc): string {
  return canonicalJson(ev as Json);
}

export function formatTrace(definitionText: string, level: number, seed: number,
  actions: string[], eventLines: string[], final: string, ticks: number): string {
  const header = { definition: definitionDigest(definitionText), level, seed };
  const lines = [canonicalJson(header)];
  lines.push(...eventLines);
  lines.push(canonicalJson({ actions, final, ticks }));
  return lines.join("\n") + "\n";
}

export function parseTrace(text: string): TraceFile {
  const lines = text.split("\n").filter((line) => line);
  if (lines.length < 2) throw new TraceFormatError("trace needs a header and a footer");
  let header: Record<string, Json>;
  let footer: Record<string, Json>;
  try {
    header = JSON.parse(lines[0]);
    footer = JSON.parse(lines[lines.length - 1]);
  } catch (exc) {
    throw new TraceFormatError(`bad JSON: ${(exc as Error).message}`);
  }
  for (const key of ["definition", "level", "seed"]) {
    if (!(key in header)) throw new TraceFormatError(`header missing '${key}'`);
  }
  for (const key of ["actions", "final", "ticks"]) {
    if (!(key in footer)) throw new TraceFormatError(`footer missing '${key}'`);
  }
  return {
    header: header as TraceFile["header"],
    eventLines: lines.slice(1, -1),
    footer: footer as TraceFile["footer"],
  };
}
