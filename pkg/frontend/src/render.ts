/** Canvas drawing and presentation helpers.
 *
 * Sprites render as colored glyph tiles keyed by sprite name and themed by
 * the definition's color_body / color_accent — no external assets. The
 * pure helpers (glyphs, colors, tones, labels) are kept DOM-free.
 */

import type { EventDoc, GameState } from "./engine";
import type { GameDefinition, PieceDef } from "./gdl";

const clamp = (v: number) => Math.max(0, Math.min(1, v));

export function cssColor(rgb: [number, number, number], alpha = 1): string {
  const [r, g, b] = rgb.map((c) => Math.round(clamp(c) * 255));
  return `rgba(${r},${g},${b},${alpha})`;
}

export function glyphFor(piece: PieceDef): string {
  const ch = [...piece.sprite][0] ?? "?";
  return ch.toUpperCase();
}

function nameHash(name: string): number {
  let h = 2166136261;
  for (let i = 0; i < name.length; i++) {
    h = (h ^ name.charCodeAt(i)) >>> 0;
    h = (h * 16777619) >>> 0;
  }
  return h;
}

/** Controlled pieces wear the accent color; the rest get a stable hue. */
export function tileColor(piece: PieceDef, g: GameDefinition): string {
  if (piece.controlled) return cssColor(g.colorAccent);
  const hue = nameHash(piece.name) % 360;
  return `hsl(${hue} 55% 55%)`;
}

/** A distinct tone per SFX name: pentatonic-ish steps above 330 Hz. */
export function toneFor(sfx: string): number {
  return 330 + (nameHash(sfx) % 8) * 55;
}

export interface VarLabel {
  label: string;
  value: number;
}

/** Variables with nonempty onscreen labels, in declaration order. */
export function variableLabels(g: GameDefinition, state: GameState): VarLabel[] {
  return g.variables
    .filter((v) => v.onscreen !== "")
    .map((v) => ({ label: v.onscreen, value: state.variables.get(v.name)! }));
}

export function statusLine(state: GameState): string {
  if (state.status === "Running") return `tick ${state.tick}`;
  return `${state.status} at tick ${state.tick}`;
}

export function sfxNames(events: EventDoc[]): string[] {
  return events.filter((e) => e.kind === "Sfx").map((e) => e.sfx as string);
}

export const CELL_PX = 48;

export function drawState(ctx: CanvasRenderingContext2D, g: GameDefinition,
  state: GameState): void {
  const { width, height } = state.comp;
  const body = cssColor(g.colorBody);
  ctx.canvas.width = width * CELL_PX;
  ctx.canvas.height = height * CELL_PX;
  ctx.fillStyle = body;
  ctx.fillRect(0, 0, width * CELL_PX, height * CELL_PX);

  ctx.strokeStyle = cssColor(g.colorAccent, 0.25);
  ctx.lineWidth = 1;
  for (let x = 0; x <= width; x++) {
    ctx.beginPath();
    ctx.moveTo(x * CELL_PX + 0.5, 0);
    ctx.lineTo(x * CELL_PX + 0.5, height * CELL_PX);
    ctx.stroke();
  }
  for (let y = 0; y <= height; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * CELL_PX + 0.5);
    ctx.lineTo(width * CELL_PX, y * CELL_PX + 0.5);
    ctx.stroke();
  }

  // stack co-located tiles by layer, ids breaking ties, like the engine draws
  const tiles = [...state.instances.entries()].map(([iid, [pi, x, y]]) => ({
    iid, piece: g.pieces[pi], x, y,
  }));
  tiles.sort((a, b) => a.piece.layer - b.piece.layer || a.iid - b.iid);

  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.font = `bold ${Math.floor(CELL_PX * 0.55)}px monospace`;
  for (const tile of tiles) {
    const px = tile.x * CELL_PX;
    const py = tile.y * CELL_PX;
    ctx.fillStyle = tileColor(tile.piece, g);
    ctx.fillRect(px + 3, py + 3, CELL_PX - 6, CELL_PX - 6);
    ctx.fillStyle = body;
    ctx.fillText(glyphFor(tile.piece), px + CELL_PX / 2, py + CELL_PX / 2 + 1);
  }
}
