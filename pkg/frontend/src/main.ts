/** Browser wiring: file pickers / URL parameters in, canvas + tones out.
 *
 * ?game=<url> loads a definition over HTTP; ?trace=<url> additionally loads
 * a trace for replay. Without parameters, the file pickers do the same from
 * disk. Arrow keys move, space waits; replay advances on a timer.
 */

import { type EventDoc } from "./engine";
import { ParseError } from "./gdl";
import {
  DigestMismatch, EmptySession, exportTrace, inputStep, loadSession,
  replayStep, type Session,
} from "./session";
import {
  drawState, sfxNames, statusLine, toneFor, variableLabels,
} from "./render";
import { TraceFormatError } from "./trace";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

let session: Session | null = null;
let gameText: string | null = null;
let replayTimer: number | null = null;
let audio: AudioContext | null = null;

function beep(names: string[]): void {
  if (!names.length) return;
  audio = audio ?? new AudioContext();
  names.slice(0, 4).forEach((name, i) => {
    const osc = audio!.createOscillator();
    const gain = audio!.createGain();
    osc.frequency.value = toneFor(name);
    osc.type = "square";
    gain.gain.value = 0.04;
    osc.connect(gain).connect(audio!.destination);
    const t = audio!.currentTime + i * 0.09;
    osc.start(t);
    osc.stop(t + 0.08);
  });
}

function note(text: string, isError = false): void {
  const el = $("note");
  el.textContent = text;
  el.className = isError ? "error" : "";
}

function redraw(events: EventDoc[] = []): void {
  if (!session) return;
  const canvas = $<HTMLCanvasElement>("board");
  drawState(canvas.getContext("2d")!, session.game, session.state);
  $("status").textContent =
    `${session.game.gamename} — level ${session.level + 1}/${session.game.levels.length}`
    + ` — seed ${session.seed} — ${statusLine(session.state)}`
    + (session.mode === "replay" ? " — replay" : "");
  $("vars").textContent = variableLabels(session.game, session.state)
    .map((v) => `${v.label}: ${v.value}`).join("   ");
  $("theme").textContent =
    `floor: ${session.game.floor} — music: ${session.game.music}`;
  beep(sfxNames(events));
}

function stopReplay(): void {
  if (replayTimer !== null) {
    clearInterval(replayTimer);
    replayTimer = null;
  }
}

function startSession(traceText?: string): void {
  if (gameText === null) return;
  stopReplay();
  try {
    const levelSel = $<HTMLSelectElement>("level");
    session = loadSession(gameText, traceText !== undefined
      ? { traceText }
      : { level: Number(levelSel.value) || 0, seed: Number($<HTMLInputElement>("seed").value) || 0 });
  } catch (exc) {
    if (exc instanceof ParseError || exc instanceof DigestMismatch
      || exc instanceof TraceFormatError) {
      note(exc.message, true);
      return;
    }
    throw exc;
  }
  rebuildLevelSelector();
  note(session.mode === "replay" ? "replaying loaded trace" : "playing — arrows move, space waits");
  redraw();
  if (session.mode === "replay") {
    replayTimer = window.setInterval(() => {
      if (!session || !replayStep(session)) {
        stopReplay();
        return;
      }
      redraw(session.lastEvents);
    }, 180);
  }
}

function rebuildLevelSelector(): void {
  if (!session) return;
  const sel = $<HTMLSelectElement>("level");
  const current = session.level;
  sel.innerHTML = "";
  session.game.levels.forEach((_, i) => {
    const opt = document.createElement("option");
    opt.value = String(i);
    opt.textContent = `level ${i + 1}`;
    if (i === current) opt.selected = true;
    sel.appendChild(opt);
  });
}

async function fetchText(url: string): Promise<string> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`${url}: HTTP ${resp.status}`);
  return resp.text();
}

function wire(): void {
  $<HTMLInputElement>("game-file").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    gameText = await file.text();
    startSession();
  });
  $<HTMLInputElement>("trace-file").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file || gameText === null) {
      note("load a game file first", true);
      return;
    }
    startSession(await file.text());
  });
  $("restart").addEventListener("click", () => startSession());
  $("export").addEventListener("click", () => {
    if (!session) return;
    try {
      const text = exportTrace(session);
      const blob = new Blob([text], { type: "application/jsonl" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "session_trace.jsonl";
      a.click();
      URL.revokeObjectURL(a.href);
    } catch (exc) {
      if (exc instanceof EmptySession) {
        note("nothing to export: no actions taken yet", true);
        return;
      }
      throw exc;
    }
  });
  window.addEventListener("keydown", (ev) => {
    if (!session || session.mode !== "play") return;
    if (ev.key in { ArrowUp: 1, ArrowDown: 1, ArrowLeft: 1, ArrowRight: 1, " ": 1 }) {
      ev.preventDefault();
      inputStep(session, ev.key);
      redraw(session.lastEvents);
    }
  });

  const params = new URLSearchParams(window.location.search);
  const gameUrl = params.get("game");
  if (gameUrl) {
    (async () => {
      try {
        gameText = await fetchText(gameUrl);
        const traceUrl = params.get("trace");
        startSession(traceUrl ? await fetchText(traceUrl) : undefined);
      } catch (exc) {
        note((exc as Error).message, true);
      }
    })();
  }
}

wire();
