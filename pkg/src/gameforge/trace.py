"""Episode trace files: JSON Lines with a header, one event per line, and a
closing footer.

    {"definition": "<sha256 of the game file text>", "level": 0, "seed": 7}
    {"from": [0, 1], "id": 0, "kind": "Moved", ...}
    ...
    {"actions": ["Right", ...], "final": "<state digest>", "ticks": 4}

Every line is canonical JSON (sorted keys, compact separators, UTF-8, no
ASCII escaping) so traces are byte-comparable across implementations: the
browser player emits this format bit-exactly and `verify_trace` replays the
footer's actions through the engine to check both the event lines and the
final state digest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import engine, gdl


class TraceFormatError(Exception):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def event_doc(ev: engine.TraceEvent) -> dict:
    doc = {"tick": ev.tick, "kind": ev.kind}
    doc.update(ev.payload)
    return doc


def format_trace(definition_text: str, level: int, seed: int,
                 actions: list, events: list, final: str, ticks: int) -> str:
    header = {"definition": gdl.definition_digest(definition_text),
              "level": level, "seed": seed}
    lines = [canonical_json(header)]
    lines.extend(canonical_json(event_doc(ev)) for ev in events)
    lines.append(canonical_json({"actions": list(actions), "final": final,
                                 "ticks": ticks}))
    return "\n".join(lines) + "\n"


def record_trace(definition_text: str, level: int, seed: int,
                 actions: list) -> str:
    """Play a fixed action list from a fresh state and format the result."""
    g = gdl.parse_game(definition_text)
    state = engine.init_state(g, level, seed)
    events = []
    for action in actions:
        state, evs = engine.step(state, action)
        events.extend(evs)
    return format_trace(definition_text, level, seed, actions, events,
                        engine.state_hash(state), state.tick)


@dataclass
class TraceFile:
    header: dict
    event_lines: list  # canonical JSON strings, as stored
    footer: dict


def parse_trace(text: str) -> TraceFile:
    lines = [line for line in text.split("\n") if line]
    if len(lines) < 2:
        raise TraceFormatError("trace needs a header and a footer")
    try:
        header = json.loads(lines[0])
        footer = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"bad JSON: {exc}") from None
    for key in ("definition", "level", "seed"):
        if key not in header:
            raise TraceFormatError(f"header missing {key!r}")
    for key in ("actions", "final", "ticks"):
        if key not in footer:
            raise TraceFormatError(f"footer missing {key!r}")
    return TraceFile(header, lines[1:-1], footer)


@dataclass
class VerifyResult:
    ok: bool
    message: str
    final: str | None = None


def verify_trace(definition_text: str, trace_text: str) -> VerifyResult:
    """Replay a trace against a game file; any divergence fails."""
    tf = parse_trace(trace_text)
    digest = gdl.definition_digest(definition_text)
    if tf.header["definition"] != digest:
        return VerifyResult(False, "definition digest mismatch "
                            f"(trace {tf.header['definition'][:12]}…, "
                            f"file {digest[:12]}…)")
    g = gdl.parse_game(definition_text)
    try:
        state = engine.init_state(g, tf.header["level"], tf.header["seed"])
    except engine.EngineError as exc:
        return VerifyResult(False, f"cannot initialize: {exc}")

    replayed = []
    for action in tf.footer["actions"]:
        if state.status != "Running":
            return VerifyResult(False, "trace has actions beyond the terminal state")
        state, events = engine.step(state, action)
        replayed.extend(canonical_json(event_doc(ev)) for ev in events)

    if replayed != tf.event_lines:
        for i, (got, want) in enumerate(zip(replayed, tf.event_lines)):
            if got != want:
                return VerifyResult(False, f"event line {i + 1} diverges:\n"
                                    f"  trace : {want}\n  replay: {got}")
        return VerifyResult(False, f"event count differs: trace has "
                            f"{len(tf.event_lines)}, replay {len(replayed)}")

    final = engine.state_hash(state)
    if final != tf.footer["final"]:
        return VerifyResult(False, f"final digest mismatch: trace "
                            f"{tf.footer['final']}, replay {final}")
    if state.tick != tf.footer["ticks"]:
        return VerifyResult(False, f"tick count mismatch: trace "
                            f"{tf.footer['ticks']}, replay {state.tick}")
    return VerifyResult(True, "trace verified", final)
