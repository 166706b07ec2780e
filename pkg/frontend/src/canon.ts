/** Canonical JSON shared byte-for-byte with the engine's trace writer.
 *
 * Objects sort their keys by code point, separators are compact, and
 * non-ASCII characters stay raw (the reference writer does not escape
 * them either). All numbers in trace material are integers, so number
 * formatting cannot diverge. JSON.stringify's extra  /  escapes
 * are the one formal difference; those characters never appear in game
 * names or event payloads.
 */

export type Json = null | boolean | number | string | Json[] | { [k: string]: Json };

/** Code-point string order (what the reference implementation sorts by). */
export function cmpCodePoints(a: string, b: string): number {
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    const ca = a.codePointAt(i)!;
    const cb = b.codePointAt(j)!;
    if (ca !== cb) return ca - cb;
    i += ca > 0xffff ? 2 : 1;
    j += cb > 0xffff ? 2 : 1;
  }
  return a.length - i - (b.length - j);
}

export function canonicalJson(v: Json): string {
  if (v === null || typeof v !== "object") return JSON.stringify(v);
  if (Array.isArray(v)) return "[" + v.map(canonicalJson).join(",") + "]";
  const keys = Object.keys(v).sort(cmpCodePoints);
  return "{" + keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(v[k])).join(",") + "}";
}
