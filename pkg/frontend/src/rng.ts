/** splitmix64, bit-identical to the engine's PRNG.
 *
 * One 64-bit word of state carried as a BigInt; game states serialize it as
 * a plain integer, so replaying a trace reproduces every random draw.
 */

export const MASK64 = (1n << 64n) - 1n;

/** Advance one step. Returns [new state, output word]. */
export function splitmix64(state: bigint): [bigint, bigint] {
  state = (state + 0x9e3779b97f4a7c15n) & MASK64;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return [state, (z ^ (z >> 31n)) & MASK64];
}
