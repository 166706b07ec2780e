"""Tiny deterministic PRNG used wherever generator state must be a plain int.

splitmix64: one 64-bit word of state, trivially serializable to JSON and
reimplementable bit-for-bit in other languages. Simulation states and the
studio's persisted master stream use this; throwaway search randomness uses
`random.Random` seeded from values drawn here.
"""

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance one step. Returns (new_state, output_word)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, (z ^ (z >> 31)) & MASK64


def derive_seed(state: int, *salts: int) -> int:
    """Mix salts into a state word to get an independent child seed."""
    s = state & MASK64
    for salt in salts:
        s, _ = splitmix64((s ^ (salt & MASK64)) & MASK64)
        _, s = splitmix64(s)
    return s


class Splitmix64:
    """Mutable stream wrapper around :func:`splitmix64`."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_uint64(self) -> int:
        self.state, out = splitmix64(self.state)
        return out

    def randrange(self, n: int) -> int:
        """Uniform int in [0, n). Rejection-sampled, so unbiased."""
        if n <= 0:
            raise ValueError("randrange() arg must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_uint64()
            if v < limit:
                return v % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]
