"""Deterministic counter-based random number generation.

Every source of randomness in this library flows through `Stream`, a
counter-based generator built on the splitmix64 mixing function. Word ``k``
(0-indexed) of a stream with seed ``s`` is::

    word(s, k) = mix64((s + (k + 1) * GAMMA) mod 2**64)

where ``GAMMA = 0x9E3779B97F4A7C15`` and ``mix64`` is the splitmix64
finalizer (Steele, Lea & Flood; also used by Java's SplittableRandom).
Because each word depends only on (seed, k), a stream's state is the pair
(seed, counter) and draws vectorize over the counter range.

Independent substreams are derived by hashing the parent seed with a
distinct odd constant::

    child_seed(s, i) = mix64((s + (i + 1) * LEAF) mod 2**64)

Uniforms take the top 53 bits of a word; normals use the Box-Muller
transform on pairs of uniforms. Draw counts are part of the contract:
``normal(n)`` always consumes ``2 * ceil(n / 2)`` words, so trajectories
are reproducible bit-for-bit on a given platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_LEAF = 0xD1B54A32D192ED03
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int, reduced mod 2**64."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64, which is exactly what we want.
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, index: int) -> int:
    """Seed of substream `index` of a stream seeded with `seed`."""
    if index < 0:
        raise ValueError(f"substream index must be >= 0, got {index}")
    return mix64(seed + (index + 1) * _LEAF)


@dataclass
class Stream:
    """A single-owner random stream: (seed, counter) plus draw methods."""

    seed: int
    counter: int = 0

    def __post_init__(self) -> None:
        self.seed &= _MASK
        if self.counter < 0:
            raise ValueError(f"counter must be >= 0, got {self.counter}")

    def substream(self, index: int) -> "Stream":
        """Fresh stream derived from this stream's seed; does not draw."""
        return Stream(derive_seed(self.seed, index))

    def words(self, n: int) -> np.ndarray:
        """Next `n` raw uint64 words; advances the counter by `n`."""
        if n < 0:
            raise ValueError(f"word count must be >= 0, got {n}")
        ks = np.arange(n, dtype=np.uint64) + np.uint64((self.counter + 1) & _MASK)
        states = np.uint64(self.seed) + ks * np.uint64(_GAMMA)
        self.counter += n
        return _mix64_array(states)

    def uniform(self, n: int) -> np.ndarray:
        """`n` doubles uniform on [0, 1), from the top 53 bits of each word."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Standard normal draws via Box-Muller.

        Consumes 2*ceil(count/2) words regardless of parity, so the
        counter advance depends only on the requested count.
        """
        if isinstance(shape, int):
            shape = (shape,)
        count = int(np.prod(shape)) if shape else 1
        pairs = (count + 1) // 2
        w = self.words(2 * pairs)
        # u1 in (0, 1] keeps log finite; u2 in [0, 1).
        u1 = ((w[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (w[pairs:] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:count]
        return z.reshape(shape)

    def integers(self, n: int, high: int) -> np.ndarray:
        """`n` ints uniform on {0, ..., high-1} via floor(u * high).

        The floor construction has bias below high/2**53, negligible for
        the mode/cell counts used here.
        """
        if high <= 0:
            raise ValueError(f"high must be >= 1, got {high}")
        return np.minimum((self.uniform(n) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Permutation of range(n) by sorting one uniform key per element."""
        return np.argsort(self.uniform(n), kind="stable")

    def state(self) -> tuple[int, int]:
        return (self.seed, self.counter)

    @classmethod
    def from_state(cls, state: tuple[int, int]) -> "Stream":
        seed, counter = state
        return cls(int(seed), int(counter))
