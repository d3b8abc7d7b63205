"""Reproducible random streams.

Every stochastic operation consumes an :class:`RngStream`, a pair
``(master_seed, stream_id)`` that maps to a Philox counter-based generator
keyed through :class:`numpy.random.SeedSequence`. Only the raw 64-bit output
of the bit generator is used, and uniforms, normals and permutations are
derived from it here, so draws do not depend on the sampling algorithms of
``numpy.random.Generator`` changing between releases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def child(self, *path: int) -> "RngStream":
        """Derive an independent sub-stream, e.g. one per sample or per fold."""
        sid = self.stream_id
        for k in path:
            # splitmix64 finalizer as a keyed hash of the path
            z = (sid * 0x9E3779B97F4A7C15 + int(k) + 1) & _MASK64
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
            sid = z ^ (z >> 31)
        return RngStream(self.master_seed, sid)

    def generator(self) -> "Draws":
        return Draws(self)


class Draws:
    """A stateful cursor over the stream's draw sequence."""

    def __init__(self, stream: RngStream):
        seq = np.random.SeedSequence(
            entropy=int(stream.master_seed), spawn_key=(int(stream.stream_id),)
        )
        self._bits = np.random.Philox(seq)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(int(size)).astype(np.uint64)

    def uniform(self, size: int) -> np.ndarray:
        """Uniform draws on the open interval (0, 1)."""
        hi = (self.raw(size) >> np.uint64(11)).astype(np.float64)
        return (hi + 0.5) * _TWO_M53

    def normal(self, size) -> np.ndarray:
        """Standard normal draws by inverse transform of :meth:`uniform`."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        return ndtri(self.uniform(int(np.prod(shape)))).reshape(shape)

    def below(self, bounds: np.ndarray) -> np.ndarray:
        """Integers ``j`` with ``0 <= j < bound`` for each entry of ``bounds``."""
        bounds = np.asarray(bounds, dtype=np.int64)
        j = np.floor(self.uniform(bounds.size) * bounds).astype(np.int64)
        return np.minimum(j, bounds - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n, dtype=np.int64)
        if n < 2:
            return perm
        swaps = self.below(np.arange(n, 1, -1))
        for i, j in zip(range(n - 1, 0, -1), swaps):
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def choice(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices drawn uniformly from ``range(n)``."""
        if not 0 <= k <= n:
            raise ValueError("cannot choose more items than available")
        perm = np.arange(n, dtype=np.int64)
        if k == 0:
            return perm[:0]
        swaps = self.below(n - np.arange(k))
        for i, j in enumerate(swaps):
            j = i + j
            perm[i], perm[j] = perm[j], perm[i]
        return perm[:k].copy()
