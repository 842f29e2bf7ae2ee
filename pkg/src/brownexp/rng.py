"""Counter-based random streams.

Every sampler takes a :class:`Seed`.  A seed ``(root, stream)`` is used as the
128-bit key of a Philox generator, so distinct streams are independent and a
trial's randomness does not depend on which worker ran it or in what order.
Sub-streams inside one trial (the paths of a packet, for instance) are
separated through the high word of the Philox counter.

Percolation needs one bit per lattice site, addressable in any order; that is
done with :func:`site_uniforms`, a splitmix64 hash of ``(key, site index)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Seed:
    """Immutable ``(root, stream)`` pair; both are unsigned 64-bit integers."""

    root: int
    stream: int = 0

    def __post_init__(self):
        for name in ("root", "stream"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or not 0 <= v <= _MASK64:
                raise ValueError(f"Seed.{name} must be a uint64, got {v!r}")
            object.__setattr__(self, name, int(v))

    def generator(self, sub: int = 0) -> np.random.Generator:
        """Philox generator for sub-stream ``sub`` of this seed."""
        return np.random.Generator(
            np.random.Philox(key=[self.root, self.stream], counter=[0, 0, int(sub), 0])
        )

    def child(self, index: int) -> "Seed":
        """Seed for the ``index``-th child stream (same root)."""
        return Seed(self.root, _mix64(self.stream * _GOLDEN + int(index) + 1))

    def key64(self) -> int:
        """A single 64-bit key derived from both words."""
        return _mix64(_mix64(self.root) ^ (self.stream * _GOLDEN & _MASK64))

    def to_dict(self) -> dict:
        return {"root": self.root, "stream": self.stream}

    @classmethod
    def from_dict(cls, d) -> "Seed":
        return cls(int(d["root"]), int(d.get("stream", 0)))


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    if isinstance(seed, dict):
        return Seed.from_dict(seed)
    return Seed(int(seed))


@numba.njit(cache=True)
def _splitmix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def site_uniform(key, index):
    """Uniform in [0, 1) for lattice site ``index`` under ``key`` (scalar)."""
    z = _splitmix(np.uint64(key) + np.uint64(index) * np.uint64(0x9E3779B97F4A7C15))
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def site_uniforms(key, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = site_uniform(key, i)
    return out
