"""The module contains counter-based random number streams.

A draw is a pure function of ``(seed, particle index, draw counter)``: the
particle index selects a stream, the counter selects a position in it. No
generator state is carried between calls, so the numbers a particle consumes
do not depend on which worker traces it, in which batch, or in which order.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)

_MASK_64 = (1 << 64) - 1
_TO_UNIT = 1.0 / (1 << 53)


def _mix(x):
    """Apply the SplitMix64 finalizer to a uint64 array."""
    x = (x ^ (x >> np.uint64(30))) * _MIX_1
    x = (x ^ (x >> np.uint64(27))) * _MIX_2
    return x ^ (x >> np.uint64(31))


class CounterStream:
    """The class represents a family of random streams keyed by a 64-bit seed."""

    def __init__(self, seed):
        """Initialize a CounterStream object."""
        self.seed = int(seed)
        key = np.array([self.seed & _MASK_64], dtype=np.uint64)
        self._key = _mix(key + _GOLDEN)[0]

    def uniform(self, particles, counters):
        """Return one uniform number in [0, 1) per pair of ``particles`` and
        ``counters``.
        """
        particles = np.asarray(particles, dtype=np.uint64)
        counters = np.asarray(counters, dtype=np.uint64)
        base = _mix((particles * _GOLDEN) ^ self._key)
        bits = _mix(base + (counters + np.uint64(1)) * _STREAM)
        return (bits >> np.uint64(11)).astype(np.float64) * _TO_UNIT

    def draw(self, particles, counters, k):
        """Return ``k`` consecutive uniforms per particle as a ``(n, k)`` array.

        The ``counters`` argument holds the first counter value for every
        particle; the caller advances it by ``k``.
        """
        particles = np.asarray(particles, dtype=np.uint64)[:, None]
        counters = np.asarray(counters, dtype=np.uint64)[:, None]
        steps = np.arange(k, dtype=np.uint64)[None, :]
        return self.uniform(
            np.broadcast_to(particles, (particles.shape[0], k)),
            counters + steps,
        )
