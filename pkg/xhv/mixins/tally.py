"""The module provides a hit bookkeeping mixin.

Besides the totals, the tallies keep the sum over particles of the squared
per-particle counts, which gives the standard errors. Everything is an
integer count, so merging tallies in a fixed order is exact.
"""

import numpy as np

COMPACTION_THRESHOLD = 4_000_000


class Tally:
    """The class represents the counts accumulated by tracing particles."""

    def __init__(self, facets, groups):
        """Initialize a Tally object."""
        self.injected = 0
        self.capped = 0
        self.lost = 0
        self.leaked = 0
        self.hits = np.zeros(facets, dtype=np.int64)
        self.hit_squares = np.zeros(facets, dtype=np.float64)
        self.absorbed = np.zeros(facets, dtype=np.int64)
        self.forward = np.zeros(facets, dtype=np.int64)
        self.backward = np.zeros(facets, dtype=np.int64)
        self.group_counts = np.zeros(groups, dtype=np.int64)
        self.group_squares = np.zeros(groups, dtype=np.float64)

    @property
    def terminated(self):
        """Return the number of particles that ended in any way."""
        return int(self.absorbed.sum()) + self.capped + self.lost + self.leaked

    def merge(self, other):
        """Add the counts of ``other`` and return self."""
        self.injected += other.injected
        self.capped += other.capped
        self.lost += other.lost
        self.leaked += other.leaked
        for name in ('hits', 'hit_squares', 'absorbed', 'forward', 'backward',
                     'group_counts', 'group_squares'):
            getattr(self, name).__iadd__(getattr(other, name))

        return self


class _Events:
    """The class accumulates sparse (particle, bin) event counts."""

    def __init__(self, bins):
        self.bins = bins
        self.keys = []
        self.counts = []
        self.size = 0

    def add(self, particles, bins):
        self.keys.append(particles.astype(np.int64) * self.bins + bins)
        self.counts.append(np.ones(len(particles), dtype=np.int64))
        self.size += len(particles)
        if self.size > COMPACTION_THRESHOLD:
            self.compact()

    def compact(self):
        if not self.keys:
            return

        unique, inverse = np.unique(np.concatenate(self.keys), return_inverse=True)
        counts = np.bincount(inverse, weights=np.concatenate(self.counts))
        self.keys = [unique]
        self.counts = [counts.astype(np.int64)]
        self.size = len(unique)

    def totals(self):
        """Return per-bin totals and per-bin sums of squared per-particle counts."""
        self.compact()
        if not self.keys:
            return np.zeros(self.bins, dtype=np.int64), np.zeros(self.bins)

        bins = self.keys[0] % self.bins
        counts = self.counts[0].astype(np.float64)
        totals = np.bincount(bins, weights=counts, minlength=self.bins)
        squares = np.bincount(bins, weights=counts * counts, minlength=self.bins)
        return totals.astype(np.int64), squares


class TallyMixin:
    """The mixin contains methods for recording events into tallies."""

    def _open_tally(self, count):
        facets, groups = len(self._scene), len(self._scene.group_names)
        tally = Tally(facets, groups)
        tally.injected = count
        self._facet_events = _Events(facets)
        self._group_events = _Events(groups)
        return tally

    def _count_hits(self, particles, facets):
        """Record impingements (or crossings) of ``particles`` on ``facets``."""
        self._facet_events.add(particles, facets)
        self._group_events.add(particles, self._scene.group_ids[facets])

    def _count_crossings(self, tally, particles, facets, forward):
        self._count_hits(particles, facets)
        np.add.at(tally.forward, facets[forward], 1)
        np.add.at(tally.backward, facets[~forward], 1)

    def _count_absorbed(self, tally, facets):
        np.add.at(tally.absorbed, facets, 1)

    def _close_tally(self, tally):
        """Fold the per-particle events into ``tally`` and return it."""
        tally.hits, tally.hit_squares = self._facet_events.totals()
        tally.group_counts, tally.group_squares = self._group_events.totals()
        del self._facet_events, self._group_events
        return tally
