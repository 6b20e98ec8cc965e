"""The module provides a gas-surface interaction mixin."""

import numpy as np

from xhv.core.sampling import cosine_directions, to_world

REFLECTION_DRAWS = 3


class SurfaceMixin:
    """The mixin contains methods for the interaction of particles with real
    facets.
    """

    def _backside(self, directions, facets):
        """Return the mask of the rays that reach ``facets`` from behind."""
        return np.einsum('ij,ij->i', directions, self._normals[facets]) > 0.0

    def _reflect(self, particles, counters, facets):
        """Decide whether the particles stick on ``facets`` and draw diffuse
        reflection directions for the others.

        Returns ``(stuck, directions)``. Every particle consumes
        REFLECTION_DRAWS numbers whatever the outcome; the caller advances the
        counters.
        """
        u = self._stream.draw(particles, counters, REFLECTION_DRAWS)
        stuck = u[:, 0] < self._sticking[facets]
        directions = to_world(cosine_directions(u[:, 1], u[:, 2]), self._tangents[facets],
                              self._bitangents[facets], self._normals[facets])
        return stuck, directions

    def _crossing(self, directions, facets):
        """Classify crossings of virtual facets.

        Returns ``(forward, leaving)``: whether the ray moves along the facet
        normal, and whether it leaves the domain through an exit port.
        """
        forward = np.einsum('ij,ij->i', directions, self._normals[facets]) > 0.0
        return forward, self._exits[facets] & ~forward
