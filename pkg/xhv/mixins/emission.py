"""The module provides a particle launching mixin."""

import numpy as np

from xhv.core.sampling import cosine_directions, to_world, triangle_points

EMISSION_DRAWS = 5


class EmissionMixin:
    """The mixin contains methods for launching particles from facets."""

    def _emission_table(self, weights):
        """Return the cumulative emission weights, or None when nothing emits."""
        cumulative = np.cumsum(np.asarray(weights, dtype=np.float64))
        if not len(cumulative) or cumulative[-1] <= 0.0:
            return None

        return cumulative

    def _emit(self, particles, counters):
        """Launch the ``particles`` and return their positions, directions and
        source facets.

        The source facet is drawn proportionally to its emission weight, the
        position uniformly over the facet and the direction by the cosine law
        around the facet normal. Advances ``counters`` by EMISSION_DRAWS.
        """
        u = self._stream.draw(particles, counters, EMISSION_DRAWS)
        counters += np.uint64(EMISSION_DRAWS)

        cumulative = self._cumulative
        facets = np.searchsorted(cumulative, u[:, 0] * cumulative[-1], side='right')
        facets = np.minimum(facets, len(cumulative) - 1)

        vertices = self._scene.vertices[facets]
        points = triangle_points(vertices[:, 0], vertices[:, 1] - vertices[:, 0],
                                 vertices[:, 2] - vertices[:, 0], u[:, 1], u[:, 2])
        directions = to_world(cosine_directions(u[:, 3], u[:, 4]), self._tangents[facets],
                              self._bitangents[facets], self._normals[facets])
        return points, directions, facets
