"""The module contains the sampling routines of diffuse (Knudsen) emission."""

import numpy as np


def cosine_directions(u1, u2):
    """Map pairs of uniforms to unit vectors in the local facet frame.

    The third component is along the facet normal. The polar angle has the
    density 2 sin(theta) cos(theta), i.e. cos^2(theta) is uniform, and the
    normal component is strictly positive for ``u1`` in [0, 1).
    """
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    cos_theta = np.sqrt(1.0 - u1)
    sin_theta = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    return np.stack(
        (sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta),
        axis=-1,
    )


def sample_cosine_direction(rng, size=None):
    """Draw cosine-law directions in the local facet frame from ``rng``.

    The ``rng`` argument is a ``numpy.random.Generator``. Returns a vector of
    shape ``(3,)`` when ``size`` is None, otherwise an array ``(size, 3)``.
    """
    n = 1 if size is None else size
    u = rng.random((n, 2))
    directions = cosine_directions(u[:, 0], u[:, 1])
    return directions[0] if size is None else directions


def to_world(local, tangent, bitangent, normal):
    """Rotate local-frame vectors into the world frame given per-row bases."""
    return (local[:, 0:1] * tangent +
            local[:, 1:2] * bitangent +
            local[:, 2:3] * normal)


def triangle_points(origin, edge1, edge2, u1, u2):
    """Return points distributed uniformly over the triangles
    ``origin + a * edge1 + b * edge2``.
    """
    fold = u1 + u2 > 1.0
    a = np.where(fold, 1.0 - u1, u1)
    b = np.where(fold, 1.0 - u2, u2)
    return origin + a[:, None] * edge1 + b[:, None] * edge2
