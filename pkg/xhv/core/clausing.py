"""The module contains the Clausing integral-equation solution for the
transmission probability of a straight circular tube.

The solution is independent of the Monte Carlo kernel and serves as its
oracle. Lengths are measured in tube radii. Two kernels describe molecules
emitted with the cosine law: ``_direct`` is the probability that a molecule
entering through the inlet disk crosses the plane at distance ``z`` without
touching the wall, ``_wall_escape`` the probability that a molecule leaving a
wall ring travels further than ``u`` along the axis in one direction before
the next wall collision. The wall emission density solves a Fredholm equation
of the second kind, discretized with cells over which the kernels are
integrated exactly.
"""

import numpy as np

from xhv.exceptions import ValidationError

DEFAULT_CELLS = 2000


def _direct(z):
    return 1.0 + 0.5 * z * z - 0.5 * z * np.sqrt(z * z + 4.0)


def _wall_escape(u):
    return 0.5 * ((u * u + 2.0) / np.sqrt(u * u + 4.0) - u)


def _signed_reach(s):
    """Return the probability mass between the source ring and the signed
    axial offset ``s``.
    """
    return np.sign(s) * (0.5 - _wall_escape(np.abs(s)))


def clausing_transmission(length_over_diameter, cells=DEFAULT_CELLS):
    """Return the transmission probability of a tube with the given L/D."""
    if length_over_diameter < 0.0:
        msg = 'length_over_diameter must be non-negative'
        raise ValidationError(msg)

    length = 2.0 * length_over_diameter
    if length == 0.0:
        return 1.0

    edges = np.linspace(0.0, length, cells + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    first_collision = _direct(edges[:-1]) - _direct(edges[1:])

    # transfer[i, j]: a molecule re-emitted from cell j lands in cell i.
    transfer = (_signed_reach(edges[1:, None] - mid[None, :]) -
                _signed_reach(edges[:-1, None] - mid[None, :]))

    emission = np.linalg.solve(np.eye(cells) - transfer, first_collision)
    return float(_direct(length) + emission @ _wall_escape(length - mid))
