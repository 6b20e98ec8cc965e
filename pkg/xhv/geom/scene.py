"""The module contains the scene representation of the molecular-flow
simulator.

A scene is a set of single-sided triangular facets. The vertex winding
defines the normal, which points into the gas volume. Facets carry a sticking
coefficient, a specific outgassing rate (SI, Pa m/s) and a group tag. Virtual
facets are transparent: they only record crossings.
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np

from xhv.constants import AMU, BOLTZMANN, H2_MASS_AMU, ROOM_TEMPERATURE
from xhv.core.bvh import BVH
from xhv.exceptions import ValidationError

LOGGER = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-12


class InvalidGeometryError(ValidationError):
    """Raised when a builder is asked for a geometry that cannot exist."""


class SceneValidationError(ValidationError):
    """Raised when a facet violates an invariant."""

    def __init__(self, message, index=None):
        """Initialize a SceneValidationError object."""
        if index is not None:
            message = f'facet {index}: {message}'

        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Gas:
    """The class represents the simulated gas species."""

    mass_amu: float
    temperature: float  # K

    @classmethod
    def from_amu(cls, mass_amu=H2_MASS_AMU, temperature=ROOM_TEMPERATURE):
        """Create a gas from its molecular mass in atomic mass units."""
        return cls(float(mass_amu), float(temperature))

    @property
    def mass(self):
        """Return the molecular mass, kg."""
        return self.mass_amu * AMU

    @property
    def mean_speed(self):
        """Return the Maxwell-Boltzmann mean speed, m/s."""
        return float(np.sqrt(8.0 * BOLTZMANN * self.temperature / (np.pi * self.mass)))

    @property
    def pressure_factor(self):
        """Return sqrt(2 pi m k T), the factor turning an impingement rate
        density into a pressure.
        """
        return float(np.sqrt(2.0 * np.pi * self.mass * BOLTZMANN * self.temperature))


HYDROGEN = Gas.from_amu()


@dataclass(frozen=True)
class Facet:
    """The class represents a single triangular facet."""

    vertices: tuple
    sticking: float = 0.0
    outgassing: float = 0.0  # Pa m^3 s^-1 m^-2
    tag: str = 'wall'
    virtual: bool = False

    @property
    def area(self):
        """Return the facet area, m^2."""
        v = np.asarray(self.vertices, dtype=np.float64)
        return 0.5 * float(np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0])))

    @property
    def normal(self):
        """Return the unit normal, which points into the gas volume."""
        v = np.asarray(self.vertices, dtype=np.float64)
        n = np.cross(v[1] - v[0], v[2] - v[0])
        return n / np.linalg.norm(n)


def _check_facet(index, vertices, sticking, outgassing, tag, virtual):
    """Raise SceneValidationError if the facet violates an invariant."""
    if not np.all(np.isfinite(vertices)):
        msg = 'vertex coordinates must be finite'
        raise SceneValidationError(msg, index)

    e1 = vertices[1] - vertices[0]
    e2 = vertices[2] - vertices[0]
    longest = max(np.dot(e1, e1), np.dot(e2, e2), np.dot(e2 - e1, e2 - e1))
    if longest == 0.0 or np.linalg.norm(np.cross(e1, e2)) <= DEGENERACY_TOLERANCE * longest:
        msg = 'vertices are collinear (degenerate triangle)'
        raise SceneValidationError(msg, index)

    if not 0.0 <= sticking <= 1.0:
        msg = f'sticking coefficient {sticking} is outside [0, 1]'
        raise SceneValidationError(msg, index)

    if not outgassing >= 0.0:
        msg = f'outgassing rate {outgassing} is negative'
        raise SceneValidationError(msg, index)

    if not tag or any(c.isspace() for c in tag):
        msg = f'tag {tag!r} must be a non-empty word'
        raise SceneValidationError(msg, index)

    if virtual and (sticking != 0.0 or outgassing != 0.0):
        msg = 'virtual facets must have zero sticking and zero outgassing'
        raise SceneValidationError(msg, index)


class Scene:
    """The class represents an immutable triangulated simulation domain."""

    def __init__(self, vertices, sticking, outgassing, tags, virtual=None, gas=HYDROGEN):
        """Initialize a Scene object from per-facet arrays."""
        vertices = np.array(vertices, dtype=np.float64).reshape(-1, 3, 3)
        n = len(vertices)
        sticking = np.array(np.broadcast_to(sticking, (n,)), dtype=np.float64)
        outgassing = np.array(np.broadcast_to(outgassing, (n,)), dtype=np.float64)
        virtual = np.zeros(n, dtype=bool) if virtual is None else np.array(
            np.broadcast_to(virtual, (n,)), dtype=bool,
        )
        tags = (tags,) * n if isinstance(tags, str) else tuple(tags)
        if len(tags) != n:
            msg = f'{len(tags)} tags given for {n} facets'
            raise SceneValidationError(msg)

        for i in range(n):
            _check_facet(i, vertices[i], sticking[i], outgassing[i], tags[i], virtual[i])

        for array in (vertices, sticking, outgassing, virtual):
            array.flags.writeable = False

        self.vertices = vertices
        self.sticking = sticking
        self.outgassing = outgassing
        self.virtual = virtual
        self.tags = tags
        self.gas = gas

        edge1 = vertices[:, 1] - vertices[:, 0]
        edge2 = vertices[:, 2] - vertices[:, 0]
        cross = np.cross(edge1, edge2)
        norm = np.linalg.norm(cross, axis=1)
        self.areas = 0.5 * norm
        self.normals = cross / norm[:, None] if n else np.zeros((0, 3))
        self.tangents = edge1 / np.linalg.norm(edge1, axis=1)[:, None] if n else np.zeros((0, 3))
        self.bitangents = np.cross(self.normals, self.tangents)

        groups = {}
        for i, tag in enumerate(tags):
            groups.setdefault(tag, []).append(i)

        self.groups = {tag: np.array(indices, dtype=np.int64) for tag, indices in groups.items()}
        for tag, indices in self.groups.items():
            flags = virtual[indices]
            if flags.any() and not flags.all():
                msg = f'group {tag!r} mixes virtual and real facets'
                raise SceneValidationError(msg, int(indices[0]))

        self.group_names = tuple(self.groups)
        position = {tag: i for i, tag in enumerate(self.group_names)}
        self.group_ids = np.array([position[tag] for tag in tags], dtype=np.int64)

    @classmethod
    def from_facets(cls, facets, gas=HYDROGEN):
        """Create a scene from a list of Facet objects."""
        facets = list(facets)
        return cls(
            [f.vertices for f in facets],
            [f.sticking for f in facets],
            [f.outgassing for f in facets],
            [f.tag for f in facets],
            [f.virtual for f in facets],
            gas=gas,
        )

    @classmethod
    def merge(cls, *scenes):
        """Concatenate scenes. All of them must describe the same gas."""
        if not scenes:
            msg = 'nothing to merge'
            raise InvalidGeometryError(msg)

        gas = scenes[0].gas
        if any(s.gas != gas for s in scenes):
            msg = 'merged scenes must share the same gas'
            raise InvalidGeometryError(msg)

        return cls(
            np.concatenate([s.vertices for s in scenes]),
            np.concatenate([s.sticking for s in scenes]),
            np.concatenate([s.outgassing for s in scenes]),
            [t for s in scenes for t in s.tags],
            np.concatenate([s.virtual for s in scenes]),
            gas=gas,
        )

    def __len__(self):
        """Return the number of facets."""
        return len(self.vertices)

    @property
    def facets(self):
        """Return the facets as a list of Facet objects."""
        return [
            Facet(
                tuple(tuple(float(c) for c in v) for v in self.vertices[i]),
                float(self.sticking[i]),
                float(self.outgassing[i]),
                self.tags[i],
                bool(self.virtual[i]),
            )
            for i in range(len(self))
        ]

    @functools.cached_property
    def bvh(self):
        """Return the bounding-volume hierarchy over the facets."""
        return BVH(self.vertices)

    def group(self, tag):
        """Return the facet indices of the group ``tag``."""
        try:
            return self.groups[tag]
        except KeyError:
            known = ', '.join(self.group_names)
            msg = f'unknown facet group {tag!r} (known groups: {known})'
            raise SceneValidationError(msg) from None

    def surface_area(self, tag=None):
        """Return the total area of the real facets, or of the group ``tag``, m^2."""
        if tag is not None:
            return float(self.areas[self.group(tag)].sum())

        return float(self.areas[~self.virtual].sum())

    def total_outgassing(self):
        """Return the total gas load Q, Pa m^3/s."""
        return float(np.dot(self.outgassing, self.areas))

    def with_group_properties(self, tag, sticking=None, outgassing=None):
        """Return a copy of the scene with new properties on the group ``tag``."""
        indices = self.group(tag)
        new_sticking = self.sticking.copy()
        new_outgassing = self.outgassing.copy()
        if sticking is not None:
            new_sticking[indices] = sticking

        if outgassing is not None:
            new_outgassing[indices] = outgassing

        return Scene(
            self.vertices, new_sticking, new_outgassing, self.tags, self.virtual, gas=self.gas,
        )

    def with_gas(self, gas):
        """Return a copy of the scene describing another gas."""
        return Scene(
            self.vertices, self.sticking, self.outgassing, self.tags, self.virtual, gas=gas,
        )

    def opposite_facets(self):
        """Return, for every facet, the index of a facet spanning the same
        triangle with the opposite orientation, or -1.
        """
        partners = np.full(len(self), -1, dtype=np.int64)
        seen = {}
        for i, triangle in enumerate(np.round(self.vertices, 12).tolist()):
            key = tuple(sorted(map(tuple, triangle)))
            j = seen.setdefault(key, i)
            if j != i and np.dot(self.normals[i], self.normals[j]) < 0.0:
                partners[i], partners[j] = j, i

        return partners

    def cast(self, origins, directions):
        """Cast rays and return the distances and indices of the facets hit."""
        return self.bvh.intersect(origins, directions)
