"""The module contains the builders of parametric geometries.

Enclosures (tubes, boxes, open space) have inward normals. Bodies placed in
the gas (pump cartridges) have outward normals. Openings to be joined with
another part are left without facets, and the parts are joined by placing
identical polygons at the joint.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import spatial

from xhv.geom.scene import HYDROGEN, InvalidGeometryError, Scene

LOGGER = logging.getLogger(__name__)

CAP_KINDS = ('open', 'blank', 'virtual', 'hole')

# Rotations taking the +z axis to the requested axis. All are proper, so they
# preserve the facet winding.
_AXES = {
    'z': np.eye(3),
    'x': np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    'y': np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
}
_FLIP = np.diag([1.0, -1.0, -1.0])

# face: (axis index, side, u axis, v axis). u x v is the inward normal.
_FACES = {
    '-x': (0, -1, 1, 2),
    '+x': (0, +1, 2, 1),
    '-y': (1, -1, 2, 0),
    '+y': (1, +1, 0, 2),
    '-z': (2, -1, 0, 1),
    '+z': (2, +1, 1, 0),
}


@dataclass(frozen=True)
class PortSpec:
    """The class describes a circular port on a box face.

    The ``center`` is given in the face coordinates, the kind is one of
    'open' (absorbing, sticking 1 unless ``sticking`` is set), 'blank'
    (closed by a flange with the wall properties), 'virtual' (transparent) or
    'hole' (no facets; the opening is closed by another part).
    """

    face: str
    diameter: float
    center: tuple = (0.0, 0.0)
    tag: str | None = None
    kind: str = 'open'
    sticking: float | None = None


def _rotation(axis):
    if axis.startswith('-'):
        return _AXES[axis[1:]] @ _FLIP

    return _AXES[axis.lstrip('+')]


def _place(triangles, axis, origin):
    """Rotate triangles built along +z onto ``axis`` and translate them."""
    if axis.lstrip('+-') not in _AXES:
        msg = f'unknown axis {axis!r}'
        raise InvalidGeometryError(msg)

    return triangles @ _rotation(axis).T + np.asarray(origin, dtype=np.float64)


def _check_positive(**dimensions):
    for name, value in dimensions.items():
        if not value > 0.0:
            msg = f'{name} must be positive, got {value}'
            raise InvalidGeometryError(msg)


def _check_resolution(resolution):
    if resolution < 3:  # noqa: PLR2004
        msg = f'resolution must be at least 3, got {resolution}'
        raise InvalidGeometryError(msg)


def _circle(radius, resolution, z=0.0):
    angles = 2.0 * np.pi * np.arange(resolution) / resolution
    return np.stack(
        (radius * np.cos(angles), radius * np.sin(angles), np.full(resolution, z)),
        axis=-1,
    )


def _disk(radius, resolution, z, *, up):
    """Return the fan triangulation of a polygonal disk at height ``z``.

    The normal is +z when ``up`` is true.
    """
    ring = _circle(radius, resolution, z)
    center = np.broadcast_to([0.0, 0.0, z], ring.shape)
    following = np.roll(ring, -1, axis=0)
    if up:
        return np.stack((center, ring, following), axis=1)

    return np.stack((center, following, ring), axis=1)


def _mantle(radius, resolution, length, segments, *, inward):
    """Return the lateral surface of a prism along +z."""
    triangles = []
    for k in range(segments):
        a = _circle(radius, resolution, length * k / segments)
        d = _circle(radius, resolution, length * (k + 1) / segments)
        b = np.roll(a, -1, axis=0)
        c = np.roll(d, -1, axis=0)
        if inward:
            triangles += [np.stack((a, c, b), axis=1), np.stack((a, d, c), axis=1)]
        else:
            triangles += [np.stack((a, b, c), axis=1), np.stack((a, c, d), axis=1)]

    return np.concatenate(triangles)


def _cap_properties(kind, wall_sticking, wall_outgassing):
    """Return (sticking, outgassing, virtual) of a cap or port of ``kind``."""
    if kind == 'open':
        return 1.0, 0.0, False

    if kind == 'blank':
        return wall_sticking, wall_outgassing, False

    if kind == 'virtual':
        return 0.0, 0.0, True

    msg = f'unknown port kind {kind!r} (expected one of {", ".join(CAP_KINDS)})'
    raise InvalidGeometryError(msg)


class _Parts:
    """The class accumulates triangles and their properties."""

    def __init__(self):
        self.triangles, self.sticking, self.outgassing = [], [], []
        self.tags, self.virtual = [], []

    def add(self, triangles, tag, sticking=0.0, outgassing=0.0, *, virtual=False):
        n = len(triangles)
        self.triangles.append(triangles)
        self.sticking.append(np.full(n, sticking))
        self.outgassing.append(np.full(n, outgassing))
        self.tags += [tag] * n
        self.virtual.append(np.full(n, virtual))

    def scene(self, gas):
        return Scene(
            np.concatenate(self.triangles),
            np.concatenate(self.sticking),
            np.concatenate(self.outgassing),
            self.tags,
            np.concatenate(self.virtual),
            gas=gas,
        )


def build_tube(diameter, length, resolution=32, *, inlet='open', outlet='open',
               wall_sticking=0.0, wall_outgassing=0.0, axial_segments=1,
               axis='z', origin=(0.0, 0.0, 0.0), tag='wall',
               inlet_tag='inlet', outlet_tag='outlet', gas=HYDROGEN):
    """Build a polygonal tube from ``origin`` along ``axis``.

    The inlet cap lies at the origin, the outlet cap at ``length``. Each cap
    is one of the port kinds of PortSpec; an open cap is a black port group.
    A tube of zero length is an orifice: the two caps coincide and there is
    no mantle.
    """
    _check_positive(diameter=diameter)
    if not length >= 0.0:
        msg = f'length must not be negative, got {length}'
        raise InvalidGeometryError(msg)

    _check_resolution(resolution)
    if axial_segments < 1:
        msg = f'axial_segments must be at least 1, got {axial_segments}'
        raise InvalidGeometryError(msg)

    radius = diameter / 2.0
    parts = _Parts()
    if length > 0.0:
        parts.add(
            _mantle(radius, resolution, length, axial_segments, inward=True),
            tag, wall_sticking, wall_outgassing,
        )

    for kind, cap_tag, z, up in ((inlet, inlet_tag, 0.0, True),
                                 (outlet, outlet_tag, length, False)):
        if kind == 'hole':
            continue

        sticking, outgassing, virtual = _cap_properties(kind, wall_sticking, wall_outgassing)
        parts.add(_disk(radius, resolution, z, up=up), cap_tag, sticking, outgassing,
                  virtual=virtual)

    if not parts.triangles:
        msg = 'an orifice with two holes has no facets'
        raise InvalidGeometryError(msg)

    scene = parts.scene(gas)
    return Scene(
        _place(scene.vertices, axis, origin), scene.sticking, scene.outgassing,
        scene.tags, scene.virtual, gas=gas,
    )


def build_cylinder_body(diameter, length, resolution=24, *, sticking=0.0, outgassing=0.0,
                        axis='z', origin=(0.0, 0.0, 0.0), tag='pump', gas=HYDROGEN):
    """Build a closed cylinder with outward normals, e.g. a getter cartridge.

    The body extends from ``origin`` along ``axis``.
    """
    _check_positive(diameter=diameter, length=length)
    _check_resolution(resolution)

    radius = diameter / 2.0
    triangles = np.concatenate((
        _mantle(radius, resolution, length, 1, inward=False),
        _disk(radius, resolution, 0.0, up=False),
        _disk(radius, resolution, length, up=True),
    ))
    return Scene(_place(triangles, axis, origin), sticking, outgassing, tag, gas=gas)


def _polygon_area(radius, resolution):
    return 0.5 * resolution * radius ** 2 * np.sin(2.0 * np.pi / resolution)


def _face_with_ports(face, half_u, half_v, ports, resolution):
    """Triangulate a rectangle with polygonal holes.

    Returns ``(frame, disks)``: the triangles around the holes and the fan of
    every hole, in face coordinates (2D, counter-clockwise). The frame is the
    Delaunay triangulation of the corners and the hole vertices without the
    triangles spanned by the vertices of a single hole.
    """
    angles = 2.0 * np.pi * np.arange(resolution) / resolution
    ring = np.stack((np.cos(angles), np.sin(angles)), axis=-1)
    centers = [np.asarray(port.center, dtype=np.float64) for port in ports]
    holes = [c + port.diameter / 2.0 * ring for c, port in zip(centers, ports, strict=True)]

    corners = np.array([[-half_u, -half_v], [half_u, -half_v], [half_u, half_v],
                        [-half_u, half_v]])
    points = np.concatenate([corners, *holes])
    owner = np.concatenate([np.full(len(corners), -1),
                            np.repeat(np.arange(len(holes)), resolution)])

    simplices = spatial.Delaunay(points).simplices
    owners = owner[simplices]
    inside = (owners[:, 0] >= 0) & (owners[:, 0] == owners[:, 1]) & \
        (owners[:, 1] == owners[:, 2])
    frame = points[simplices[~inside]]

    # Qhull does not fix the orientation of the simplices.
    e1 = frame[:, 1] - frame[:, 0]
    e2 = frame[:, 2] - frame[:, 0]
    clockwise = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0.0
    frame[clockwise] = frame[clockwise][:, ::-1]

    area = 0.5 * float(np.sum(np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])))
    expected = 4.0 * half_u * half_v - sum(_polygon_area(port.diameter / 2.0, resolution)
                                           for port in ports)
    if abs(area - expected) > 1e-9 * expected:
        msg = (f'the ports on face {face} are too close to each other or to the edge '
               f'for resolution {resolution}')
        raise InvalidGeometryError(msg)

    disks = [
        np.stack((np.broadcast_to(c, hole.shape), hole, np.roll(hole, -1, axis=0)), axis=1)
        for c, hole in zip(centers, holes, strict=True)
    ]
    return frame, disks


def _check_ports(face, half_u, half_v, ports, extents):
    """Raise InvalidGeometryError if a port leaves ``face`` or two ports
    intersect.
    """
    axis = _FACES[face][0]
    for port in ports:
        radius = port.diameter / 2.0
        cu, cv = port.center
        if abs(cu) + radius >= half_u or abs(cv) + radius >= half_v:
            msg = (f'port of diameter {port.diameter} at {port.center} does not fit '
                   f'on face {face} of the box {tuple(extents)} (axis {"xyz"[axis]})')
            raise InvalidGeometryError(msg)

    for i, first in enumerate(ports):
        for second in ports[i + 1:]:
            gap = np.hypot(*np.subtract(first.center, second.center))
            if gap <= (first.diameter + second.diameter) / 2.0:
                msg = (f'overlapping ports on face {face}: {first.diameter} at '
                       f'{first.center} and {second.diameter} at {second.center}')
                raise InvalidGeometryError(msg)


def _lift(points, face, extents):
    """Map face coordinates of ``face`` onto the box surface."""
    axis, side, u, v = _FACES[face]
    shape = points.shape[:-1]
    world = np.zeros((*shape, 3))
    world[..., axis] = side * extents[axis] / 2.0
    world[..., u] = points[..., 0]
    world[..., v] = points[..., 1]
    return world


def build_box(extents, ports=(), resolution=32, *, wall_sticking=0.0, wall_outgassing=0.0,
              center=(0.0, 0.0, 0.0), tag='wall', gas=HYDROGEN):
    """Build a rectangular chamber centred on ``center`` with circular ports.

    The ports are given as PortSpec objects; a face may carry several of them
    as long as they fit inside it and do not intersect.
    """
    extents = np.asarray(extents, dtype=np.float64)
    if extents.shape != (3,):
        msg = 'box extents must have three components'
        raise InvalidGeometryError(msg)

    _check_positive(**dict(zip(('extent_x', 'extent_y', 'extent_z'), extents, strict=True)))
    _check_resolution(resolution)

    by_face = {face: [] for face in _FACES}
    for port in ports:
        if port.face not in _FACES:
            msg = f'unknown box face {port.face!r}'
            raise InvalidGeometryError(msg)

        _check_positive(port_diameter=port.diameter)
        by_face[port.face].append(port)

    parts = _Parts()
    for face, (_, _, u, v) in _FACES.items():
        half_u, half_v = extents[u] / 2.0, extents[v] / 2.0
        face_ports = by_face[face]
        if not face_ports:
            rectangle = np.array([[-half_u, -half_v], [half_u, -half_v],
                                  [half_u, half_v], [-half_u, half_v]])
            quad = rectangle[[[0, 1, 2], [0, 2, 3]]]
            parts.add(_lift(quad, face, extents), tag, wall_sticking, wall_outgassing)
            continue

        _check_ports(face, half_u, half_v, face_ports, extents)
        frame, disks = _face_with_ports(face, half_u, half_v, face_ports, resolution)
        parts.add(_lift(frame, face, extents), tag, wall_sticking, wall_outgassing)
        for port, disk in zip(face_ports, disks, strict=True):
            if port.kind == 'hole':
                continue

            sticking, outgassing, virtual = _cap_properties(port.kind, wall_sticking,
                                                            wall_outgassing)
            if port.sticking is not None:
                sticking = port.sticking

            parts.add(_lift(disk, face, extents), port.tag or f'port{face}', sticking,
                      outgassing, virtual=virtual)

    scene = parts.scene(gas)
    return Scene(
        scene.vertices + np.asarray(center, dtype=np.float64), scene.sticking,
        scene.outgassing, scene.tags, scene.virtual, gas=gas,
    )


def build_sampling_plane(center, size, normal='z', *, tag='roi', gas=HYDROGEN):
    """Build a square virtual facet pair of side ``size``.

    Crossings along ``normal`` count as forward, the opposite ones as
    backward.
    """
    _check_positive(size=size)
    half = size / 2.0
    square = np.array([[-half, -half, 0.0], [half, -half, 0.0],
                       [half, half, 0.0], [-half, half, 0.0]])
    triangles = square[[[0, 1, 2], [0, 2, 3]]]
    return Scene(_place(triangles, normal, center), 0.0, 0.0, tag, virtual=True, gas=gas)


def build_open_space(body, margin=None, *, tag='boundary'):
    """Surround ``body`` with a black box that stands for the open space.

    The box is the injection port of pumping-speed measurements on the
    body. The ``margin`` defaults to a quarter of the largest body extent.
    """
    lo = body.vertices.reshape(-1, 3).min(axis=0)
    hi = body.vertices.reshape(-1, 3).max(axis=0)
    if margin is None:
        margin = 0.25 * float(np.max(hi - lo))

    _check_positive(margin=margin)
    enclosure = build_box(hi - lo + 2.0 * margin, center=(lo + hi) / 2.0, tag=tag,
                          wall_sticking=1.0, gas=body.gas)
    return Scene.merge(body, enclosure)
