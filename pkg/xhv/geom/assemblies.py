"""The module contains the shipped geometries of the XHV system: the
spherical-square science chamber, the getter pump in its housing tube and the
full chamber-to-pump assembly.

Dimensions come from the 'assemblies' and 'pumps' sections of the presets.
"""

import logging

import numpy as np

from xhv.config import load_presets
from xhv.constants import INCH, outgassing_to_si
from xhv.geom.builders import PortSpec, build_box, build_cylinder_body, build_sampling_plane, \
    build_tube
from xhv.geom.scene import HYDROGEN, InvalidGeometryError, Scene

LOGGER = logging.getLogger(__name__)

PUMP_PORTS = {'large': 'large_port_bore', 'small': 'small_port_bore'}


def _section(presets, name):
    presets = presets or load_presets()
    return presets['assemblies'][name], presets


def spherical_square_chamber(pump_port='large', outgassing=1e-14, *, presets=None,
                             gas=HYDROGEN):
    """Build the science chamber with a black pumping port on its bottom face.

    The ``pump_port`` is 'large' (6 in flange), 'small' (4.5 in flange) or a
    bore diameter in metres. The ``outgassing`` rate is in mbar l s^-1 cm^-2.
    The region of interest at the chamber centre is the 'roi' sampling plane.
    """
    section, _ = _section(presets, 'spherical_square')
    bore = section[PUMP_PORTS[pump_port]] if pump_port in PUMP_PORTS else float(pump_port)
    small = section['small_port_bore']
    q = outgassing_to_si(outgassing)
    ports = [
        PortSpec('-z', bore, tag='pump_port'),
        PortSpec('+z', section['large_port_bore'], tag='window', kind='blank'),
        *(PortSpec(face, small, tag='window', kind='blank') for face in ('-x', '+x', '-y', '+y')),
    ]
    chamber = build_box(section['extents'], ports, section['resolution'], wall_outgassing=q,
                        gas=gas)
    roi = build_sampling_plane((0.0, 0.0, 0.0), section['roi_size'], tag='roi', gas=gas)
    return Scene.merge(chamber, roi)


def pump_cartridge(sticking=1.0, *, origin=(0.0, 0.0, 0.0), axis='z', presets=None,
                   gas=HYDROGEN):
    """Build the getter cartridge body tagged 'pump'."""
    presets = presets or load_presets()
    pump = presets['pumps']['z1000']
    return build_cylinder_body(pump['cartridge_diameter'], pump['cartridge_length'],
                               pump['resolution'], sticking=sticking, origin=origin, axis=axis,
                               gas=gas)


def pump_in_tube(tube_diameter=4.0 * INCH, tube_length=None, sticking=1.0, *, presets=None,
                 gas=HYDROGEN):
    """Build the getter pump inside its housing tube.

    The tube runs along +z from the open 'inlet' (the measurement port) to a
    blank flange. The cartridge sits on the axis, a cap gap away from the
    blank flange.
    """
    section, presets = _section(presets, 'pump_tube')
    pump = presets['pumps']['z1000']
    tube_length = section['tube_length'] if tube_length is None else tube_length
    if pump['cartridge_diameter'] >= tube_diameter:
        msg = (f'the pump cartridge ({pump["cartridge_diameter"]} m) does not fit into a '
               f'{tube_diameter} m tube')
        raise InvalidGeometryError(msg)

    start = tube_length - pump['cap_gap'] - pump['cartridge_length']
    if start <= 0.0:
        msg = f'the pump cartridge does not fit into a {tube_length} m long tube'
        raise InvalidGeometryError(msg)

    tube = build_tube(tube_diameter, tube_length, section['resolution'], inlet='open',
                      outlet='blank', gas=gas)
    cartridge = pump_cartridge(sticking, origin=(0.0, 0.0, start), presets=presets, gas=gas)
    return Scene.merge(tube, cartridge)


def _convex_sticking(body, speed, gas):
    """Return the sticking that makes the convex ``body`` pump ``speed`` l/s
    in open space.
    """
    black = gas.mean_speed / 4.0 * body.surface_area() * 1e3
    if speed > black:
        msg = f'a body of {body.surface_area():.4g} m^2 pumps at most {black:.4g} l/s'
        raise InvalidGeometryError(msg)

    return speed / black


def full_system(outgassing=1e-14, *, holder_gap=None, presets=None, gas=HYDROGEN):
    """Build the science chamber joined through a connection tube to the pump
    cube.

    The ions sit above the trap holder ('holder'), a disk ``holder_gap`` (m)
    over the pumping port of the chamber. The cube carries two getter pumps in
    their housing tubes (cartridges tagged 'pump'), the ion pump
    ('ion_pump'), the gauge at the end of a nipple ('gauge') and a blank valve
    flange. Every real surface outgasses at ``outgassing``
    (mbar l s^-1 cm^-2), pumps excepted.
    """
    chamber_section, presets = _section(presets, 'spherical_square')
    section = presets['assemblies']['full_system']
    pump = presets['pumps']['z1000']
    q = outgassing_to_si(outgassing)
    bore = chamber_section['large_port_bore']
    small = chamber_section['small_port_bore']
    resolution = chamber_section['resolution']
    height = chamber_section['extents'][2]
    holder_gap = section['holder_gap'] if holder_gap is None else holder_gap

    floor = -height / 2.0
    if not 0.0 < holder_gap < -floor - section['holder_thickness']:
        msg = (f'holder gap {holder_gap} m must be positive and keep the holder below the '
               f'region of interest')
        raise InvalidGeometryError(msg)

    chamber_ports = [
        PortSpec('-z', bore, tag='connection', kind='hole'),
        PortSpec('+z', bore, tag='window', kind='blank'),
        *(PortSpec(face, small, tag='window', kind='blank') for face in ('-x', '+x', '-y', '+y')),
    ]
    chamber = build_box(chamber_section['extents'], chamber_ports, resolution,
                        wall_outgassing=q, gas=gas)
    roi = build_sampling_plane((0.0, 0.0, 0.0), chamber_section['roi_size'], tag='roi', gas=gas)
    holder = build_cylinder_body(section['holder_diameter'], section['holder_thickness'],
                                 resolution, outgassing=q, origin=(0.0, 0.0, floor + holder_gap),
                                 tag='holder', gas=gas)
    connection = build_tube(bore, section['connection_length'], resolution, inlet='hole',
                            outlet='hole', wall_outgassing=q, axis='-z',
                            origin=(0.0, 0.0, floor), tag='connection', gas=gas)

    side = section['cube_side']
    center = np.array([0.0, 0.0, floor - section['connection_length'] - side / 2.0])
    ion_area = np.pi * (section['ion_pump_bore'] / 2.0) ** 2
    ion_sticking = section['ion_pump_speed'] * 1e-3 / (gas.mean_speed / 4.0 * ion_area)
    cube_ports = [
        PortSpec('+z', bore, tag='connection', kind='hole'),
        PortSpec('-x', bore, tag='housing', kind='hole'),
        PortSpec('+x', bore, tag='housing', kind='hole'),
        PortSpec('-y', section['ion_pump_bore'], tag='ion_pump', sticking=min(1.0, ion_sticking)),
        PortSpec('+y', section['gauge_bore'], tag='nipple', kind='hole'),
        PortSpec('-z', bore, tag='valve', kind='blank'),
    ]
    cube = build_box((side, side, side), cube_ports, resolution, wall_outgassing=q,
                     center=center, tag='cube', gas=gas)

    housing_length = section['housing_length']
    start = housing_length - pump['cap_gap'] - pump['cartridge_length']
    if start <= 0.0 or pump['cartridge_diameter'] >= bore:
        msg = f'the pump cartridge does not fit into a {bore} x {housing_length} m housing'
        raise InvalidGeometryError(msg)

    getter_sticking = None
    parts = [chamber, roi, holder, connection, cube]
    for axis in ('+x', '-x'):
        direction = np.eye(3)[0] * (1.0 if axis == '+x' else -1.0)
        flange = center + direction * side / 2.0
        parts.append(build_tube(bore, housing_length, resolution, inlet='hole', outlet='blank',
                                outlet_tag='housing', wall_outgassing=q, axis=axis,
                                origin=flange, tag='housing', gas=gas))
        cartridge = pump_cartridge(origin=flange + direction * start, axis=axis,
                                   presets=presets, gas=gas)
        # A convex body in open space pumps its impingement rate times sticking.
        getter_sticking = _convex_sticking(cartridge, pump['nominal_speed'], gas)
        parts.append(cartridge.with_group_properties('pump', sticking=getter_sticking))

    parts.append(build_tube(section['gauge_bore'], section['gauge_nipple_length'], resolution,
                            inlet='hole', outlet='blank', outlet_tag='gauge', wall_outgassing=q,
                            axis='+y', origin=center + np.array([0.0, side / 2.0, 0.0]),
                            tag='nipple', gas=gas))

    LOGGER.debug('Full system: holder gap %.4f m, getter sticking %.4f, ion pump sticking %.4f',
                 holder_gap, getter_sticking, ion_sticking)
    return Scene.merge(*parts)
