"""The module contains the reader and the writer of the scene text format.

The format is line oriented. Everything after '#' is a comment. The header
record ``gas <mass amu> <temperature K>`` comes first, then one record per
facet::

    facet x1 y1 z1 x2 y2 z2 x3 y3 z3 <sticking> <outgassing> <tag> [virtual]

Coordinates are in metres and the outgassing rate is in mbar l s^-1 cm^-2.
"""

import logging
from pathlib import Path

import numpy as np

from xhv.constants import outgassing_from_si, outgassing_to_si
from xhv.exceptions import ValidationError
from xhv.geom.scene import Gas, Scene

LOGGER = logging.getLogger(__name__)

_FACET_FIELDS = 12


class SceneParseError(ValidationError):
    """Raised when a scene file cannot be parsed."""

    def __init__(self, message, source='<scene>', line=None):
        """Initialize a SceneParseError object."""
        where = f'{source}:{line}' if line is not None else str(source)
        super().__init__(f'{where}: {message}')
        self.line = line


def _float(token, source, line):
    try:
        return float(token)
    except ValueError:
        msg = f'{token!r} is not a number'
        raise SceneParseError(msg, source, line) from None


def _boundary_outgassing(value):
    """Return the shortest decimal text of ``value`` in boundary units that
    converts back to ``value`` exactly.
    """
    text = repr(outgassing_from_si(value))
    candidate = float(text)
    for _ in range(4):
        converted = outgassing_to_si(candidate)
        if converted == value:
            break

        candidate = np.nextafter(candidate, np.inf if converted < value else -np.inf)
        text = repr(float(candidate))

    return text


def parse_scene(text, source='<scene>'):
    """Parse the scene text and return a Scene."""
    gas = None
    vertices, sticking, outgassing, tags, virtual = [], [], [], [], []
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split('#', 1)[0].split()
        if not tokens:
            continue

        keyword, fields = tokens[0], tokens[1:]
        if keyword == 'gas':
            if gas is not None:
                msg = 'duplicate gas record'
                raise SceneParseError(msg, source, number)

            if len(fields) != 2:  # noqa: PLR2004
                msg = 'gas record expects <mass amu> <temperature K>'
                raise SceneParseError(msg, source, number)

            mass, temperature = (_float(f, source, number) for f in fields)
            if mass <= 0.0 or temperature <= 0.0:
                msg = 'gas mass and temperature must be positive'
                raise SceneParseError(msg, source, number)

            gas = Gas.from_amu(mass, temperature)
        elif keyword == 'facet':
            if gas is None:
                msg = 'facet record before the gas record'
                raise SceneParseError(msg, source, number)

            flag = fields[_FACET_FIELDS:]
            if len(fields) < _FACET_FIELDS or flag not in ([], ['virtual']):
                msg = ('facet record expects 9 coordinates, sticking, outgassing, tag '
                       'and an optional "virtual" flag')
                raise SceneParseError(msg, source, number)

            numbers = [_float(f, source, number) for f in fields[:11]]
            vertices.append(np.reshape(numbers[:9], (3, 3)))
            sticking.append(numbers[9])
            outgassing.append(outgassing_to_si(numbers[10]))
            tags.append(fields[11])
            virtual.append(bool(flag))
        else:
            msg = f'unknown record {keyword!r}'
            raise SceneParseError(msg, source, number)

    if gas is None:
        msg = 'missing gas record'
        raise SceneParseError(msg, source)

    if not vertices:
        msg = 'the scene has no facets'
        raise SceneParseError(msg, source)

    return Scene(vertices, sticking, outgassing, tags, virtual, gas=gas)


def load_scene(path):
    """Read the scene file at ``path``."""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        msg = f'cannot read scene file: {exc.strerror}'
        raise SceneParseError(msg, path) from exc

    scene = parse_scene(text, path)
    LOGGER.debug('Loaded %d facets from %s', len(scene), path)
    return scene


def format_scene(scene):
    """Return the text form of ``scene``."""
    lines = [
        '# xhv scene: coordinates in m, outgassing in mbar l s^-1 cm^-2',
        f'gas {scene.gas.mass_amu!r} {scene.gas.temperature!r}',
    ]
    for i in range(len(scene)):
        coordinates = ' '.join(repr(float(c)) for c in scene.vertices[i].ravel())
        record = (f'facet {coordinates} {float(scene.sticking[i])!r} '
                  f'{_boundary_outgassing(float(scene.outgassing[i]))} {scene.tags[i]}')
        lines.append(f'{record} virtual' if scene.virtual[i] else record)

    return '\n'.join(lines) + '\n'


def save_scene(scene, path):
    """Write ``scene`` to the file at ``path``."""
    Path(path).write_text(format_scene(scene), encoding='utf-8')
