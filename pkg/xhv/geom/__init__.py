"""The package contains the scene model of the molecular-flow simulator, its
parametric builders, the scene file format and the shipped assemblies.
"""

from xhv.geom.builders import PortSpec, build_box, build_cylinder_body, build_open_space, \
    build_sampling_plane, build_tube
from xhv.geom.io import SceneParseError, format_scene, load_scene, parse_scene, save_scene
from xhv.geom.scene import HYDROGEN, Facet, Gas, InvalidGeometryError, Scene, \
    SceneValidationError

__all__ = (
    'HYDROGEN',
    'Facet',
    'Gas',
    'InvalidGeometryError',
    'PortSpec',
    'Scene',
    'SceneParseError',
    'SceneValidationError',
    'build_box',
    'build_cylinder_body',
    'build_open_space',
    'build_sampling_plane',
    'build_tube',
    'format_scene',
    'load_scene',
    'parse_scene',
    'save_scene',
)
