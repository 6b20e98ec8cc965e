"""The package contains mixins composing the particle tracer."""

from xhv.mixins.emission import EmissionMixin
from xhv.mixins.surface import SurfaceMixin
from xhv.mixins.tally import Tally, TallyMixin

__all__ = (
    'EmissionMixin',
    'SurfaceMixin',
    'Tally',
    'TallyMixin',
)
