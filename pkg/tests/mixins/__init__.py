"""Test mixins of the particle tracer."""

from tests.mixins.test_emission_mixin import TestEmissionMixin
from tests.mixins.test_surface_mixin import TestSurfaceMixin
from tests.mixins.test_tally_mixin import TestTallyMixin

__all__ = (
    'TestEmissionMixin',
    'TestSurfaceMixin',
    'TestTallyMixin',
)
