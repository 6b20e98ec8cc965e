"""The module contains the tests for the scene model."""

import unittest

import numpy as np

from xhv.geom.scene import HYDROGEN, Facet, Gas, InvalidGeometryError, Scene, \
    SceneValidationError

TRIANGLE = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
SHIFTED = [[0.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]


class TestGas(unittest.TestCase):
    """The class implements the tests for the gas species."""

    def test_hydrogen(self):
        """The gas should give the mean speed of hydrogen at room temperature."""
        self.assertAlmostEqual(1754.2, HYDROGEN.mean_speed, delta=0.5)
        self.assertAlmostEqual(293.0, HYDROGEN.temperature)

    def test_pressure_factor(self):
        """The pressure factor should turn the impingement rate P/sqrt(2 pi m k T)
        back into the pressure.
        """
        gas = Gas.from_amu(28.0, 300.0)
        rate = 1.0 / gas.pressure_factor
        self.assertAlmostEqual(1.0, rate * gas.pressure_factor)
        self.assertGreater(HYDROGEN.mean_speed, gas.mean_speed)


class TestScene(unittest.TestCase):
    """The class implements the tests for the scene model."""

    def setUp(self):
        """Initialize a scene of two facets."""
        self._scene = Scene([TRIANGLE, SHIFTED], [0.0, 1.0], [1e-9, 0.0], ['wall', 'pump'])

    def _check_invalid(self, index, **changes):
        facet = {'vertices': [TRIANGLE, SHIFTED], 'sticking': [0.0, 1.0],
                 'outgassing': [1e-9, 0.0], 'tags': ['wall', 'pump'], 'virtual': None}
        facet.update(changes)
        with self.assertRaises(SceneValidationError) as context:
            Scene(**facet)

        self.assertEqual(index, context.exception.index)

    def test_geometry(self):
        """The scene should compute areas, normals and the facet basis."""
        np.testing.assert_allclose([0.5, 0.5], self._scene.areas)
        np.testing.assert_allclose([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], self._scene.normals)
        dots = np.einsum('ij,ij->i', self._scene.tangents, self._scene.normals)
        np.testing.assert_allclose(dots, 0.0, atol=1e-15)
        np.testing.assert_allclose(np.linalg.norm(self._scene.bitangents, axis=1), 1.0)

    def test_validation(self):
        """The scene should refuse facets that violate an invariant."""
        self._check_invalid(1, vertices=[TRIANGLE, [[0, 0, 0], [1, 1, 1], [2, 2, 2]]])
        self._check_invalid(0, sticking=[1.5, 1.0])
        self._check_invalid(1, sticking=[0.0, -0.1])
        self._check_invalid(0, outgassing=[-1.0, 0.0])
        self._check_invalid(1, tags=['wall', ''])
        self._check_invalid(0, tags=['a wall', 'pump'])
        self._check_invalid(1, virtual=[False, True])
        self._check_invalid(0, vertices=[[[np.nan, 0, 0], [1, 0, 0], [0, 1, 0]], SHIFTED])

        with self.assertRaises(SceneValidationError):
            Scene([TRIANGLE, SHIFTED], 0.0, 0.0, ['wall'])

        with self.assertRaises(SceneValidationError) as context:
            Scene([TRIANGLE, SHIFTED], 0.0, 0.0, 'roi', virtual=[True, False])

        self.assertIn('mixes virtual and real', str(context.exception))

    def test_immutable(self):
        """The scene arrays should be read-only."""
        with self.assertRaises(ValueError):
            self._scene.sticking[0] = 0.5

        with self.assertRaises(ValueError):
            self._scene.vertices[0, 0, 0] = 2.0

    def test_groups(self):
        """The scene should have the possibility to look up its facet groups."""
        np.testing.assert_array_equal([1], self._scene.group('pump'))
        self.assertEqual(('wall', 'pump'), self._scene.group_names)
        with self.assertRaises(SceneValidationError) as context:
            self._scene.group('roi')

        self.assertIn('wall, pump', str(context.exception))

    def test_areas_and_gas_load(self):
        """The scene should sum the real areas and the gas load."""
        plane = Scene([TRIANGLE], 0.0, 0.0, 'roi', virtual=True)
        merged = Scene.merge(self._scene, plane)

        self.assertAlmostEqual(1.0, merged.surface_area())
        self.assertAlmostEqual(0.5, merged.surface_area('roi'))
        self.assertAlmostEqual(0.5e-9, merged.total_outgassing())

    def test_with_group_properties(self):
        """The scene should return a modified copy and stay unchanged."""
        changed = self._scene.with_group_properties('pump', sticking=0.25, outgassing=2e-9)

        np.testing.assert_array_equal([0.0, 0.25], changed.sticking)
        np.testing.assert_array_equal([1e-9, 2e-9], changed.outgassing)
        np.testing.assert_array_equal([0.0, 1.0], self._scene.sticking)

    def test_merge_requires_the_same_gas(self):
        """The scenes should merge only when they describe the same gas."""
        other = self._scene.with_gas(Gas.from_amu(4.0))
        with self.assertRaises(InvalidGeometryError):
            Scene.merge(self._scene, other)

        with self.assertRaises(InvalidGeometryError):
            Scene.merge()

    def test_facets(self):
        """The scene should have the possibility to round-trip through Facet
        objects.
        """
        facets = self._scene.facets
        self.assertEqual(2, len(facets))
        self.assertAlmostEqual(0.5, facets[0].area)
        np.testing.assert_allclose([0.0, 0.0, -1.0], facets[1].normal)

        rebuilt = Scene.from_facets(facets)
        np.testing.assert_array_equal(self._scene.vertices, rebuilt.vertices)
        self.assertEqual(self._scene.tags, rebuilt.tags)

    def test_single_facet(self):
        """The facet should default to a non-sticking wall."""
        facet = Facet(tuple(map(tuple, TRIANGLE)))
        self.assertEqual('wall', facet.tag)
        self.assertFalse(facet.virtual)

    def test_cast(self):
        """The scene should cast rays against its facets."""
        t, facets = self._scene.cast([[0.2, 0.2, 0.5]], [[0.0, 0.0, -1.0]])
        np.testing.assert_allclose([0.5], t)
        np.testing.assert_array_equal([0], facets)
