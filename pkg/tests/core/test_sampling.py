"""The module contains the tests for the diffuse emission sampling."""

import unittest

import numpy as np
from scipy import stats

from xhv.core.sampling import cosine_directions, sample_cosine_direction, to_world, \
    triangle_points


class TestSampling(unittest.TestCase):
    """The class implements the tests for the diffuse emission sampling."""

    def setUp(self):
        """Draw a large sample of cosine-law directions."""
        self._directions = sample_cosine_direction(np.random.default_rng(0), 1_000_000)

    def test_directions_are_unit_vectors_above_the_facet(self):
        """The directions should be unit vectors pointing away from the facet."""
        np.testing.assert_allclose(np.linalg.norm(self._directions, axis=1), 1.0, rtol=1e-12)
        self.assertTrue(np.all(self._directions[:, 2] > 0.0))

    def test_mean_cosine(self):
        """The mean cosine of the polar angle should be 2/3."""
        self.assertAlmostEqual(2.0 / 3.0, self._directions[:, 2].mean(), delta=0.002)

    def test_fraction_within_sixty_degrees(self):
        """Three quarters of the directions should lie within 60 degrees of
        the normal.
        """
        self.assertAlmostEqual(0.75, np.mean(self._directions[:, 2] > 0.5), delta=0.002)

    def test_uniform_azimuth(self):
        """The azimuthal angle should be uniform."""
        phi = np.arctan2(self._directions[:100_000, 1], self._directions[:100_000, 0])
        result = stats.kstest((phi + np.pi) / (2.0 * np.pi), 'uniform')
        self.assertGreater(result.pvalue, 0.01)

    def test_single_direction(self):
        """The function should return a single vector when no size is given."""
        direction = sample_cosine_direction(np.random.default_rng(1))

        self.assertEqual((3,), direction.shape)
        self.assertAlmostEqual(1.0, float(np.linalg.norm(direction)))

    def test_zero_draw_is_the_normal(self):
        """The mapping should send a zero polar draw along the normal."""
        np.testing.assert_allclose([[0.0, 0.0, 1.0]], cosine_directions([0.0], [0.3]),
                                   atol=1e-15)

    def test_to_world(self):
        """The rotation should map the local axes onto the facet basis."""
        tangent = np.array([[0.0, 1.0, 0.0]])
        bitangent = np.array([[0.0, 0.0, 1.0]])
        normal = np.array([[1.0, 0.0, 0.0]])

        local = np.array([[0.0, 0.0, 1.0]])
        np.testing.assert_array_equal(normal, to_world(local, tangent, bitangent, normal))
        local = np.array([[1.0, 0.0, 0.0]])
        np.testing.assert_array_equal(tangent, to_world(local, tangent, bitangent, normal))

    def test_triangle_points(self):
        """The points should cover the triangle uniformly."""
        rng = np.random.default_rng(2)
        n = 200_000
        origin = np.broadcast_to([1.0, 2.0, 0.0], (n, 3))
        edge1 = np.broadcast_to([2.0, 0.0, 0.0], (n, 3))
        edge2 = np.broadcast_to([0.0, 1.0, 0.0], (n, 3))
        points = triangle_points(origin, edge1, edge2, rng.random(n), rng.random(n))

        a = (points[:, 0] - 1.0) / 2.0
        b = points[:, 1] - 2.0
        self.assertTrue(np.all((a >= 0.0) & (b >= 0.0) & (a + b <= 1.0 + 1e-12)))
        np.testing.assert_allclose(points.mean(axis=0), [1.0 + 2.0 / 3.0, 2.0 + 1.0 / 3.0, 0.0],
                                   atol=0.01)
