"""The module contains the tests for the counter-based random streams."""

import unittest

import numpy as np

from xhv.core.streams import CounterStream


class TestCounterStream(unittest.TestCase):
    """The class implements the tests for the counter-based random streams."""

    def test_draws_are_pure_functions_of_their_keys(self):
        """The stream should return the same number for the same seed,
        particle and counter, whatever was drawn before.
        """
        first = CounterStream(42)
        second = CounterStream(42)
        particles = np.arange(100)
        counters = np.arange(100) * 7

        second.uniform(np.arange(1000), np.zeros(1000))
        np.testing.assert_array_equal(first.uniform(particles, counters),
                                      second.uniform(particles, counters))

    def test_draw_matches_consecutive_counters(self):
        """The stream should return in ``draw`` the numbers of consecutive
        counters.
        """
        stream = CounterStream(3)
        block = stream.draw([3, 5], [0, 10], 4)

        self.assertEqual((2, 4), block.shape)
        np.testing.assert_array_equal(block[1], stream.uniform([5, 5, 5, 5], [10, 11, 12, 13]))
        np.testing.assert_array_equal(block[0], stream.uniform([3, 3, 3, 3], [0, 1, 2, 3]))

    def test_streams_differ(self):
        """The stream should give different numbers to different seeds and
        different particles.
        """
        counters = np.zeros(1000)
        a = CounterStream(0).uniform(np.arange(1000), counters)
        b = CounterStream(1).uniform(np.arange(1000), counters)
        c = CounterStream(0).uniform(np.arange(1000, 2000), counters)

        self.assertLess(np.mean(a == b), 0.01)
        self.assertLess(np.mean(a == c), 0.01)

    def test_uniform_distribution(self):
        """The stream should produce numbers in [0, 1) with the moments of
        the uniform distribution.
        """
        u = CounterStream(7).draw(np.arange(20_000), np.zeros(20_000), 5).ravel()

        self.assertGreaterEqual(u.min(), 0.0)
        self.assertLess(u.max(), 1.0)
        self.assertAlmostEqual(0.5, u.mean(), delta=0.005)
        self.assertAlmostEqual(1.0 / 12.0, u.var(), delta=0.002)

    def test_large_seeds(self):
        """The stream should accept seeds beyond 64 bits and negative seeds."""
        for seed in (2 ** 70 + 5, -1):
            u = CounterStream(seed).uniform([0, 1], [0, 0])
            self.assertTrue(np.all((u >= 0.0) & (u < 1.0)))
