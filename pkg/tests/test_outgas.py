"""The module contains the tests for the outgassing model."""

import math
import unittest

from xhv.constants import DAY, YEAR
from xhv.exceptions import ValidationError
from xhv.outgas import MAX_TERMS, BakeSchedule, MaterialSlab, bake_duration_for_target, \
    decay_constant, diffusion_coefficient, estimate_q_rt, outgassing_rate, plan_bake, \
    rt_ht_ratio, target_ht_pressure

RT = 298.0
HT = 673.0


class TestOutgassing(unittest.TestCase):
    """The class implements the tests for the diffusion-limited outgassing
    model.
    """

    def setUp(self):
        """Initialize the stainless-steel slab of the presets."""
        self._slab = MaterialSlab.from_presets()

    def test_diffusion(self):
        """The diffusion coefficient and the time constant should follow the
        Arrhenius law of hydrogen in stainless steel.
        """
        self.assertAlmostEqual(1.59e-12, diffusion_coefficient(self._slab, RT), delta=0.01e-12)
        self.assertAlmostEqual(3.0e-7, diffusion_coefficient(self._slab, HT), delta=0.02e-7)
        self.assertAlmostEqual(25.2, decay_constant(self._slab, HT) / DAY, delta=0.1)
        self.assertGreater(decay_constant(self._slab, RT), 10 * YEAR)

    def test_single_mode(self):
        """The first term should decay by e over one time constant."""
        tau = decay_constant(self._slab, HT)
        start = outgassing_rate(self._slab, HT, 0.0, n_terms=1)
        later = outgassing_rate(self._slab, HT, tau, n_terms=1)

        self.assertAlmostEqual(math.exp(-1.0), later.rate / start.rate, places=12)
        self.assertEqual(1, later.terms)

    def test_short_times(self):
        """The rate should follow c0 sqrt(D / (pi t)) at short times."""
        tau = decay_constant(self._slab, HT)
        d = diffusion_coefficient(self._slab, HT)
        t = 1e-4 * tau
        rate = outgassing_rate(self._slab, HT, t, n_terms=2000).rate

        expected = self._slab.c0 * math.sqrt(d / (math.pi * t))
        self.assertAlmostEqual(1.0, rate / expected, delta=1e-6)

        earlier = outgassing_rate(self._slab, HT, 1e-5 * tau, n_terms=5000).rate
        slope = math.log(rate / earlier) / math.log(10.0)
        self.assertAlmostEqual(-0.5, slope, delta=1e-5)

    def test_long_times(self):
        """The rate should reduce to its first term at long times."""
        tau = decay_constant(self._slab, HT)
        d = diffusion_coefficient(self._slab, HT)
        estimate = outgassing_rate(self._slab, HT, 3.0 * tau)

        first = 4.0 * d * self._slab.c0 / self._slab.thickness * math.exp(-3.0)
        self.assertAlmostEqual(1.0, estimate.rate / first, delta=1e-9)
        self.assertLess(estimate.terms, 3)
        self.assertLess(estimate.remainder, 1e-9 * estimate.rate)

    def test_initial_rate(self):
        """The series should report that it does not converge at t = 0."""
        estimate = outgassing_rate(self._slab, HT, 0.0)
        self.assertEqual(MAX_TERMS, estimate.terms)
        self.assertEqual(math.inf, estimate.remainder)

    def test_invalid_inputs(self):
        """The model should refuse nonphysical inputs."""
        with self.assertRaises(ValidationError):
            outgassing_rate(self._slab, HT, -1.0)

        with self.assertRaises(ValidationError):
            outgassing_rate(self._slab, HT, 1.0, n_terms=0)

        with self.assertRaises(ValidationError):
            diffusion_coefficient(self._slab, 0.0)

        with self.assertRaises(ValidationError):
            MaterialSlab(2.54, -0.1, 4.7e-3, 0.56)

        with self.assertRaises(ValidationError):
            BakeSchedule((), 100.0, 1000.0)

        with self.assertRaises(ValidationError):
            BakeSchedule(((HT, 0.0),), 100.0, 1000.0)


class TestHeatTreatment(unittest.TestCase):
    """The class implements the tests for the heat-treatment arithmetic."""

    def setUp(self):
        """Initialize the stainless-steel slab of the presets."""
        self._slab = MaterialSlab.from_presets()

    def test_rt_ht_ratio(self):
        """The ratio should be D(T_RT)/D(T_HT)."""
        ratio = rt_ht_ratio(RT, HT, self._slab)
        self.assertAlmostEqual(5.2832e-6, ratio, delta=0.001e-6)
        self.assertAlmostEqual(
            diffusion_coefficient(self._slab, RT) / diffusion_coefficient(self._slab, HT),
            ratio, delta=1e-15)

    def test_estimates_of_the_parts(self):
        """The estimate should reproduce the room-temperature rates of the
        heat-treated chamber and cube.
        """
        chamber = estimate_q_rt(1.1e-8, 1700.0, 268.0, RT, HT, slab=self._slab)
        cube = estimate_q_rt(4.8e-8, 2470.0, 162.5, RT, HT, slab=self._slab)

        self.assertAlmostEqual(1.0, chamber / 4.5808e-15, delta=0.005)
        self.assertAlmostEqual(1.0, cube / 8.3419e-15, delta=0.005)

    def test_target_round_trip(self):
        """The target pressure should give back the target rate."""
        pressure = target_ht_pressure(1e-15, 1700.0, 268.0, RT, HT, self._slab)
        q = estimate_q_rt(pressure, 1700.0, 268.0, RT, HT, oxide_factor=1.0, slab=self._slab)
        self.assertAlmostEqual(1.0, q / 1e-15, places=12)

    def test_plan_is_continuous(self):
        """The plan should carry the hydrogen profile across segments, so the
        rate jumps by the ratio of the diffusion coefficients.
        """
        schedule = BakeSchedule(((HT, 10 * DAY), (RT, DAY)), 268.0, 1700.0)
        rows = list(plan_bake(self._slab, schedule, points_per_segment=10))

        self.assertEqual(20, len(rows))
        self.assertAlmostEqual(11 * DAY, rows[-1][0])
        times = [row[0] for row in rows]
        self.assertEqual(sorted(times), times)
        jump = rows[10][2] / rows[9][2]
        self.assertAlmostEqual(1.0, jump / rt_ht_ratio(RT, HT, self._slab), delta=1e-6)
        for _, _, q, pressure in rows:
            self.assertAlmostEqual(1.0, pressure / (q * 1700.0 / 268.0), places=12)

    def test_plan_at_constant_temperature(self):
        """The plan of a single segment should follow the outgassing rate."""
        schedule = BakeSchedule(((HT, 5 * DAY),), 100.0, 1000.0)
        time, temperature, q, _ = list(plan_bake(self._slab, schedule, 5))[2]

        self.assertEqual(HT, temperature)
        self.assertAlmostEqual(3 * DAY, time)
        self.assertAlmostEqual(1.0, q / outgassing_rate(self._slab, HT, time).rate, places=9)

    def test_bake_duration(self):
        """The bake duration should bring the room-temperature rate to the
        target.
        """
        duration = bake_duration_for_target(self._slab, HT, 1e-14, RT)
        schedule = BakeSchedule(((HT, duration), (RT, 1.0)), 100.0, 1000.0)
        q = list(plan_bake(self._slab, schedule, 1))[-1][2]

        self.assertAlmostEqual(1.0, q / 1e-14, delta=1e-4)
        self.assertGreater(duration, decay_constant(self._slab, HT))

    def test_bake_duration_without_hydrogen(self):
        """The bake duration should be zero for a slab without hydrogen."""
        slab = MaterialSlab.from_presets(c0=0.0)
        self.assertEqual(0.0, bake_duration_for_target(slab, HT, 1e-14, RT))
