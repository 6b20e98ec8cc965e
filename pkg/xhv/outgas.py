"""The module contains the diffusion-limited outgassing model of hydrogen in
stainless steel and the heat-treatment planning arithmetic.

The module works in the units of vacuum practice: cm, cm^2/s, mbar l, l/s,
mbar and K.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from xhv.config import load_presets
from xhv.constants import BOLTZMANN_EV
from xhv.exceptions import ComputationError, ValidationError

LOGGER = logging.getLogger(__name__)

RELATIVE_CUTOFF = 1e-6
MAX_TERMS = 10_000


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0.0:
            msg = f'{name} must be positive, got {value}'
            raise ValidationError(msg)


@dataclass(frozen=True)
class MaterialSlab:
    """The class represents a wall slab outgassing from both faces.

    The thickness is in cm, the initial hydrogen concentration in
    mbar l cm^-3, the diffusion prefactor in cm^2/s and the activation
    energy in eV.
    """

    thickness: float
    c0: float
    d0: float
    activation: float

    def __post_init__(self):
        """Validate the slab."""
        _require_positive(thickness=self.thickness, d0=self.d0, activation=self.activation)
        if not self.c0 >= 0.0:
            msg = f'c0 must not be negative, got {self.c0}'
            raise ValidationError(msg)

    @classmethod
    def from_presets(cls, presets=None, **overrides):
        """Create a slab from the 'material' presets section."""
        section = (presets or load_presets())['material']
        values = {
            'thickness': section['thickness_cm'],
            'c0': section['c0'],
            'd0': section['d0'],
            'activation': section['activation_ev'],
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class BakeSchedule:
    """The class represents a temperature history of consecutive
    (temperature K, duration s) segments, seen by a chamber of ``area`` cm^2
    pumped at ``speed`` l/s.
    """

    segments: tuple
    speed: float
    area: float

    def __post_init__(self):
        """Validate the schedule."""
        if not self.segments:
            msg = 'the bake schedule has no segments'
            raise ValidationError(msg)

        for temperature, duration in self.segments:
            _require_positive(temperature=temperature, duration=duration)

        _require_positive(speed=self.speed, area=self.area)


@dataclass(frozen=True)
class OutgassingEstimate:
    """The class represents a truncated series evaluation.

    The ``remainder`` bounds the neglected tail in the units of ``rate``; it
    is infinite when the series does not converge (t = 0).
    """

    rate: float
    terms: int
    remainder: float

    def __float__(self):
        """Return the rate."""
        return self.rate


def diffusion_coefficient(slab, temperature):
    """Return the Arrhenius diffusion coefficient at ``temperature``, cm^2/s."""
    _require_positive(temperature=temperature)
    return slab.d0 * math.exp(-slab.activation / (BOLTZMANN_EV * temperature))


def decay_constant(slab, temperature):
    """Return the time constant L^2/(pi^2 D) of the slowest mode, s."""
    return slab.thickness ** 2 / (math.pi ** 2 * diffusion_coefficient(slab, temperature))


def _series(exponent, n_terms=None):
    """Sum exp(-(2n+1)^2 exponent) over n.

    Returns ``(sum, terms, remainder)``. With ``n_terms`` None the sum stops
    once a term falls below RELATIVE_CUTOFF of the partial sum, or after
    MAX_TERMS terms.
    """
    limit = MAX_TERMS if n_terms is None else n_terms
    total = 0.0
    n = 0
    for n in range(limit):
        term = math.exp(-((2 * n + 1) ** 2) * exponent)
        total += term
        if n_terms is None and term < RELATIVE_CUTOFF * total:
            break

    terms = n + 1
    if exponent <= 0.0:
        return total, terms, math.inf

    following = math.exp(-((2 * terms + 1) ** 2) * exponent)
    ratio = math.exp(-8.0 * exponent * (terms + 1))
    return total, terms, following / (1.0 - ratio)


def _rate(slab, diffusion, dose, n_terms=None):
    """Evaluate the series for the current diffusion coefficient and the
    accumulated dose (integral of D over time, cm^2).
    """
    if dose < 0.0:
        msg = f'time must not be negative, got dose {dose}'
        raise ValidationError(msg)

    if n_terms is not None and n_terms < 1:
        msg = f'n_terms must be at least 1, got {n_terms}'
        raise ValidationError(msg)

    prefactor = 4.0 * diffusion * slab.c0 / slab.thickness
    total, terms, remainder = _series(math.pi ** 2 * dose / slab.thickness ** 2, n_terms)
    if n_terms is None and terms == MAX_TERMS:
        LOGGER.debug('Outgassing series truncated at %d terms', MAX_TERMS)

    return OutgassingEstimate(prefactor * total, terms, prefactor * remainder)


def outgassing_rate(slab, temperature, time, n_terms=None):
    """Return the specific outgassing rate after ``time`` s at the constant
    ``temperature``, mbar l s^-1 cm^-2.
    """
    diffusion = diffusion_coefficient(slab, temperature)
    return _rate(slab, diffusion, diffusion * time, n_terms)


def rt_ht_ratio(room_temperature, heat_treatment_temperature, slab=None):
    """Return D(T_RT)/D(T_HT), the ratio of the outgassing rates at equal
    concentration profiles.
    """
    slab = slab or MaterialSlab.from_presets()
    _require_positive(room_temperature=room_temperature,
                      heat_treatment_temperature=heat_treatment_temperature)
    return math.exp(slab.activation / BOLTZMANN_EV *
                    (1.0 / heat_treatment_temperature - 1.0 / room_temperature))


def target_ht_pressure(q_rt_target, area, speed, room_temperature, heat_treatment_temperature,
                       slab=None):
    """Return the pressure to reach at the end of the heat treatment so that
    the room-temperature rate is ``q_rt_target``, mbar.
    """
    _require_positive(q_rt_target=q_rt_target, area=area, speed=speed)
    return q_rt_target * area / speed / rt_ht_ratio(room_temperature,
                                                      heat_treatment_temperature, slab)


def estimate_q_rt(pressure_ht, area, speed, room_temperature, heat_treatment_temperature,
                  oxide_factor=2.0, slab=None):
    """Return the room-temperature rate implied by the pressure measured at
    the end of the heat treatment, mbar l s^-1 cm^-2.

    The ``oxide_factor`` accounts for the extra reduction from the oxide
    layer grown during the treatment.
    """
    _require_positive(pressure_ht=pressure_ht, area=area, speed=speed,
                      oxide_factor=oxide_factor)
    ratio = rt_ht_ratio(room_temperature, heat_treatment_temperature, slab)
    return pressure_ht * speed / area * ratio / oxide_factor


def plan_bake(slab, schedule, points_per_segment=10):
    """Follow the outgassing rate through the bake ``schedule``.

    Yields rows ``(time s, temperature K, q mbar l s^-1 cm^-2, P mbar)``
    with P = q A / S, ``points_per_segment`` per segment.
    """
    if points_per_segment < 1:
        msg = f'points_per_segment must be at least 1, got {points_per_segment}'
        raise ValidationError(msg)

    elapsed = 0.0
    dose = 0.0
    for temperature, duration in schedule.segments:
        diffusion = diffusion_coefficient(slab, temperature)
        for step in np.linspace(duration / points_per_segment, duration, points_per_segment):
            q = _rate(slab, diffusion, dose + diffusion * step).rate
            yield elapsed + step, temperature, q, q * schedule.area / schedule.speed

        elapsed += duration
        dose += diffusion * duration


def bake_duration_for_target(slab, heat_treatment_temperature, q_rt_target, room_temperature):
    """Return the time at ``heat_treatment_temperature`` after which the
    room-temperature rate drops to ``q_rt_target``, s.
    """
    _require_positive(q_rt_target=q_rt_target)
    if slab.c0 == 0.0:
        return 0.0

    d_rt = diffusion_coefficient(slab, room_temperature)
    d_ht = diffusion_coefficient(slab, heat_treatment_temperature)

    def excess(log_time):
        dose = d_ht * math.exp(log_time)
        return math.log(_rate(slab, d_rt, dose).rate) - math.log(q_rt_target)

    tau = decay_constant(slab, heat_treatment_temperature)
    lo, hi = math.log(tau) - 10.0, math.log(tau)
    for _ in range(200):
        if excess(hi) < 0.0:
            break

        lo, hi = hi, hi + 1.0
    else:
        msg = f'cannot reach {q_rt_target} mbar l s^-1 cm^-2 in a finite bake'
        raise ComputationError(msg)

    for _ in range(200):
        if excess(lo) > 0.0:
            break

        lo -= 1.0
    else:
        return 0.0

    return math.exp(optimize.brentq(excess, lo, hi, xtol=1e-12))
