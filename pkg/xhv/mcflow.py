"""The module contains the test-particle Monte Carlo kernel for free molecular
flow.

Particles leave outgassing facets (or enter through a measurement port), fly
in straight lines, stick with the facet sticking probability and are
otherwise re-emitted by the cosine law. Every particle owns a counter-based
random stream, and all the tallies are integer counts, so the results do not
depend on the number of workers.
"""

import concurrent.futures
import csv
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from xhv import mixins
from xhv.config import load_presets
from xhv.constants import BOLTZMANN, pa_to_mbar, speed_to_litres
from xhv.core.streams import CounterStream
from xhv.exceptions import ComputationError, ValidationError
from xhv.geom.assemblies import full_system
from xhv.geom.builders import build_open_space
from xhv.geom.scene import HYDROGEN
from xhv.mixins.surface import REFLECTION_DRAWS

LOGGER = logging.getLogger(__name__)

WORKERS_VARIABLE = 'XHV_WORKERS'

_WORKER = {}


class SimulationError(ComputationError):
    """Raised when a scene cannot be simulated."""


class NothingToEmitError(SimulationError):
    """Raised when no facet outgasses."""


class NoAbsorberError(SimulationError):
    """Raised when no facet can absorb, so every particle would reach the
    bounce cap.
    """


class InvalidMeasurementError(ValidationError):
    """Raised when the ports of a measurement are unusable."""


class DegenerateMeasurementError(ComputationError):
    """Raised when a measurement absorbs nothing."""


class CalibrationInfeasibleError(ComputationError):
    """Raised when the nominal speed is out of reach of the pump geometry."""

    def __init__(self, message, max_speed):
        """Initialize a CalibrationInfeasibleError object."""
        super().__init__(message)
        self.max_speed = max_speed


class TargetOutOfReachError(ComputationError):
    """Raised when no geometry within the bounds reaches the target ratio."""

    def __init__(self, message, reachable):
        """Initialize a TargetOutOfReachError object."""
        super().__init__(message)
        self.reachable = reachable


def default_workers():
    """Return the worker count given by the environment, 1 by default."""
    value = os.environ.get(WORKERS_VARIABLE, '1')
    try:
        return max(1, int(value))
    except ValueError:
        msg = f'{WORKERS_VARIABLE} must be an integer, got {value!r}'
        raise ValidationError(msg) from None


@dataclass(frozen=True)
class SimConfig:
    """The class represents the parameters of a simulation run.

    When ``gas`` is None the gas of the scene is used.
    """

    particles: int = 100_000
    seed: int = 0
    max_bounces: int = 100_000
    batch_size: int = 20_000
    workers: int = 1
    gas: object = None
    cap_warning_fraction: float = 0.001

    def __post_init__(self):
        """Validate the parameters."""
        for name in ('particles', 'max_bounces', 'batch_size', 'workers'):
            if getattr(self, name) < 1:
                msg = f'{name} must be at least 1, got {getattr(self, name)}'
                raise ValidationError(msg)

    @classmethod
    def from_presets(cls, presets=None, **overrides):
        """Create a configuration from the 'simulation' presets section."""
        section = (presets or load_presets())['simulation']
        values = {
            'particles': section['particles'],
            'seed': section['seed'],
            'max_bounces': section['max_bounces'],
            'batch_size': section['batch_size'],
            'cap_warning_fraction': section['cap_warning_fraction'],
            'workers': default_workers(),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class Tracer(
    mixins.EmissionMixin,
    mixins.SurfaceMixin,
    mixins.TallyMixin,
):
    """The class implements the particle tracer over a scene.

    With ``source`` set to a port group the particles are injected across
    the port with cosine-law flux instead of being emitted by outgassing
    facets. Virtual facets of the ``exits`` groups terminate the particles
    that cross them outwards.
    """

    def __init__(self, scene, config, source=None, exits=()):
        """Initialize a Tracer object."""
        self._scene = scene
        self._config = config
        self._stream = CounterStream(config.seed)
        self._bvh = scene.bvh
        self._normals = scene.normals
        self._tangents = scene.tangents
        self._bitangents = scene.bitangents
        self._sticking = scene.sticking
        self._virtual = scene.virtual

        # A port lying on another facet (an orifice) hands its particles over
        # to that facet at once.
        self._flush = np.full(len(scene), -1, dtype=np.int64)
        if source is None:
            weights = scene.outgassing * scene.areas
        else:
            entry = scene.group(source)
            weights = np.zeros(len(scene))
            weights[entry] = scene.areas[entry]
            partners = scene.opposite_facets()[entry]
            self._flush[entry] = np.where(np.isin(partners, entry), -1, partners)

        self._cumulative = self._emission_table(weights)
        self._exits = np.zeros(len(scene), dtype=bool)
        for tag in exits:
            self._exits[scene.group(tag)] = True

        self._exits &= scene.virtual

    @property
    def can_emit(self):
        """Return True when some facet has a positive emission weight."""
        return self._cumulative is not None

    @property
    def can_absorb(self):
        """Return True when some facet or exit port terminates particles."""
        return bool((self._sticking > 0.0).any() or self._exits.any())

    def trace_batch(self, first, count):
        """Trace the particles ``first`` to ``first + count - 1`` and return
        their tally.
        """
        tally = self._open_tally(count)
        particles = np.arange(first, first + count, dtype=np.int64)
        counters = np.zeros(count, dtype=np.uint64)
        position, direction, skip = self._emit(particles, counters)
        bounces = np.zeros(count, dtype=np.int64)
        max_bounces = self._config.max_bounces
        flush = self._flush[skip]

        alive = np.arange(count)
        while alive.size:
            t, facet = self._bvh.intersect(position[alive], direction[alive], skip[alive])
            if flush is not None:
                handed = flush >= 0
                t[handed], facet[handed] = 0.0, flush[handed]
                flush = None

            missed = facet < 0
            if missed.any():
                tally.leaked += int(missed.sum())
                alive, t, facet = alive[~missed], t[~missed], facet[~missed]

            point = position[alive] + t[:, None] * direction[alive]
            through = self._virtual[facet]

            crossing = alive[through]
            crossed = facet[through]
            forward, leaving = self._crossing(direction[crossing], crossed)
            self._count_crossings(tally, crossing, crossed, forward)
            self._count_absorbed(tally, crossed[leaving])
            passing = crossing[~leaving]
            position[passing] = point[through][~leaving]
            skip[passing] = crossed[~leaving]

            hitting = alive[~through]
            hit = facet[~through]
            hit_point = point[~through]
            back = self._backside(direction[hitting], hit)
            if back.any():
                tally.lost += int(back.sum())
                hitting, hit, hit_point = hitting[~back], hit[~back], hit_point[~back]

            self._count_hits(hitting, hit)
            stuck, reflected = self._reflect(particles[hitting], counters[hitting], hit)
            counters[hitting] += np.uint64(REFLECTION_DRAWS)
            self._count_absorbed(tally, hit[stuck])

            bouncing = hitting[~stuck]
            position[bouncing] = hit_point[~stuck]
            direction[bouncing] = reflected[~stuck]
            skip[bouncing] = hit[~stuck]
            bounces[bouncing] += 1
            capped = bounces[bouncing] >= max_bounces
            tally.capped += int(capped.sum())

            alive = np.sort(np.concatenate((passing, bouncing[~capped])))

        return self._close_tally(tally)


def _init_worker(scene, config, source, exits):
    _WORKER['tracer'] = Tracer(scene, config, source, exits)


def _run_batch(batch):
    return _WORKER['tracer'].trace_batch(*batch)


def _run(scene, config, source=None, exits=()):
    """Trace ``config.particles`` particles and return the merged tally."""
    tracer = Tracer(scene, config, source, exits)
    if not tracer.can_emit:
        msg = 'no facet emits particles (no outgassing and no injection port area)'
        raise NothingToEmitError(msg)

    if not tracer.can_absorb:
        msg = 'no facet absorbs; every particle would reach the bounce cap'
        raise NoAbsorberError(msg)

    n, size = config.particles, config.batch_size
    batches = [(first, min(size, n - first)) for first in range(0, n, size)]
    workers = min(config.workers, len(batches))
    LOGGER.debug('Tracing %d particles in %d batches on %d workers', n, len(batches), workers)

    if workers == 1:
        tallies = (tracer.trace_batch(*batch) for batch in batches)
        return _merge(scene, tallies)

    with concurrent.futures.ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker,
        initargs=(scene, config, source, tuple(exits)),
    ) as pool:
        return _merge(scene, pool.map(_run_batch, batches))


def _merge(scene, tallies):
    total = mixins.Tally(len(scene), len(scene.group_names))
    for tally in tallies:
        total.merge(tally)

    return total


def _total_error(totals, squares, n):
    """Return the standard error of a sum of ``n`` per-particle counts."""
    totals = np.asarray(totals, dtype=np.float64)
    if n < 2:  # noqa: PLR2004
        return np.full_like(totals, np.nan)

    variance = np.maximum(np.asarray(squares) - totals * totals / n, 0.0) / (n - 1)
    return np.sqrt(n * variance)


def _diagnose(tally, config, warnings):
    """Append the warnings about particles that did not end normally."""
    n = tally.injected
    if tally.capped > config.cap_warning_fraction * n:
        warnings.append(f'{tally.capped} of {n} particles reached the bounce cap '
                        f'of {config.max_bounces}')

    if tally.lost:
        warnings.append(f'{tally.lost} particles hit a facet from behind '
                        '(check the facet orientation)')

    if tally.leaked:
        warnings.append(f'{tally.leaked} particles escaped the scene (check it is watertight)')

    for warning in warnings:
        LOGGER.warning(warning)


class SimResult:
    """The class represents the outcome of a steady-state simulation.

    Each particle carries the weight G/n where G is the total generation rate
    in molecules per second.
    """

    def __init__(self, scene, config, tally):
        """Initialize a SimResult object."""
        self.scene = scene
        self.config = config
        self.tally = tally
        self.gas = config.gas or scene.gas
        self.particles = tally.injected
        self.generation_rate = scene.total_outgassing() / (BOLTZMANN * self.gas.temperature)
        self.weight = self.generation_rate / self.particles
        self.warnings = []
        _diagnose(tally, config, self.warnings)

    #
    # Internal methods.
    #

    def _counts(self):
        """Return per-facet event counts: impingements on real facets, mean
        one-sided crossings on virtual ones.
        """
        scale = np.where(self.scene.virtual, 0.5, 1.0)
        counts = self.tally.hits * scale
        errors = _total_error(self.tally.hits, self.tally.hit_squares, self.particles) * scale
        return counts, errors

    def _group(self, tag):
        indices = self.scene.group(tag)
        position = self.scene.group_names.index(tag)
        scale = 0.5 if self.scene.virtual[indices[0]] else 1.0
        count = self.tally.group_counts[position] * scale
        error = _total_error(self.tally.group_counts[position],
                             self.tally.group_squares[position], self.particles) * scale
        return indices, count, float(error)

    #
    # User visible methods.
    #

    @property
    def hits(self):
        """Return the per-facet impingement (or crossing) counts."""
        return self.tally.hits

    @property
    def absorbed(self):
        """Return the per-facet absorption counts."""
        return self.tally.absorbed

    def impingement_rate(self):
        """Return the per-facet impingement rate density Z and its standard
        error, m^-2 s^-1.
        """
        counts, errors = self._counts()
        return self.weight * counts / self.scene.areas, self.weight * errors / self.scene.areas

    def facet_pressure(self):
        """Return the per-facet pressure and its standard error, Pa."""
        rate, error = self.impingement_rate()
        factor = self.gas.pressure_factor
        return rate * factor, error * factor

    def group_pressure(self, tag):
        """Return the area-weighted pressure of the group ``tag`` and its
        standard error, Pa.
        """
        indices, count, error = self._group(tag)
        area = float(self.scene.areas[indices].sum())
        factor = self.weight * self.gas.pressure_factor / area
        return count * factor, error * factor

    def plane_pressure(self, tag):
        """Return the pressure at the sampling plane ``tag`` from the mean of
        its two directional crossing rates, Pa.
        """
        if not self.scene.virtual[self.scene.group(tag)[0]]:
            msg = f'group {tag!r} is not a sampling plane'
            raise InvalidMeasurementError(msg)

        return self.group_pressure(tag)

    def crossing_rates(self, tag):
        """Return the forward and backward crossing rates of the plane ``tag``,
        molecules/s.
        """
        indices = self.scene.group(tag)
        return (self.weight * float(self.tally.forward[indices].sum()),
                self.weight * float(self.tally.backward[indices].sum()))

    def summary(self):
        """Return a JSON-ready summary in boundary units (mbar, l/s)."""
        groups = {}
        for tag in self.scene.group_names:
            indices = self.scene.group(tag)
            pressure, error = self.group_pressure(tag)
            entry = {
                'facets': len(indices),
                'area_m2': float(self.scene.areas[indices].sum()),
                'virtual': bool(self.scene.virtual[indices[0]]),
                'hits': int(self.tally.hits[indices].sum()),
                'absorbed': int(self.tally.absorbed[indices].sum()),
                'pressure_mbar': pa_to_mbar(pressure),
                'pressure_se_mbar': pa_to_mbar(error),
            }
            if entry['virtual']:
                entry['forward_rate'], entry['backward_rate'] = self.crossing_rates(tag)

            groups[tag] = entry

        return {
            'particles': self.particles,
            'seed': self.config.seed,
            'generation_rate': self.generation_rate,
            'absorbed': int(self.tally.absorbed.sum()),
            'capped': self.tally.capped,
            'lost': self.tally.lost,
            'leaked': self.tally.leaked,
            'groups': groups,
            'warnings': list(self.warnings),
        }

    def facet_rows(self):
        """Return one record per facet in boundary units."""
        rate, _ = self.impingement_rate()
        pressure, error = self.facet_pressure()
        return [
            {
                'facet': i,
                'tag': self.scene.tags[i],
                'area_m2': float(self.scene.areas[i]),
                'sticking': float(self.scene.sticking[i]),
                'hits': int(self.tally.hits[i]),
                'absorbed': int(self.tally.absorbed[i]),
                'impingement_rate': float(rate[i]),
                'pressure_mbar': pa_to_mbar(float(pressure[i])),
                'pressure_se_mbar': pa_to_mbar(float(error[i])),
            }
            for i in range(len(self.scene))
        ]

    def to_csv(self, path, comments=()):
        """Write the per-facet table to the CSV file at ``path``, preceded by
        the ``comments`` lines.
        """
        rows = self.facet_rows()
        with Path(path).open('w', newline='', encoding='utf-8') as outfile:
            outfile.writelines(f'# {line}\n' for line in comments)
            writer = csv.DictWriter(outfile, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)


@dataclass(frozen=True)
class Transmission:
    """The class represents a transmission probability estimate."""

    probability: float
    standard_error: float
    particles: int
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class PumpingSpeed:
    """The class represents an effective pumping speed estimate, l/s."""

    speed: float
    standard_error: float
    transmission: Transmission
    port_area: float


@dataclass(frozen=True)
class Calibration:
    """The class represents the outcome of a sticking calibration.

    The ``history`` holds the (sticking, speed) pairs of the bisection.
    """

    sticking: float
    speed: float
    standard_error: float
    max_speed: float
    history: tuple = ()


@dataclass(frozen=True)
class GapCalibration:
    """The class represents the outcome of a holder-gap calibration.

    The ``history`` holds the (gap, ratio) pairs of the bisection.
    """

    gap: float  # m
    ratio: float
    standard_error: float
    gauge_pressure: float  # mbar
    history: tuple = ()


def mean_speed(gas):
    """Return the mean molecular speed of ``gas``, m/s."""
    return gas.mean_speed


def orifice_speed(area, gas):
    """Return the pumping speed v/4 A of a black orifice of ``area`` m^2, l/s."""
    return speed_to_litres(gas.mean_speed / 4.0 * area)


def trace(scene, config=None):
    """Run a steady-state simulation from the outgassing facets."""
    config = config or SimConfig()
    if config.gas is not None:
        scene = scene.with_gas(config.gas)

    tally = _run(scene, config)
    return SimResult(scene, config, tally)


def _check_port(scene, tag):
    indices = scene.group(tag)
    usable = scene.virtual[indices] | (scene.sticking[indices] == 1.0)
    if not usable.all():
        msg = f'port {tag!r} must be virtual or have sticking 1'
        raise InvalidMeasurementError(msg)

    return indices


def _inject(scene, entry, exits, config):
    """Inject particles across ``entry`` and return the tally."""
    config = config or SimConfig()
    if config.gas is not None:
        scene = scene.with_gas(config.gas)

    tally = _run(scene, config, source=entry, exits=exits)
    warnings = []
    _diagnose(tally, config, warnings)
    if not tally.absorbed.any():
        msg = 'no particle was absorbed or returned; the measurement is degenerate'
        raise DegenerateMeasurementError(msg)

    return scene, tally, warnings


def transmission_probability(scene, entry_port, exit_port, config=None):
    """Return the probability that a particle entering through ``entry_port``
    leaves through ``exit_port``.
    """
    entry = _check_port(scene, entry_port)
    exit_ = _check_port(scene, exit_port)
    if entry_port == exit_port or np.intersect1d(entry, exit_).size:
        msg = 'the entry and exit ports must be disjoint'
        raise InvalidMeasurementError(msg)

    _, tally, warnings = _inject(scene, entry_port, (entry_port, exit_port), config)
    n = tally.injected
    p = float(tally.absorbed[exit_].sum()) / n
    return Transmission(p, float(np.sqrt(p * (1.0 - p) / n)), n, warnings)


def effective_pumping_speed(scene, measurement_port, config=None):
    """Return the effective pumping speed seen through ``measurement_port``.

    Particles enter through the port; those absorbed anywhere but on the port
    are pumped, the others return. The speed is the pumped fraction times the
    orifice speed of the port.
    """
    port = _check_port(scene, measurement_port)
    scene, tally, warnings = _inject(scene, measurement_port, (measurement_port,), config)
    n = tally.injected
    pumped = np.ones(len(scene), dtype=bool)
    pumped[port] = False
    p = float(tally.absorbed[pumped].sum()) / n
    area = float(scene.areas[port].sum())
    orifice = orifice_speed(area, scene.gas)
    transmission = Transmission(p, float(np.sqrt(p * (1.0 - p) / n)), n, warnings)
    return PumpingSpeed(p * orifice, transmission.standard_error * orifice, transmission, area)


def calibrate_sticking(pump_geometry, nominal_speed, gas=None, config=None, *, tag='pump',
                       iterations=12, margin=None):
    """Return the sticking coefficient that makes ``pump_geometry`` pump
    ``nominal_speed`` l/s in open space.

    The pump is wrapped in a black box standing for the open space, and the
    sticking of the ``tag`` group is bisected with common random numbers.
    """
    config = config or SimConfig()
    if gas is not None:
        config = replace(config, gas=gas)

    space = build_open_space(pump_geometry, margin)

    def speed(sticking):
        scene = space.with_group_properties(tag, sticking=sticking)
        return effective_pumping_speed(scene, 'boundary', config)

    best = speed(1.0)
    if nominal_speed > best.speed + 3.0 * best.standard_error:
        msg = (f'nominal speed {nominal_speed:.4g} l/s is out of reach; the geometry pumps at '
               f'most {best.speed:.4g} l/s')
        raise CalibrationInfeasibleError(msg, best.speed)

    if nominal_speed >= best.speed:
        LOGGER.info('Nominal speed %.4g l/s is within noise of the black limit', nominal_speed)
        return Calibration(1.0, best.speed, best.standard_error, best.speed, ((1.0, best.speed),))

    history = [(1.0, best.speed)]
    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        middle = 0.5 * (lo + hi)
        estimate = speed(middle)
        history.append((middle, estimate.speed))
        if estimate.speed < nominal_speed:
            lo = middle
        else:
            hi = middle

    sticking = 0.5 * (lo + hi)
    result = speed(sticking)
    history.append((sticking, result.speed))
    LOGGER.info('Calibrated sticking %.5f for %.4g l/s (got %.4g l/s)', sticking, nominal_speed,
                result.speed)
    return Calibration(sticking, result.speed, result.standard_error, best.speed,
                       tuple(sorted(history)))


def pressure_ratio(result, numerator, denominator):
    """Return the ratio of the pressures of two groups of ``result`` and its
    standard error.
    """
    top, top_error = result.group_pressure(numerator)
    bottom, bottom_error = result.group_pressure(denominator)
    if not bottom > 0.0:
        msg = f'no pressure on {denominator!r}; the ratio is undefined'
        raise DegenerateMeasurementError(msg)

    ratio = top / bottom
    relative = np.hypot(top_error / top if top else 0.0, bottom_error / bottom)
    return float(ratio), float(ratio * relative)


def calibrate_holder_gap(target_ratio, outgassing=1e-14, config=None, *, bounds=(1e-3, 4e-2),
                         iterations=10, presets=None, gas=HYDROGEN):
    """Return the trap-holder gap that makes the full system show
    ``target_ratio`` between the pressure at the ions and the gauge reading.

    The ratio falls as the gap opens; the gap is bisected geometrically
    within ``bounds`` (m) with common random numbers.
    """
    config = config or SimConfig()

    def ratio(gap):
        scene = full_system(outgassing, holder_gap=gap, presets=presets, gas=gas)
        result = trace(scene, config)
        value, error = pressure_ratio(result, 'roi', 'gauge')
        gauge, _ = result.group_pressure('gauge')
        LOGGER.debug('Holder gap %.5f m: ratio %.4f +- %.4f', gap, value, error)
        return value, error, pa_to_mbar(gauge)

    lo, hi = bounds
    high, low = ratio(lo), ratio(hi)
    history = [(lo, high[0]), (hi, low[0])]
    if not low[0] <= target_ratio <= high[0]:
        msg = (f'ratio {target_ratio:.4g} is out of reach; holder gaps from {lo:.4g} to '
               f'{hi:.4g} m give {high[0]:.4g} to {low[0]:.4g}')
        raise TargetOutOfReachError(msg, (low[0], high[0]))

    for _ in range(iterations):
        middle = float(np.sqrt(lo * hi))
        value = ratio(middle)[0]
        history.append((middle, value))
        if value > target_ratio:
            lo = middle
        else:
            hi = middle

    gap = float(np.sqrt(lo * hi))
    value, error, gauge = ratio(gap)
    history.append((gap, value))
    LOGGER.info('Calibrated holder gap %.5f m for ratio %.4g (got %.4g +- %.3g)', gap,
                target_ratio, value, error)
    return GapCalibration(gap, value, error, gauge, tuple(sorted(history)))
