"""The module contains the statics of a trapped ion chain and the collision
physics that turns observed reorder events into a local pressure.

Positions are solved in scaled units: the length unit is
(k/(m w_z^2))^(1/3) and the energy unit k/length, with k = Q^2/(4 pi eps0).
In these units the potential is

    U = 1/2 sum_i (bx^2 x_i^2 + by^2 y_i^2 + z_i^2) + sum_{i<j} 1/|r_i - r_j|

with bx = w_x/w_z and by = w_y/w_z.
"""

import concurrent.futures
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize, special

from xhv.config import load_presets
from xhv.constants import AMU, BOLTZMANN, ELEMENTARY_CHARGE, EPSILON_0, EV, HOUR, mbar_to_pa, \
    pa_to_mbar
from xhv.exceptions import ComputationError, ValidationError

LOGGER = logging.getLogger(__name__)

MAX_ITERATIONS = 20_000
NEWTON_STEPS = 20
RESIDUAL_TOLERANCE = 1e-12
SYMMETRY_BREAKING = 10e-9  # m


class OptimizationError(ComputationError):
    """Raised when an energy minimization does not converge."""

    def __init__(self, message, residual):
        """Initialize an OptimizationError object."""
        super().__init__(f'{message} (gradient residual {residual:.3g})')
        self.residual = residual


@dataclass(frozen=True)
class TrapConfig:
    """The class represents a linear Paul trap holding ``ions`` ions.

    The frequencies are angular (rad/s), the mass is in kg and the charge in
    C.
    """

    omega_x: float
    omega_y: float
    omega_z: float
    ions: int
    mass: float
    charge: float = ELEMENTARY_CHARGE

    def __post_init__(self):
        """Validate the trap."""
        if min(self.omega_x, self.omega_y, self.omega_z) <= 0.0:
            msg = 'trap frequencies must be positive'
            raise ValidationError(msg)

        if not (self.omega_z < self.omega_x and self.omega_z < self.omega_y):
            msg = 'the axial frequency must be below both radial ones (linear chain)'
            raise ValidationError(msg)

        if self.ions < 1:
            msg = f'a chain needs at least one ion, got {self.ions}'
            raise ValidationError(msg)

        if self.mass <= 0.0 or self.charge <= 0.0:
            msg = 'ion mass and charge must be positive'
            raise ValidationError(msg)

    @classmethod
    def from_presets(cls, presets=None, **overrides):
        """Create a trap from the 'trap' presets section.

        The presets give ordinary frequencies in MHz, the mass in atomic mass
        units and the charge in elementary charges.
        """
        section = (presets or load_presets())['trap']
        fx, fy, fz = (2.0 * math.pi * 1e6 * f for f in section['frequencies_mhz'])
        values = {
            'omega_x': fx,
            'omega_y': fy,
            'omega_z': fz,
            'ions': section['ions'],
            'mass': section['mass_amu'] * AMU,
            'charge': section['charge'] * ELEMENTARY_CHARGE,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def coulomb_constant(self):
        """Return Q^2/(4 pi eps0), J m."""
        return self.charge ** 2 / (4.0 * math.pi * EPSILON_0)

    @property
    def length_scale(self):
        """Return the scaled length unit, m."""
        return (self.coulomb_constant / (self.mass * self.omega_z ** 2)) ** (1.0 / 3.0)

    @property
    def energy_scale(self):
        """Return the scaled energy unit, J."""
        return self.coulomb_constant / self.length_scale

    @property
    def stiffness(self):
        """Return the scaled spring constants (bx^2, by^2, 1)."""
        return np.array([(self.omega_x / self.omega_z) ** 2,
                         (self.omega_y / self.omega_z) ** 2, 1.0])

    @property
    def soft_axis(self):
        """Return the index of the softer radial axis."""
        return 1 if self.omega_y < self.omega_x else 0


@dataclass(frozen=True)
class ChainState:
    """The class represents an equilibrium configuration.

    The positions (m) are ordered by z, the energy is in J and the
    ``residual`` is the largest gradient component in scaled units.
    """

    positions: np.ndarray
    energy: float
    residual: float


@dataclass(frozen=True)
class CollisionModel:
    """The class represents the background gas seen by the ions.

    The polarizability is a volume (m^3), the reduced mass is in kg, the
    temperature in K and the mean energy transfer per collision in eV.
    """

    polarizability: float = 8.06e-31
    reduced_mass: float = 3.35e-27
    temperature: float = 293.0
    mean_transfer: float = 8.7e-4

    def __post_init__(self):
        """Validate the model."""
        for name in ('polarizability', 'reduced_mass', 'temperature', 'mean_transfer'):
            if not getattr(self, name) > 0.0:
                msg = f'{name} must be positive'
                raise ValidationError(msg)

    @classmethod
    def from_presets(cls, presets=None, **overrides):
        """Create a model from the 'collision' presets section."""
        section = (presets or load_presets())['collision']
        values = {
            'polarizability': section['polarizability'],
            'reduced_mass': section['reduced_mass'],
            'temperature': section['temperature'],
            'mean_transfer': section['mean_transfer_ev'],
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class ChainObservation:
    """The class represents a reorder measurement: ``dark`` of ``ions`` ions
    dark, ``events`` reorders seen in ``duration`` seconds.
    """

    ions: int
    dark: int
    events: int = 0
    duration: float = 0.0

    def __post_init__(self):
        """Validate the observation."""
        if not 0 <= self.dark <= self.ions:
            msg = f'the dark ion count must be within [0, {self.ions}], got {self.dark}'
            raise ValidationError(msg)

        if self.events < 0 or self.duration < 0.0:
            msg = 'event count and duration must not be negative'
            raise ValidationError(msg)


@dataclass(frozen=True)
class PressureEstimate:
    """The class represents a pressure extracted from collision statistics.

    The pressure and its standard error are in mbar, the rates in 1/s and
    the collision interval per ion in s.
    """

    pressure: float
    standard_error: float
    collision_rate: float
    collision_rate_per_ion: float
    collision_interval_per_ion: float
    p_obs: float
    p_reorder: float
    barrier: float


#
# Potential in scaled units.
#

def _separations(positions):
    d = positions[:, None, :] - positions[None, :, :]
    distance = np.linalg.norm(d, axis=-1)
    np.fill_diagonal(distance, np.inf)
    return d, distance


def energy(flat, stiffness):
    """Return the scaled potential energy of the flattened positions."""
    r = np.reshape(flat, (-1, 3))
    _, distance = _separations(r)
    return 0.5 * float(np.sum(stiffness * r * r)) + 0.5 * float(np.sum(1.0 / distance))


def gradient(flat, stiffness):
    """Return the gradient of the scaled potential."""
    r = np.reshape(flat, (-1, 3))
    d, distance = _separations(r)
    return (stiffness * r - np.sum(d / distance[..., None] ** 3, axis=1)).ravel()


def hessian(flat, stiffness):
    """Return the Hessian of the scaled potential."""
    r = np.reshape(flat, (-1, 3))
    n = len(r)
    d, distance = _separations(r)
    coupling = (3.0 * d[..., :, None] * d[..., None, :] / distance[..., None, None] ** 5 -
                np.eye(3) / distance[..., None, None] ** 3)
    blocks = -coupling
    blocks[np.arange(n), np.arange(n)] = np.diag(stiffness) + coupling.sum(axis=1)
    return blocks.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)


def _minimize(fun, jac, hess, start, what):
    """Minimize with BFGS and polish with Newton steps while the Hessian is
    positive definite.
    """
    tolerance = RESIDUAL_TOLERANCE * max(1.0, float(np.max(np.abs(start))))
    result = optimize.minimize(fun, start, jac=jac, method='BFGS',
                               options={'gtol': 1e-10, 'maxiter': MAX_ITERATIONS})
    x = result.x
    for _ in range(NEWTON_STEPS):
        g = jac(x)
        if np.max(np.abs(g)) <= tolerance:
            break

        try:
            factor = linalg.cho_factor(hess(x))
        except linalg.LinAlgError:
            LOGGER.debug('%s: Hessian not positive definite, skipping Newton polish', what)
            break

        candidate = x - linalg.cho_solve(factor, g)
        if fun(candidate) > fun(x) + 1e-12 * abs(fun(x)):
            break

        x = candidate

    residual = float(np.max(np.abs(jac(x)))) if len(x) else 0.0
    if residual > tolerance:
        msg = f'{what} did not converge after {result.nit} iterations'
        raise OptimizationError(msg, residual)

    return x, residual


def _scaled_equilibrium(config):
    """Return the flattened scaled equilibrium positions and the energy."""
    n = config.ions
    stiffness = config.stiffness
    if n == 1:
        return np.zeros(3), 0.0, 0.0

    start = np.zeros((n, 3))
    start[:, 2] = np.linspace(-1.0, 1.0, n) * 0.9 * n ** 0.6
    x, residual = _minimize(
        lambda f: energy(f, stiffness), lambda f: gradient(f, stiffness),
        lambda f: hessian(f, stiffness), start.ravel(), 'equilibrium',
    )
    r = x.reshape(-1, 3)
    r = r[np.argsort(r[:, 2], kind='stable')]
    return r.ravel(), energy(r.ravel(), stiffness), residual


#
# User visible functions.
#

def equilibrium(config):
    """Return the equilibrium configuration of the chain."""
    flat, scaled_energy, residual = _scaled_equilibrium(config)
    positions = flat.reshape(-1, 3) * config.length_scale
    return ChainState(positions, scaled_energy * config.energy_scale, residual)


def barrier_energy(config, i):
    """Return the energy needed to bring ions ``i`` and ``i + 1`` (1-based,
    ordered by z) to the same axial position, eV.

    The pair is constrained by substituting z_{i+1} := z_i; all the other
    coordinates relax.
    """
    n = config.ions
    if not 1 <= i <= n - 1:
        msg = f'pair index must be within [1, {n - 1}], got {i}'
        raise ValidationError(msg)

    flat, scaled_energy, _ = _scaled_equilibrium(config)
    stiffness = config.stiffness
    a, b = i - 1, i
    removed = 3 * b + 2
    reduction = np.delete(np.eye(3 * n), removed, axis=1)
    reduction[removed, 3 * a + 2] = 1.0

    start = flat.reshape(-1, 3).copy()
    start[[a, b], 2] = 0.5 * (start[a, 2] + start[b, 2])
    shift = SYMMETRY_BREAKING / config.length_scale
    start[a, config.soft_axis] += shift
    start[b, config.soft_axis] -= shift

    x, _ = _minimize(
        lambda f: energy(reduction @ f, stiffness),
        lambda f: reduction.T @ gradient(reduction @ f, stiffness),
        lambda f: reduction.T @ hessian(reduction @ f, stiffness) @ reduction,
        np.delete(start.ravel(), removed), f'constrained minimum of pair {i}',
    )
    barrier = (energy(reduction @ x, stiffness) - scaled_energy) * config.energy_scale / EV
    LOGGER.debug('Barrier of pair %d: %.6g eV', i, barrier)
    return barrier


def _barrier_row(args):
    config, i = args
    return i, barrier_energy(config, i)


def barrier_profile(config, workers=1):
    """Return ``[(i, barrier eV), ...]`` for every neighbouring pair."""
    pairs = [(config, i) for i in range(1, config.ions)]
    if workers <= 1 or len(pairs) <= 1:
        return [_barrier_row(pair) for pair in pairs]

    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_barrier_row, pairs))


def p_obs(ions, dark):
    """Return the probability that a random reordering of ``dark`` dark ions
    among ``ions`` ions changes the visible pattern.
    """
    if not 0 <= dark <= ions:
        msg = f'the dark ion count must be within [0, {ions}], got {dark}'
        raise ValidationError(msg)

    return 1.0 - 1.0 / math.comb(ions, dark)


def p_reorder(barrier, mean_transfer):
    """Return the probability that a collision transfers more than
    ``barrier`` eV, for a Maxwell-Boltzmann energy distribution of mean
    ``mean_transfer`` eV.
    """
    if barrier < 0.0 or mean_transfer <= 0.0:
        msg = 'the barrier must not be negative and the mean transfer must be positive'
        raise ValidationError(msg)

    return float(special.gammaincc(1.5, barrier / (2.0 / 3.0 * mean_transfer)))


def langevin_rate_coefficient(model, charge=ELEMENTARY_CHARGE):
    """Return the Langevin capture rate coefficient, m^3/s."""
    return charge * math.sqrt(math.pi * model.polarizability /
                              (model.reduced_mass * EPSILON_0))


def _detection(observation, model, barrier):
    detect = p_obs(observation.ions, observation.dark)
    reorder = p_reorder(barrier, model.mean_transfer)
    return detect, reorder


def rate_from_pressure(pressure, observation, model, barrier, charge=ELEMENTARY_CHARGE):
    """Return the observed chain-level reorder rate expected at ``pressure``
    mbar, 1/s.
    """
    detect, reorder = _detection(observation, model, barrier)
    per_ion = (mbar_to_pa(pressure) / (BOLTZMANN * model.temperature) *
               langevin_rate_coefficient(model, charge))
    return per_ion * observation.ions * detect * reorder


def _estimate(per_ion, relative_error, observation, model, barrier, detect, reorder, charge):
    pressure = pa_to_mbar(per_ion * BOLTZMANN * model.temperature /
                          langevin_rate_coefficient(model, charge))
    interval = math.inf if per_ion == 0.0 else 1.0 / per_ion
    return PressureEstimate(pressure, pressure * relative_error, per_ion * observation.ions,
                            per_ion, interval, detect, reorder, barrier)


def pressure_from_rate(gamma_obs, observation, model, barrier, charge=ELEMENTARY_CHARGE):
    """Return the pressure that explains the observed chain-level reorder rate.

    When ``gamma_obs`` is None the rate is events/duration of the
    observation. The standard error is the Poisson error of the event count.
    """
    if gamma_obs is None:
        if observation.duration <= 0.0:
            msg = 'the observation has no duration'
            raise ValidationError(msg)

        gamma_obs = observation.events / observation.duration

    if gamma_obs < 0.0:
        msg = f'the observed rate must not be negative, got {gamma_obs}'
        raise ValidationError(msg)

    detect, reorder = _detection(observation, model, barrier)
    if gamma_obs == 0.0:
        return _estimate(0.0, 0.0, observation, model, barrier, detect, reorder, charge)

    if detect == 0.0 or reorder == 0.0:
        msg = 'no reorder can be observed with this configuration'
        raise ValidationError(msg)

    relative_error = 1.0 / math.sqrt(observation.events) if observation.events else math.nan
    per_ion = gamma_obs / (detect * reorder) / observation.ions
    return _estimate(per_ion, relative_error, observation, model, barrier, detect, reorder,
                     charge)


def pressure_from_interval(interval_per_ion, observation, model, barrier,
                           interval_error=0.0, charge=ELEMENTARY_CHARGE):
    """Return the pressure from the mean collision interval per ion, s.

    The interval is the one already corrected for the detection and reorder
    probabilities; they are reported alongside but not applied again.
    """
    if interval_per_ion <= 0.0:
        msg = f'the interval must be positive, got {interval_per_ion}'
        raise ValidationError(msg)

    detect, reorder = _detection(observation, model, barrier)
    return _estimate(1.0 / interval_per_ion, interval_error / interval_per_ion, observation,
                     model, barrier, detect, reorder, charge)


def hours(seconds):
    """Convert seconds to hours."""
    return seconds / HOUR
