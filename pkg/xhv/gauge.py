"""The module contains the Bayard-Alpert gauge model and the analysis of the
pressure rise after the ion pump is switched off, which separates the
non-getterable gas load from the base pressure.

Pressures are in mbar, speeds in l/s, volumes in l and gas loads in
mbar l/s.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from xhv.config import load_presets
from xhv.exceptions import ComputationError, ValidationError

LOGGER = logging.getLogger(__name__)

MIN_SAMPLES = 10


class FitError(ComputationError):
    """Raised when the rise fit does not converge."""

    def __init__(self, message, residual):
        """Initialize a FitError object."""
        super().__init__(f'{message} (residual norm {residual:.3g})')
        self.residual = residual


@dataclass(frozen=True)
class GaugeTrace:
    """The class represents gauge readings after the ion pump is switched off.

    Readings at or below ``p_min`` (the x-ray limit of the gauge) are
    clamped and carry no information.
    """

    times: np.ndarray
    pressures: np.ndarray
    emission_current: float = 4e-3
    sensitivity: float = 8.6
    p_min: float = 0.0

    def __post_init__(self):
        """Validate the trace."""
        times = np.asarray(self.times, dtype=np.float64)
        pressures = np.asarray(self.pressures, dtype=np.float64)
        if times.shape != pressures.shape or times.ndim != 1:
            msg = 'expected one pressure per timestamp'
            raise ValidationError(msg)

        if np.any(np.diff(times) <= 0.0):
            msg = 'timestamps must be strictly increasing'
            raise ValidationError(msg)

        if np.any(pressures <= 0.0):
            msg = 'pressures must be positive'
            raise ValidationError(msg)

        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'pressures', pressures)

    @classmethod
    def from_currents(cls, times, collector_currents, emission_current, sensitivity, p_min=0.0):
        """Create a trace from collector currents, A."""
        pressures = pressure_from_current(np.asarray(collector_currents, dtype=np.float64),
                                          emission_current, sensitivity)
        return cls(times, pressures, emission_current, sensitivity, p_min)

    def __len__(self):
        """Return the number of samples."""
        return len(self.times)


@dataclass(frozen=True)
class NGFitResult:
    """The class represents the fitted rise parameters.

    The covariance is over (p_base, q_ng, s_g). The ``span`` is the number
    of e-foldings S_g t / V covered by the fitted samples.
    """

    p_base: float
    q_ng: float
    s_g: float
    covariance: np.ndarray
    residual_norm: float
    span: float
    samples: int
    warnings: list = field(default_factory=list)

    @property
    def standard_errors(self):
        """Return the standard errors of (p_base, q_ng, s_g)."""
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def asymptote(self):
        """Return the saturation pressure P_base + Q_NG/S_g."""
        return self.p_base + self.q_ng / self.s_g

    def summary(self):
        """Return a JSON-ready summary."""
        errors = self.standard_errors
        return {
            'p_base_mbar': self.p_base,
            'p_base_se_mbar': float(errors[0]),
            'q_ng_mbar_l_s': self.q_ng,
            'q_ng_se_mbar_l_s': float(errors[1]),
            's_g_l_s': self.s_g,
            's_g_se_l_s': float(errors[2]),
            'asymptote_mbar': self.asymptote,
            'residual_norm': self.residual_norm,
            'e_foldings': self.span,
            'samples': self.samples,
            'warnings': list(self.warnings),
        }


def _require_positive(**values):
    for name, value in values.items():
        if not np.all(np.asarray(value) > 0.0):
            msg = f'{name} must be positive'
            raise ValidationError(msg)


def pressure_from_current(collector_current, emission_current, sensitivity):
    """Return the pressure I_c/(S I_e), mbar."""
    _require_positive(emission_current=emission_current, sensitivity=sensitivity)
    return collector_current / (sensitivity * emission_current)


def collector_current(pressure, emission_current, sensitivity):
    """Return the collector current S P I_e, A."""
    return sensitivity * pressure * emission_current


def predict_rise(p_base, q_ng, s_g, volume, t):
    """Return the pressure t seconds after the ion pump is switched off."""
    _require_positive(p_base=p_base, q_ng=q_ng, s_g=s_g, volume=volume)
    return p_base + q_ng / s_g * -np.expm1(-s_g * np.asarray(t, dtype=np.float64) / volume)


def ng_partial_pressure(q_ng, ion_pump_speed):
    """Return the partial pressure Q_NG/S of the non-getterable gases, mbar."""
    _require_positive(q_ng=q_ng, ion_pump_speed=ion_pump_speed)
    return q_ng / ion_pump_speed


def _initial_guess(t, p, volume):
    """Return (p_base, q_ng, s_g) from the first readings, the asymptote and
    the time of half the rise.
    """
    p_base = float(p[:3].min())
    rise = float(np.median(p[-max(3, len(p) // 20):])) - p_base
    if rise <= 0.0:
        rise = float(p.max()) - p_base or p_base

    elapsed = t - t[0]
    half = elapsed[np.argmax(p - p_base >= 0.5 * rise)]
    if half <= 0.0:
        half = 0.5 * float(elapsed[-1])

    s_g = volume * math.log(2.0) / half
    return np.array([max(p_base, 1e-30), s_g * rise, s_g])


def fit_nongetterable(trace, volume):
    """Fit the rise model to ``trace`` for the system ``volume``, l.

    The fit minimizes relative residuals over the logarithms of the
    parameters with Levenberg-Marquardt. Clamped readings are excluded.
    """
    _require_positive(volume=volume)
    keep = trace.pressures > trace.p_min
    t, p = trace.times[keep], trace.pressures[keep]
    if len(t) < MIN_SAMPLES:
        msg = f'{len(t)} usable samples, at least {MIN_SAMPLES} are needed'
        raise ValidationError(msg)

    if not keep.all():
        LOGGER.debug('Excluding %d clamped readings', int((~keep).sum()))

    def residuals(x):
        p_base, q_ng, s_g = np.exp(x)
        return (p_base + q_ng / s_g * -np.expm1(-s_g * t / volume)) / p - 1.0

    start = np.log(_initial_guess(t, p, volume))
    result = optimize.least_squares(residuals, start, method='lm', xtol=1e-15, ftol=1e-15,
                                    gtol=1e-15, max_nfev=20_000)
    p_base, q_ng, s_g = np.exp(result.x)
    span = float(s_g * (t[-1] - t[0]) / volume)
    residual = float(np.linalg.norm(result.fun))
    warnings = []
    if span < 1.0:
        warnings.append(f'the trace spans {span:.3g} e-foldings; the fit is under-constrained')

    if not result.success or not np.all(np.isfinite(result.x)):
        if not warnings:
            msg = f'the rise fit did not converge: {result.message}'
            raise FitError(msg, residual)

        warnings.append(f'the rise fit did not converge: {result.message}')

    dof = max(1, len(t) - 3)
    jacobian = result.jac
    try:
        covariance_log = np.linalg.inv(jacobian.T @ jacobian) * (residual ** 2 / dof)
    except np.linalg.LinAlgError:
        covariance_log = np.full((3, 3), np.inf)
        warnings.append('the fit Jacobian is singular')

    theta = np.exp(result.x)
    covariance = covariance_log * np.outer(theta, theta)
    if span < 1.0:
        covariance = covariance / max(span, 1e-12) ** 2

    for warning in warnings:
        LOGGER.warning(warning)

    return NGFitResult(float(p_base), float(q_ng), float(s_g), covariance, residual, span,
                       len(t), warnings)


def clamp_to_floor(trace, p_min):
    """Return ``trace`` as the gauge reports it with its x-ray limit at
    ``p_min``, mbar.
    """
    if not p_min >= 0.0:
        msg = f'p_min must not be negative, got {p_min}'
        raise ValidationError(msg)

    return GaugeTrace(trace.times, np.maximum(trace.pressures, p_min), trace.emission_current,
                      trace.sensitivity, p_min)


def synthesize_trace(p_base, q_ng, s_g, volume, duration=None, samples=200, *, times=None,
                     noise=0.0, p_min=0.0, seed=0, emission_current=4e-3, sensitivity=8.6):
    """Return a trace following the rise model with multiplicative Gaussian
    ``noise`` and clamped at ``p_min``.

    The readings are taken at ``times``, or at ``samples`` evenly spaced
    times over ``duration`` seconds.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, duration, samples) if times is None else np.asarray(times, dtype=float)
    p = predict_rise(p_base, q_ng, s_g, volume, t)
    if noise:
        p = p * (1.0 + noise * rng.standard_normal(len(t)))

    trace = GaugeTrace(t, np.abs(p), emission_current, sensitivity)
    return clamp_to_floor(trace, p_min)


def load_trace(csv_path, manifest_path, presets=None):
    """Read a two-column gauge trace (t s, P mbar) and its JSON manifest.

    The manifest gives the volume; the emission current, sensitivity and
    P_min default to the 'gauge' presets. Returns the trace and the volume.
    """
    defaults = (presets or load_presets())['gauge']
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding='utf-8'))
        with Path(csv_path).open(encoding='utf-8') as infile:
            rows = [row for row in csv.reader(infile) if row and not row[0].startswith('#')]

        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]

        data = np.array([[float(row[0]), float(row[1])] for row in rows])
        volume = float(manifest['volume'])
    except (OSError, KeyError, ValueError, IndexError, TypeError) as exc:
        msg = f'cannot load the gauge trace {csv_path}: {exc}'
        raise ValidationError(msg) from exc

    if data.size == 0:
        msg = f'the gauge trace {csv_path} is empty'
        raise ValidationError(msg)

    trace = GaugeTrace(
        data[:, 0], data[:, 1],
        manifest.get('emission_current', defaults['emission_current']),
        manifest.get('sensitivity', defaults['sensitivity']),
        manifest.get('p_min', defaults['p_min_mbar']),
    )
    return trace, volume


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False

    return True
