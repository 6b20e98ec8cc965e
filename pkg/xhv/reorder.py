"""The module contains the detection and classification of ion-chain
reorders in one-dimensional fluorescence slices, and the statistics of the
intervals between collision events.

Bright ions show as peaks. Dark ions are invisible; their slots are inferred
from gaps between the bright peaks and, at the chain ends, from the chain
being centred on the trap axis.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from xhv.config import load_presets
from xhv.constants import HOUR
from xhv.exceptions import ValidationError

LOGGER = logging.getLogger(__name__)

BRIGHT = 'bright'
DARK = 'dark'

REORDER = 'reorder'
BRIGHT_TO_DARK = 'bright_to_dark'
DARK_TO_BRIGHT = 'dark_to_bright'
ION_LOSS = 'ion_loss'
COUNTABLE = frozenset((REORDER, BRIGHT_TO_DARK))

CENTER_TOLERANCE = 0.25  # of the ion spacing
SPACING_WINDOW = 4
GRID_TOLERANCE = 0.3  # of the ion spacing
NORMAL_MAD = 1.4826
CLIP_SIGMA = 3.0
CLIP_ITERATIONS = 10


class AmbiguousFrameError(ValidationError):
    """Raised when a frame does not show a resolvable chain."""


class InsufficientDataError(ValidationError):
    """Raised when there are too few events for statistics."""


@dataclass(frozen=True)
class FrameSeries:
    """The class represents timestamped 1D intensity slices."""

    timestamps: np.ndarray
    frames: np.ndarray
    pixel_pitch: float | None = None

    def __post_init__(self):
        """Validate the series."""
        timestamps = np.asarray(self.timestamps, dtype=np.float64)
        try:
            frames = np.asarray(self.frames, dtype=np.float64)
        except ValueError:
            msg = 'all frames must have the same length'
            raise ValidationError(msg) from None

        if frames.ndim != 2 or len(frames) != len(timestamps):  # noqa: PLR2004
            msg = 'expected one frame of equal length per timestamp'
            raise ValidationError(msg)

        if np.any(np.diff(timestamps) <= 0.0):
            msg = 'timestamps must be strictly increasing'
            raise ValidationError(msg)

        object.__setattr__(self, 'timestamps', timestamps)
        object.__setattr__(self, 'frames', frames)

    def __len__(self):
        """Return the number of frames."""
        return len(self.timestamps)


@dataclass(frozen=True)
class ChainConfiguration:
    """The class represents the bright and dark slots of a chain, ordered
    along the frame.
    """

    states: tuple
    bright_positions: tuple
    dark_positions: tuple

    @property
    def slots(self):
        """Return the number of ion slots."""
        return len(self.states)

    @property
    def dark_slots(self):
        """Return the indices of the dark slots."""
        return tuple(i for i, state in enumerate(self.states) if state == DARK)

    @property
    def dark_count(self):
        """Return the number of dark ions."""
        return len(self.dark_slots)


@dataclass(frozen=True)
class ReorderEvent:
    """The class represents a change between two consecutive configurations."""

    timestamp: float
    kind: str
    before: ChainConfiguration
    after: ChainConfiguration
    segment: int = 0

    @property
    def countable(self):
        """Return True when the event counts as a collision."""
        return self.kind in COUNTABLE


@dataclass(frozen=True)
class IntervalStatistics:
    """The class represents the statistics of the intervals between
    countable events. Times are in seconds; the per-ion figures are the
    chain-level ones multiplied by the number of ions.
    """

    intervals: np.ndarray
    mean_interval_per_ion: float
    standard_error: float
    histogram: np.ndarray
    bin_edges: np.ndarray
    events: int
    warnings: list = field(default_factory=list)

    @property
    def count(self):
        """Return the number of intervals."""
        return len(self.intervals)

    @property
    def standard_error_defined(self):
        """Return False when a single interval leaves the error undefined."""
        return self.count > 1

    def summary(self):
        """Return a JSON-ready summary, hours per ion."""
        return {
            'events': self.events,
            'intervals': self.count,
            'mean_interval_hours_per_ion': self.mean_interval_per_ion / HOUR,
            'standard_error_hours_per_ion': (self.standard_error / HOUR
                                             if self.standard_error_defined else None),
            'warnings': list(self.warnings),
        }


#
# Detection.
#

def _noise_scale(frame):
    """Return the median and the normal-consistent MAD of the background.

    Bright pixels are clipped iteratively so that the peaks do not inflate
    the noise estimate.
    """
    values = frame
    for _ in range(CLIP_ITERATIONS):
        median = float(np.median(values))
        scale = NORMAL_MAD * float(np.median(np.abs(values - median)))
        kept = values[values <= median + CLIP_SIGMA * scale]
        if scale == 0.0 or len(kept) == len(values):
            break

        values = kept

    if scale > 0.0:
        return median, scale

    return median, 0.1 * (float(frame.max()) - median)


def _local_spacing(diffs, index):
    lo = max(0, index - SPACING_WINDOW)
    return float(np.median(diffs[lo:index + SPACING_WINDOW + 1]))


def _find_peaks(frame, k):
    median, scale = _noise_scale(frame)
    options = {'height': median + k * scale, 'prominence': k * scale}
    peaks, _ = signal.find_peaks(frame, **options)
    if len(peaks) >= 2:  # noqa: PLR2004
        distance = max(1.0, 0.5 * float(np.median(np.diff(peaks))))
        peaks, _ = signal.find_peaks(frame, distance=distance, **options)

    if len(peaks) < 2:  # noqa: PLR2004
        msg = f'{len(peaks)} bright peaks found, at least 2 are needed'
        raise AmbiguousFrameError(msg)

    return peaks.astype(np.float64)


def _inner_slots(peaks):
    """Return the slot positions and states between the outer bright peaks."""
    diffs = np.diff(peaks)
    positions = [peaks[0]]
    states = [BRIGHT]
    for j, gap in enumerate(diffs):
        ratio = gap / _local_spacing(diffs, j)
        if abs(ratio - round(ratio)) > GRID_TOLERANCE or round(ratio) < 1:
            msg = f'the gap of {gap:.1f} px at peak {j} does not fit the ion spacing'
            raise AmbiguousFrameError(msg)

        missing = round(ratio) - 1
        step = gap / (missing + 1)
        for m in range(1, missing + 1):
            positions.append(peaks[j] + m * step)
            states.append(DARK)

        positions.append(peaks[j + 1])
        states.append(BRIGHT)

    return positions, states


def detect_configuration(frame, expected_ions, center=None, k=5.0,
                         center_tolerance=CENTER_TOLERANCE):
    """Return the chain configuration of ``frame``.

    The dark ions missing at the chain ends are split between the two ends
    so that the chain is centred on ``center`` (the frame centre by default).
    A chain that cannot be centred within ``center_tolerance`` of the ion
    spacing is ambiguous.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1 or len(frame) < expected_ions:
        msg = f'a frame of {len(frame)} pixels cannot hold {expected_ions} ions'
        raise ValidationError(msg)

    if not np.all(np.isfinite(frame)):
        msg = 'the frame contains non-finite intensities'
        raise AmbiguousFrameError(msg)

    peaks = _find_peaks(frame, k)
    positions, states = _inner_slots(peaks)
    edge = expected_ions - len(states)
    if edge < 0:
        msg = f'{len(states)} slots found, more than the {expected_ions} expected ions'
        raise AmbiguousFrameError(msg)

    diffs = np.diff(peaks)
    left_spacing = _local_spacing(diffs, 0)
    right_spacing = _local_spacing(diffs, len(diffs) - 1)
    center = (len(frame) - 1) / 2.0 if center is None else center

    best = None
    for left in range(edge + 1):
        right = edge - left
        first = positions[0] - left * left_spacing
        last = positions[-1] + right * right_spacing
        if first < 0.0 or last > len(frame) - 1:
            continue

        offset = abs(0.5 * (first + last) - center)
        if best is None or offset < best[0]:
            best = (offset, left, right)

    spacing = 0.5 * (left_spacing + right_spacing)
    if best is None or best[0] > center_tolerance * spacing:
        msg = f'the chain of {expected_ions} ions cannot be centred on {center:.1f} px'
        raise AmbiguousFrameError(msg)

    _, left, right = best
    positions = ([positions[0] - m * left_spacing for m in range(left, 0, -1)] + positions +
                 [positions[-1] + m * right_spacing for m in range(1, right + 1)])
    states = [DARK] * left + states + [DARK] * right
    return ChainConfiguration(
        tuple(states),
        tuple(float(p) for p, s in zip(positions, states, strict=True) if s == BRIGHT),
        tuple(float(p) for p, s in zip(positions, states, strict=True) if s == DARK),
    )


def detect_series(series, expected_ions, center=None, k=5.0):
    """Detect the configuration of every frame.

    Ambiguous frames are logged and yield None. Two consecutive frames that
    only fit a chain with one ion less are taken as an ion loss, and the ion
    count of the following frames drops accordingly. A single such frame is
    treated as ambiguous.
    """
    ions = expected_ions
    configurations = []
    pending = None
    for timestamp, frame in zip(series.timestamps, series.frames, strict=True):
        try:
            configurations.append(detect_configuration(frame, ions, center, k))
            pending = None
            continue
        except AmbiguousFrameError as exc:
            reason = exc

        configuration = None
        if ions > 1:
            try:
                configuration = detect_configuration(frame, ions - 1, center, k)
            except AmbiguousFrameError:
                pass

        if configuration is not None and pending is not None:
            index, first = pending
            LOGGER.info('Frames from %.1f s hold %d ions', series.timestamps[index], ions - 1)
            configurations[index] = first
            configurations.append(configuration)
            ions -= 1
            pending = None
            continue

        if configuration is not None:
            pending = (len(configurations), configuration)
            reason = f'it fits {ions - 1} ions; waiting for the next frame'
        else:
            pending = None

        LOGGER.info('Skipping ambiguous frame at %.1f s: %s', timestamp, reason)
        configurations.append(None)

    return configurations


#
# Classification.
#

def _kind(before, after):
    if after.slots < before.slots:
        return ION_LOSS

    if after.dark_count > before.dark_count:
        return BRIGHT_TO_DARK

    if after.dark_count < before.dark_count:
        return DARK_TO_BRIGHT

    if after.dark_slots != before.dark_slots:
        return REORDER

    return None


def classify_transitions(configurations, timestamps, max_ambiguous_gap=60.0):
    """Compare consecutive valid configurations and return the events.

    None entries stand for ambiguous frames. A run of ambiguous frames
    longer than ``max_ambiguous_gap`` seconds, like an ion loss, starts a new
    segment; intervals are never measured across segments.
    """
    events = []
    segment = 0
    previous = None
    previous_time = None
    for configuration, timestamp in zip(configurations, timestamps, strict=True):
        if configuration is None:
            continue

        if previous is not None:
            if timestamp - previous_time > max_ambiguous_gap:
                segment += 1

            kind = _kind(previous, configuration)
            if kind == ION_LOSS:
                segment += 1

            if kind is not None:
                events.append(ReorderEvent(float(timestamp), kind, previous, configuration,
                                           segment))

        previous, previous_time = configuration, timestamp

    return events


def interval_statistics(events, ions, bin_width=600.0):
    """Return the statistics of the intervals between countable events.

    Only intervals within a segment count. The ``ions`` argument is the
    chain length N, or a ChainObservation.
    """
    ions = getattr(ions, 'ions', ions)
    countable = [e for e in events if e.countable]
    if len(countable) < 2:  # noqa: PLR2004
        msg = f'{len(countable)} countable events, at least 2 are needed'
        raise InsufficientDataError(msg)

    intervals = []
    for segment in sorted({e.segment for e in countable}):
        times = np.sort([e.timestamp for e in countable if e.segment == segment])
        intervals.extend(np.diff(times))

    if not intervals:
        msg = 'no two countable events share a segment'
        raise InsufficientDataError(msg)

    intervals = np.asarray(intervals)
    warnings = []
    if len(intervals) > 1:
        error = float(np.std(intervals, ddof=1) / np.sqrt(len(intervals))) * ions
    else:
        error = float('nan')
        warnings.append('a single interval leaves the standard error undefined')
        LOGGER.warning(warnings[-1])

    edges = np.arange(0.0, intervals.max() + bin_width, bin_width)
    if len(edges) < 2:  # noqa: PLR2004
        edges = np.array([0.0, bin_width])

    histogram, edges = np.histogram(intervals, bins=edges)
    return IntervalStatistics(intervals, float(intervals.mean()) * ions, error, histogram,
                              edges, len(countable), warnings)


#
# Synthetic data.
#

def synthesize_frames(ions, script, duration, cadence=5.0, *, spacing=12.0, width=1.5,
                      amplitude=100.0, background=10.0, noise=10.0, jitter=0.2,
                      length=None, melt_frames=0, seed=0):
    """Generate ``(timestamp, frame)`` pairs of a chain following ``script``.

    The ``script`` is a list of ``(time, dark slots)`` or ``(time, dark
    slots, ions)`` entries; the first one, at time 0, sets the initial
    state. Bright ions are Gaussian peaks of ``amplitude`` over
    ``background`` with Gaussian noise of standard deviation ``noise``. The
    ``melt_frames`` frames after each change show a melted chain.
    """
    rng = np.random.default_rng(seed)
    length = int(length or (ions + 4) * spacing)
    pixels = np.arange(length, dtype=np.float64)
    center = (length - 1) / 2.0
    script = sorted(script, key=lambda entry: entry[0])

    state = 0
    melting = 0
    for timestamp in np.arange(0.0, duration, cadence):
        changed = False
        while state + 1 < len(script) and script[state + 1][0] <= timestamp:
            state += 1
            changed = True

        entry = script[state]
        dark = set(entry[1])
        count = entry[2] if len(entry) > 2 else ions  # noqa: PLR2004
        if changed:
            melting = melt_frames

        frame = background + noise * rng.standard_normal(length)
        if melting:
            melting -= 1
            frame += amplitude * 0.5 * np.exp(-0.5 * ((pixels - center) /
                                                      (0.25 * count * spacing)) ** 2)
        else:
            slots = center + (np.arange(count) - (count - 1) / 2.0) * spacing
            slots += jitter * rng.standard_normal(count)
            for slot, position in enumerate(slots):
                if slot not in dark:
                    frame += amplitude * np.exp(-0.5 * ((pixels - position) / width) ** 2)

        yield float(timestamp), frame


#
# Input and output.
#

def load_frame_series(manifest_path):
    """Read a frame series described by a JSON manifest.

    The manifest names the frame file (``.npy`` or CSV, one frame per row)
    and gives either the ``timestamps`` or the ``cadence``. Returns the
    series and the manifest.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
        frames_path = manifest_path.parent / manifest['frames']
        if frames_path.suffix == '.npy':
            frames = np.load(frames_path)
        else:
            frames = np.loadtxt(frames_path, delimiter=',', ndmin=2)
    except (OSError, KeyError, ValueError) as exc:
        msg = f'cannot load the frame series of {manifest_path}: {exc}'
        raise ValidationError(msg) from exc

    if 'timestamps' in manifest:
        timestamps = manifest['timestamps']
    else:
        timestamps = np.arange(len(frames)) * manifest.get('cadence', 5.0)

    return FrameSeries(timestamps, frames, manifest.get('pixel_pitch')), manifest


def write_events_csv(events, path, comments=()):
    """Write the events to the CSV file at ``path``."""
    with Path(path).open('w', newline='', encoding='utf-8') as outfile:
        outfile.writelines(f'# {line}\n' for line in comments)
        writer = csv.writer(outfile)
        writer.writerow(['timestamp', 'kind', 'segment', 'dark_before', 'dark_after'])
        for event in events:
            writer.writerow([
                event.timestamp, event.kind, event.segment,
                ' '.join(map(str, event.before.dark_slots)),
                ' '.join(map(str, event.after.dark_slots)),
            ])


def write_histogram_csv(statistics, path, comments=()):
    """Write the interval histogram to the CSV file at ``path``."""
    with Path(path).open('w', newline='', encoding='utf-8') as outfile:
        outfile.writelines(f'# {line}\n' for line in comments)
        writer = csv.writer(outfile)
        writer.writerow(['bin_start_s', 'bin_end_s', 'count'])
        for start, end, count in zip(statistics.bin_edges[:-1], statistics.bin_edges[1:],
                                     statistics.histogram, strict=True):
            writer.writerow([float(start), float(end), int(count)])


def reorder_defaults(presets=None):
    """Return the 'reorder' presets section."""
    return (presets or load_presets())['reorder']
