"""The module contains the command-line front end of the toolkit.

Every subcommand writes its results into the output directory as JSON (and
CSV side tables), each file carrying the manifest of the run. The exit code
is 0 on success, 2 on invalid input and 3 on a computation failure.
"""

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from xhv import __version__, chain, gauge, mcflow, outgas, reorder
from xhv.config import load_config
from xhv.constants import DAY, HOUR, INCH, pa_to_mbar
from xhv.core.clausing import clausing_transmission
from xhv.exceptions import ComputationError, ValidationError
from xhv.geom import assemblies
from xhv.geom.builders import build_tube
from xhv.geom.io import load_scene
from xhv.geom.scene import Gas

LOGGER = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3

ASSEMBLIES = ('chamber-large', 'chamber-small', 'pump-tube', 'full-system')

SWEEP_KNOBS = {
    'pump-tube': ('tube_diameter', 'tube_length'),
    'chamber': ('port_diameter',),
}

UNITS = {'m': 1.0, 'in': INCH}

_NOT_OVERRIDES = frozenset(('command', 'handler', 'verbose', 'out', 'format', 'seed', 'workers'))


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """The class represents what a run was given: its subcommand, input
    files, parameters, output directory and seed.
    """

    subcommand: str
    inputs: dict
    overrides: dict
    output: str
    seed: int
    version: str = __version__

    @classmethod
    def from_args(cls, args, seed):
        """Create a manifest from parsed command-line arguments."""
        inputs, overrides = {}, {}
        for name, value in sorted(vars(args).items()):
            if name in _NOT_OVERRIDES or value is None:
                continue

            if isinstance(value, Path):
                inputs[name] = str(value)
            else:
                overrides[name] = value

        return cls(args.command, inputs, overrides, str(args.out), seed)

    def check_inputs(self):
        """Make sure every input file exists."""
        for name, path in self.inputs.items():
            if not Path(path).is_file():
                msg = f'{name}: no such file {path}'
                raise ValidationError(msg)

    def as_dict(self):
        """Return the manifest as a JSON-ready dict."""
        return _jsonable(dataclasses.asdict(self))

    def comment(self):
        """Return the manifest as a one-line comment for CSV files."""
        return 'manifest ' + json.dumps(self.as_dict(), sort_keys=True)


def _jsonable(value):
    """Convert numpy values to Python ones and non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}

    if isinstance(value, list | tuple | np.ndarray):
        return [_jsonable(v) for v in value]

    if isinstance(value, np.bool_):
        return bool(value)

    if isinstance(value, np.integer):
        return int(value)

    if isinstance(value, float | np.floating):
        value = float(value)
        return value if math.isfinite(value) else None

    return value


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, ValueError) as exc:
        msg = f'cannot read {path}: {exc}'
        raise ValidationError(msg) from exc


class Run:
    """The class represents one invocation of a subcommand."""

    def __init__(self, args):
        """Initialize a Run object."""
        self.args = args
        self.presets = load_config(args.config)
        seed = self.presets['simulation']['seed'] if args.seed is None else args.seed
        self.manifest = RunManifest.from_args(args, seed)
        self.manifest.check_inputs()
        self.out = Path(args.out)
        self.written = []

    #
    # Internal methods.
    #

    def _path(self, name, suffix):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f'{name}.{suffix}'
        self.written.append(path)
        return path

    #
    # User visible methods.
    #

    @property
    def gas(self):
        """Return the gas of the presets."""
        return Gas.from_amu(**self.presets['gas'])

    def sim_config(self):
        """Return the simulation parameters of the run."""
        return mcflow.SimConfig.from_presets(
            self.presets, particles=self.args.particles, seed=self.manifest.seed,
            workers=self.args.workers,
        )

    def write_json(self, name, payload):
        """Write ``payload`` with the manifest to ``name``.json."""
        document = _jsonable({'manifest': self.manifest.as_dict(), **payload})
        text = json.dumps(document, sort_keys=True, indent=2, allow_nan=False)
        self._path(name, 'json').write_text(text + '\n', encoding='utf-8')

    def write_table(self, name, rows):
        """Write the records ``rows`` to ``name``.csv or ``name``.json,
        depending on the requested format.
        """
        if self.args.format == 'json':
            self.write_json(name, {'rows': rows})
            return

        with self._path(name, 'csv').open('w', newline='', encoding='utf-8') as outfile:
            outfile.write(f'# {self.manifest.comment()}\n')
            if rows:
                writer = csv.DictWriter(outfile, fieldnames=list(rows[0]))
                writer.writeheader()
                writer.writerows(_jsonable(rows))

    def csv_path(self, name):
        """Return the path of the CSV side table ``name``."""
        return self._path(name, 'csv')


#
# Geometry.
#

def _pump_sticking(run):
    """Return the sticking of the getter cartridge, calibrated when a
    nominal speed is given.
    """
    args = run.args
    if args.nominal_speed is None:
        return args.sticking

    cartridge = assemblies.pump_cartridge(presets=run.presets, gas=run.gas)
    calibration = mcflow.calibrate_sticking(cartridge, args.nominal_speed,
                                            config=run.sim_config())
    LOGGER.info('Getter sticking %.5f for %.4g l/s', calibration.sticking, args.nominal_speed)
    return calibration.sticking


def _assembly(run, name, sticking=1.0, **knobs):
    args = run.args
    if name in {'chamber-large', 'chamber-small'}:
        port = knobs.get('port_diameter', name.removeprefix('chamber-'))
        return assemblies.spherical_square_chamber(port, args.outgassing, presets=run.presets,
                                                   gas=run.gas)

    if name == 'pump-tube':
        return assemblies.pump_in_tube(knobs.get('tube_diameter', args.tube_diameter),
                                       knobs.get('tube_length', args.tube_length), sticking,
                                       presets=run.presets, gas=run.gas)

    return assemblies.full_system(args.outgassing, holder_gap=args.holder_gap,
                                  presets=run.presets, gas=run.gas)


def _scene(run):
    args = run.args
    if args.scene is not None:
        return load_scene(args.scene)

    if args.assembly is None:
        msg = 'give a scene file or an --assembly'
        raise ValidationError(msg)

    sticking = _pump_sticking(run) if args.assembly == 'pump-tube' else 1.0
    return _assembly(run, args.assembly, sticking)


def _speed_payload(speed, port):
    return {
        'port': port,
        'speed_l_s': speed.speed,
        'standard_error_l_s': speed.standard_error,
        'transmission': speed.transmission.probability,
        'transmission_se': speed.transmission.standard_error,
        'port_area_m2': speed.port_area,
        'particles': speed.transmission.particles,
        'warnings': speed.transmission.warnings,
    }


#
# Subcommands.
#

def cmd_simulate(run):
    """Simulate a scene: the steady state of its outgassing, or the
    effective pumping speed through a port.
    """
    args = run.args
    scene = _scene(run)
    config = run.sim_config()
    if args.port is not None:
        speed = mcflow.effective_pumping_speed(scene, args.port, config)
        run.write_json('speed', _speed_payload(speed, args.port))
        return

    result = mcflow.trace(scene, config)
    result.to_csv(run.csv_path('facets'), [run.manifest.comment()])
    run.write_json('summary', result.summary())


def cmd_sweep(run):
    """Repeat a template simulation over the values of one knob."""
    args = run.args
    if args.parameter not in SWEEP_KNOBS[args.template]:
        valid = ', '.join(SWEEP_KNOBS[args.template])
        msg = f'unknown {args.template} parameter {args.parameter!r}; valid knobs: {valid}'
        raise ValidationError(msg)

    config = run.sim_config()
    sticking = _pump_sticking(run) if args.template == 'pump-tube' else 1.0
    name = 'pump-tube' if args.template == 'pump-tube' else 'chamber-large'
    rows = []
    for value in args.values:
        scene = _assembly(run, name, sticking, **{args.parameter: value * UNITS[args.unit]})
        if args.template == 'pump-tube':
            speed = mcflow.effective_pumping_speed(scene, 'inlet', config)
            rows.append({'value': value, 'speed_l_s': speed.speed,
                         'standard_error_l_s': speed.standard_error})
        else:
            pressure, error = mcflow.trace(scene, config).plane_pressure('roi')
            rows.append({'value': value, 'roi_pressure_mbar': pa_to_mbar(pressure),
                         'roi_pressure_se_mbar': pa_to_mbar(error)})

        LOGGER.info('%s = %g %s: %s', args.parameter, value, args.unit, rows[-1])

    run.write_table('sweep', rows)


def cmd_transmission(run):
    """Estimate the transmission probability of a tube or between two ports
    of a scene.
    """
    args = run.args
    payload = {}
    if args.scene is not None:
        scene = load_scene(args.scene)
        entry, exit_ = args.entry, args.exit
    else:
        length = args.length_over_diameter * args.diameter
        scene = build_tube(args.diameter, length, args.resolution, gas=run.gas)
        entry, exit_ = 'inlet', 'outlet'
        payload['length_over_diameter'] = args.length_over_diameter
        payload['clausing'] = clausing_transmission(args.length_over_diameter)

    result = mcflow.transmission_probability(scene, entry, exit_, run.sim_config())
    payload.update({
        'entry': entry,
        'exit': exit_,
        'probability': result.probability,
        'standard_error': result.standard_error,
        'particles': result.particles,
        'warnings': result.warnings,
    })
    run.write_json('transmission', payload)


def cmd_calibrate_pump(run):
    """Calibrate the sticking of the getter cartridge to its nominal speed."""
    args = run.args
    nominal = args.nominal_speed or run.presets['pumps']['z1000']['nominal_speed']
    cartridge = assemblies.pump_cartridge(presets=run.presets, gas=run.gas)
    calibration = mcflow.calibrate_sticking(cartridge, nominal, config=run.sim_config(),
                                            iterations=args.iterations)
    run.write_json('calibration', {
        'nominal_speed_l_s': nominal,
        'sticking': calibration.sticking,
        'speed_l_s': calibration.speed,
        'standard_error_l_s': calibration.standard_error,
        'max_speed_l_s': calibration.max_speed,
        'history': [list(step) for step in calibration.history],
    })


def cmd_calibrate_holder(run):
    """Calibrate the trap-holder gap to the measured ratio between the
    pressure at the ions and the gauge reading.
    """
    args = run.args
    calibration = mcflow.calibrate_holder_gap(
        args.ratio, args.outgassing, run.sim_config(), bounds=(args.min_gap, args.max_gap),
        iterations=args.iterations, presets=run.presets, gas=run.gas,
    )
    run.write_json('holder_calibration', {
        'target_ratio': args.ratio,
        'holder_gap_m': calibration.gap,
        'ratio': calibration.ratio,
        'standard_error': calibration.standard_error,
        'gauge_pressure_mbar': calibration.gauge_pressure,
        'history': [list(step) for step in calibration.history],
    })


def _heat_treatment(run):
    args = run.args
    part = run.presets['heat_treatment'][args.part]
    area = args.area or part['area_cm2']
    speed = args.speed or part['turbo_speed']
    return part, area, speed


def _temperatures(run):
    section = run.presets['outgas']
    room = run.args.room_temperature or section['room_temperature']
    hot = run.args.ht_temperature or section['heat_treatment_temperature']
    return room, hot


def cmd_outgas_plan(run):
    """Tabulate the outgassing rate and pressure through a bake schedule."""
    args = run.args
    slab = outgas.MaterialSlab.from_presets(run.presets)
    _, area, speed = _heat_treatment(run)
    room, hot = _temperatures(run)
    segments = args.segment or [(hot, args.default_days * DAY)]
    schedule = outgas.BakeSchedule(tuple(segments), speed, area)
    rows = [
        {'time_h': t / HOUR, 'temperature_k': temperature, 'q_mbar_l_s_cm2': q,
         'pressure_mbar': p}
        for t, temperature, q, p in outgas.plan_bake(slab, schedule, args.points)
    ]
    run.write_table('bake_plan', rows)

    last_temperature = segments[-1][0]
    summary = {
        'segments': [list(segment) for segment in segments],
        'area_cm2': area,
        'speed_l_s': speed,
        'final_q_mbar_l_s_cm2': rows[-1]['q_mbar_l_s_cm2'],
        'final_pressure_mbar': rows[-1]['pressure_mbar'],
        'decay_constant_days': outgas.decay_constant(slab, last_temperature) / DAY,
        'rt_ht_ratio': outgas.rt_ht_ratio(room, last_temperature, slab),
    }
    if args.target is not None:
        duration = outgas.bake_duration_for_target(slab, last_temperature, args.target, room)
        summary['target_q_rt'] = args.target
        summary['bake_days_for_target'] = duration / DAY
        summary['target_ht_pressure_mbar'] = outgas.target_ht_pressure(
            args.target, area, speed, room, last_temperature, slab)

    run.write_json('bake_summary', summary)


def cmd_estimate_q(run):
    """Estimate the room-temperature outgassing rate from the pressure
    reached at the end of the heat treatment.
    """
    args = run.args
    slab = outgas.MaterialSlab.from_presets(run.presets)
    part, area, speed = _heat_treatment(run)
    room, hot = _temperatures(run)
    pressure = args.pressure or part['pressure_mbar']
    oxide = args.oxide_factor or run.presets['outgas']['oxide_factor']
    payload = {
        'part': args.part,
        'pressure_ht_mbar': pressure,
        'area_cm2': area,
        'speed_l_s': speed,
        'room_temperature': room,
        'heat_treatment_temperature': hot,
        'oxide_factor': oxide,
        'rt_ht_ratio': outgas.rt_ht_ratio(room, hot, slab),
        'q_rt': outgas.estimate_q_rt(pressure, area, speed, room, hot, oxide, slab),
    }
    if args.target is not None:
        payload['target_q_rt'] = args.target
        payload['target_ht_pressure_mbar'] = outgas.target_ht_pressure(
            args.target, area, speed, room, hot, slab)

    run.write_json('outgassing', payload)


def _trap(run):
    args = run.args
    overrides = {'ions': args.ions}
    if args.frequencies is not None:
        overrides.update(zip(('omega_x', 'omega_y', 'omega_z'),
                             (2.0 * math.pi * 1e6 * f for f in args.frequencies), strict=True))

    return chain.TrapConfig.from_presets(run.presets, **overrides)


def cmd_chain_barrier(run):
    """Tabulate the reorder barrier of every neighbouring pair."""
    config = _trap(run)
    workers = run.args.workers or mcflow.default_workers()
    profile = chain.barrier_profile(config, workers)
    run.write_table('barriers', [
        {'pair': i, 'barrier_ev': barrier, 'barrier_mev': barrier * 1e3}
        for i, barrier in profile
    ])
    pair, barrier = max(profile, key=lambda row: row[1])
    run.write_json('barrier_summary', {
        'ions': config.ions,
        'max_barrier_ev': barrier,
        'max_barrier_pair': pair,
        'edge': pair in {1, config.ions - 1},
    })


def cmd_chain_pressure(run):
    """Turn reorder statistics into a pressure at the ions."""
    args = run.args
    config = _trap(run)
    model = chain.CollisionModel.from_presets(run.presets)
    if args.barrier is None:
        workers = args.workers or mcflow.default_workers()
        barrier = max(b for _, b in chain.barrier_profile(config, workers))
    else:
        barrier = args.barrier

    duration = (args.duration_hours or 0.0) * HOUR
    observation = chain.ChainObservation(config.ions, args.dark, args.events or 0, duration)
    if args.interval_hours is not None:
        method = 'interval'
        estimate = chain.pressure_from_interval(
            args.interval_hours * HOUR, observation, model, barrier,
            (args.interval_error_hours or 0.0) * HOUR)
    elif args.rate is not None or duration > 0.0:
        method = 'rate'
        estimate = chain.pressure_from_rate(args.rate, observation, model, barrier)
    else:
        msg = 'give --interval-hours, --rate or --events with --duration-hours'
        raise ValidationError(msg)

    payload = dataclasses.asdict(estimate)
    payload.update({
        'method': method,
        'ions': config.ions,
        'dark': args.dark,
        'collision_interval_hours_per_ion': chain.hours(estimate.collision_interval_per_ion),
        'langevin_rate_coefficient': chain.langevin_rate_coefficient(model),
    })
    run.write_json('chain_pressure', payload)


def cmd_detect_reorders(run):
    """Detect reorder events in a frame series and summarize their
    intervals.
    """
    args = run.args
    defaults = reorder.reorder_defaults(run.presets)
    series, manifest = reorder.load_frame_series(args.manifest)
    ions = args.ions or manifest.get('ions') or run.presets['trap']['ions']
    k = args.k or defaults['threshold_k']
    configurations = reorder.detect_series(series, ions, args.center, k)
    events = reorder.classify_transitions(configurations, series.timestamps,
                                          args.max_gap or defaults['max_ambiguous_gap_s'])

    if args.format == 'csv':
        reorder.write_events_csv(events, run.csv_path('events'), [run.manifest.comment()])
    else:
        run.write_json('events', {'events': [
            {'timestamp': e.timestamp, 'kind': e.kind, 'segment': e.segment,
             'dark_before': e.before.dark_slots, 'dark_after': e.after.dark_slots}
            for e in events
        ]})

    valid = [c for c in configurations if c is not None]
    kinds = {}
    for event in events:
        kinds[event.kind] = kinds.get(event.kind, 0) + 1

    summary = {
        'frames': len(series),
        'ambiguous_frames': len(configurations) - len(valid),
        'ions': ions,
        'dark': valid[0].dark_count if valid else None,
        'events': kinds,
        'countable': sum(e.countable for e in events),
        'statistics': None,
        'observed_rate_per_s': None,
    }
    try:
        statistics = reorder.interval_statistics(events, ions,
                                                 args.bin_width or defaults['histogram_bin_s'])
    except reorder.InsufficientDataError as exc:
        LOGGER.warning('No interval statistics: %s', exc)
    else:
        reorder.write_histogram_csv(statistics, run.csv_path('histogram'),
                                    [run.manifest.comment()])
        summary['statistics'] = statistics.summary()
        summary['observed_rate_per_s'] = ions / statistics.mean_interval_per_ion

    run.write_json('reorder_summary', summary)


def cmd_gauge_fit(run):
    """Fit the pressure rise after the ion pump is switched off."""
    args = run.args
    trace, volume = gauge.load_trace(args.trace, args.manifest, run.presets)
    fit = gauge.fit_nongetterable(trace, volume)
    speed = args.ion_pump_speed or run.presets['gauge']['ion_pump_ng_speed']
    payload = fit.summary()
    payload.update({
        'volume_l': volume,
        'covariance': fit.covariance,
        'ion_pump_ng_speed_l_s': speed,
        'ng_partial_pressure_mbar': gauge.ng_partial_pressure(fit.q_ng, speed),
    })
    run.write_json('gauge_fit', payload)


def _simulation_report(path, gauge_group, roi_group):
    section = dict.fromkeys(('outgassing', 'gauge_pressure_mbar', 'gauge_pressure_se_mbar',
                             'roi_pressure_mbar', 'roi_pressure_se_mbar', 'roi_to_gauge_ratio',
                             'ratio_standard_error'))
    if path is None:
        return section

    summary = _read_json(path)
    groups = summary.get('groups', {})
    for label, tag in (('gauge', gauge_group), ('roi', roi_group)):
        if tag in groups:
            section[f'{label}_pressure_mbar'] = groups[tag]['pressure_mbar']
            section[f'{label}_pressure_se_mbar'] = groups[tag]['pressure_se_mbar']

    section['outgassing'] = summary.get('manifest', {}).get('overrides', {}).get('outgassing')
    gauge_p, roi_p = section['gauge_pressure_mbar'], section['roi_pressure_mbar']
    if gauge_p and roi_p is not None:
        ratio = roi_p / gauge_p
        section['roi_to_gauge_ratio'] = ratio
        if roi_p:
            section['ratio_standard_error'] = ratio * math.hypot(
                section['roi_pressure_se_mbar'] / roi_p,
                section['gauge_pressure_se_mbar'] / gauge_p,
            )

    return section


def _pick(path, fields):
    if path is None:
        return dict.fromkeys(fields.values())

    document = _read_json(path)
    return {name: document.get(key) for key, name in fields.items()}


def cmd_report(run):
    """Aggregate the outputs of earlier runs into one design report."""
    args = run.args
    report = {
        'simulation': _simulation_report(args.simulation, args.gauge_group, args.roi_group),
        'outgassing': _pick(args.outgassing_estimate, {
            'q_rt': 'q_rt', 'pressure_ht_mbar': 'pressure_ht_mbar', 'part': 'part',
        }),
        'chain': _pick(args.chain, {
            'pressure': 'pressure_mbar', 'standard_error': 'pressure_se_mbar',
            'collision_interval_hours_per_ion': 'collision_interval_hours_per_ion',
            'barrier': 'barrier_ev',
        }),
        'gauge': _pick(args.gauge_fit, {
            'p_base_mbar': 'p_base_mbar', 'q_ng_mbar_l_s': 'q_ng_mbar_l_s',
            'ng_partial_pressure_mbar': 'ng_partial_pressure_mbar',
        }),
    }
    roi_p = report['simulation']['roi_pressure_mbar']
    chain_p = report['chain']['pressure_mbar']
    report['chain_to_roi_ratio'] = chain_p / roi_p if roi_p and chain_p is not None else None
    run.write_json('report', report)


#
# Argument parsing.
#

def _segment(text):
    """Parse a TEMPERATURE_K:HOURS bake segment."""
    try:
        temperature, duration = (float(part) for part in text.split(':'))
    except ValueError:
        msg = f'expected TEMPERATURE_K:HOURS, got {text!r}'
        raise argparse.ArgumentTypeError(msg) from None

    return temperature, duration * HOUR


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='YAML file overriding the presets')
    common.add_argument('--out', default='.', help='output directory')
    common.add_argument('--format', choices=('json', 'csv'), default='json',
                        help='format of the tables')
    common.add_argument('--seed', type=int)
    common.add_argument('--particles', type=int)
    common.add_argument('--workers', type=int,
                        help=f'worker processes (default ${mcflow.WORKERS_VARIABLE} or 1)')
    common.add_argument('-v', '--verbose', action='store_true')
    return common


def _add_geometry(parser):
    source = parser.add_mutually_exclusive_group()
    source.add_argument('scene', nargs='?', type=Path, help='scene file')
    source.add_argument('--assembly', choices=ASSEMBLIES)
    _add_assembly_knobs(parser)


def _add_assembly_knobs(parser):
    parser.add_argument('--outgassing', type=float, default=1e-14,
                        help='specific outgassing rate, mbar l s^-1 cm^-2')
    parser.add_argument('--tube-diameter', type=float, default=4.0 * INCH, help='m')
    parser.add_argument('--tube-length', type=float, help='m')
    parser.add_argument('--sticking', type=float, default=1.0, help='getter sticking')
    parser.add_argument('--nominal-speed', type=float,
                        help='calibrate the getter sticking to this speed, l/s')
    parser.add_argument('--holder-gap', type=float,
                        help='gap between the trap holder and the chamber floor, m')


def build_parser():
    """Return the argument parser of xhvctl."""
    parser = argparse.ArgumentParser(prog='xhvctl', description=__doc__.splitlines()[0])
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)
    common = _common_parser()

    def add(name, handler, help_text):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    sub = add('simulate', cmd_simulate, 'simulate a scene')
    _add_geometry(sub)
    sub.add_argument('--port', help='measure the effective pumping speed through this port')

    sub = add('sweep', cmd_sweep, 'repeat a template simulation over one knob')
    sub.add_argument('template', choices=tuple(SWEEP_KNOBS))
    sub.add_argument('parameter', choices=sorted({k for v in SWEEP_KNOBS.values() for k in v}))
    sub.add_argument('values', type=float, nargs='+')
    sub.add_argument('--unit', choices=tuple(UNITS), default='m')
    _add_assembly_knobs(sub)

    sub = add('transmission', cmd_transmission, 'estimate a transmission probability')
    source = sub.add_mutually_exclusive_group(required=True)
    source.add_argument('scene', nargs='?', type=Path, help='scene file')
    source.add_argument('--length-over-diameter', type=float)
    sub.add_argument('--diameter', type=float, default=INCH, help='tube diameter, m')
    sub.add_argument('--resolution', type=int, default=32)
    sub.add_argument('--entry', default='inlet')
    sub.add_argument('--exit', default='outlet')

    sub = add('calibrate-pump', cmd_calibrate_pump, 'calibrate the getter sticking')
    sub.add_argument('--nominal-speed', type=float, help='l/s')
    sub.add_argument('--iterations', type=int, default=12)

    sub = add('calibrate-holder', cmd_calibrate_holder, 'calibrate the trap-holder gap')
    sub.add_argument('--ratio', type=float, default=3.0,
                     help='pressure at the ions over the gauge reading')
    sub.add_argument('--outgassing', type=float, default=1e-14,
                     help='specific outgassing rate, mbar l s^-1 cm^-2')
    sub.add_argument('--min-gap', type=float, default=1e-3, help='m')
    sub.add_argument('--max-gap', type=float, default=4e-2, help='m')
    sub.add_argument('--iterations', type=int, default=10)

    for name, handler, help_text in (
            ('outgas-plan', cmd_outgas_plan, 'tabulate a bake schedule'),
            ('estimate-q', cmd_estimate_q, 'estimate the room-temperature outgassing rate')):
        sub = add(name, handler, help_text)
        sub.add_argument('--part', choices=('chamber', 'cube'), default='chamber')
        sub.add_argument('--area', type=float, help='cm^2')
        sub.add_argument('--speed', type=float, help='l/s')
        sub.add_argument('--room-temperature', type=float, help='K')
        sub.add_argument('--ht-temperature', type=float, help='K')
        sub.add_argument('--target', type=float, help='room-temperature target, '
                                                      'mbar l s^-1 cm^-2')

    sub = subparsers.choices['outgas-plan']
    sub.add_argument('--segment', type=_segment, action='append',
                     help='TEMPERATURE_K:HOURS, repeatable')
    sub.add_argument('--default-days', type=float, default=10.0,
                     help='length of the default single segment')
    sub.add_argument('--points', type=int, default=10, help='rows per segment')

    sub = subparsers.choices['estimate-q']
    sub.add_argument('--pressure', type=float, help='pressure at the end of the treatment, mbar')
    sub.add_argument('--oxide-factor', type=float)

    for name, handler, help_text in (
            ('chain-barrier', cmd_chain_barrier, 'tabulate the reorder barriers'),
            ('chain-pressure', cmd_chain_pressure, 'turn reorder statistics into a pressure')):
        sub = add(name, handler, help_text)
        sub.add_argument('--ions', type=int)
        sub.add_argument('--frequencies', type=float, nargs=3, metavar=('FX', 'FY', 'FZ'),
                         help='trap frequencies, MHz')

    sub = subparsers.choices['chain-pressure']
    sub.add_argument('--dark', type=int, required=True)
    sub.add_argument('--barrier', type=float, help='eV (default: the largest pair barrier)')
    sub.add_argument('--interval-hours', type=float,
                     help='corrected mean collision interval per ion')
    sub.add_argument('--interval-error-hours', type=float)
    sub.add_argument('--rate', type=float, help='observed chain-level reorder rate, 1/s')
    sub.add_argument('--events', type=int)
    sub.add_argument('--duration-hours', type=float)

    sub = add('detect-reorders', cmd_detect_reorders, 'detect reorder events in frames')
    sub.add_argument('manifest', type=Path, help='JSON manifest of the frame series')
    sub.add_argument('--ions', type=int)
    sub.add_argument('--center', type=float, help='chain centre, pixels')
    sub.add_argument('--k', type=float, help='peak threshold in noise units')
    sub.add_argument('--bin-width', type=float, help='histogram bin, s')
    sub.add_argument('--max-gap', type=float, help='longest bridged ambiguous run, s')

    sub = add('gauge-fit', cmd_gauge_fit, 'fit the non-getterable gas load')
    sub.add_argument('trace', type=Path, help='CSV of t (s), P (mbar)')
    sub.add_argument('manifest', type=Path, help='JSON manifest of the trace')
    sub.add_argument('--ion-pump-speed', type=float,
                     help='ion pump speed for non-getterable gases, l/s')

    sub = add('report', cmd_report, 'aggregate earlier outputs into a design report')
    sub.add_argument('--simulation', type=Path, help='summary.json of a simulate run')
    sub.add_argument('--outgassing-estimate', type=Path, help='outgassing.json of estimate-q')
    sub.add_argument('--chain', type=Path, help='chain_pressure.json of chain-pressure')
    sub.add_argument('--gauge-fit', type=Path, help='gauge_fit.json of gauge-fit')
    sub.add_argument('--gauge-group', default='gauge')
    sub.add_argument('--roi-group', default='roi')
    return parser


def main(argv=None):
    """Run xhvctl and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    try:
        run = Run(args)
        args.handler(run)
    except ValidationError as exc:
        LOGGER.error('%s', exc)  # noqa: TRY400
        return EXIT_VALIDATION
    except ComputationError as exc:
        LOGGER.error('%s', exc)  # noqa: TRY400
        return EXIT_COMPUTATION

    for path in run.written:
        sys.stdout.write(f'{path}\n')

    return 0
