"""The module contains the tests for the command-line front end."""

import contextlib
import csv
import io
import json

import numpy as np

from tests.helper import Helper, box_with_port, scripted_reorders
from xhv import __version__
from xhv.cli import EXIT_COMPUTATION, EXIT_VALIDATION, main
from xhv.core.clausing import clausing_transmission
from xhv.gauge import synthesize_trace
from xhv.geom.builders import build_box
from xhv.geom.io import save_scene
from xhv.outgas import estimate_q_rt
from xhv.reorder import BRIGHT_TO_DARK, DARK_TO_BRIGHT, REORDER, synthesize_frames


class TestCommandLine(Helper):
    """The class implements the tests for the xhvctl subcommands."""

    def _run(self, *argv, out=None):
        """A helper that runs xhvctl writing into ``out`` and returns the exit
        code and the printed paths.
        """
        out = out or self._tmp / 'out'
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout):
            code = main([*argv, '--out', str(out)])

        return code, stdout.getvalue().split()

    def _load(self, name, out=None):
        """A helper that reads the JSON output ``name``."""
        out = out or self._tmp / 'out'
        return json.loads((out / name).read_text(encoding='utf-8'))

    def _check_manifest(self, document, subcommand, seed):
        """A helper that checks if ``document`` carries the manifest of the
        run.
        """
        manifest = document['manifest']
        self.assertEqual(subcommand, manifest['subcommand'])
        self.assertEqual(seed, manifest['seed'])
        self.assertEqual(__version__, manifest['version'])

    def test_transmission(self):
        """A short tube should transmit as the Clausing factor predicts."""
        code, written = self._run('transmission', '--length-over-diameter', '1',
                                  '--particles', '4000', '--seed', '5', '--resolution', '16')
        self.assertEqual(0, code)
        self.assertEqual([str(self._tmp / 'out' / 'transmission.json')], written)

        document = self._load('transmission.json')
        self._check_manifest(document, 'transmission', 5)
        self.assertEqual(1.0, document['manifest']['overrides']['length_over_diameter'])
        self.assertEqual(4000, document['particles'])
        self.assertAlmostEqual(clausing_transmission(1.0), document['clausing'])
        self.assertAlmostEqual(document['clausing'], document['probability'], delta=0.04)

    def test_same_seed_same_output(self):
        """Two runs with the same seed should produce the same results."""
        argv = ('transmission', '--length-over-diameter', '2', '--particles', '2000',
                '--seed', '11', '--resolution', '12')
        first, second = self._tmp / 'first', self._tmp / 'second'
        self.assertEqual(0, self._run(*argv, out=first)[0])
        self.assertEqual(0, self._run(*argv, out=second)[0])

        a = self._load('transmission.json', first)
        b = self._load('transmission.json', second)
        self.assertEqual(str(first), a['manifest']['output'])
        del a['manifest'], b['manifest']
        self.assertEqual(a, b)

    def test_simulate_scene_file(self):
        """Simulating a scene file should write the summary and the facet
        table.
        """
        scene = self._tmp / 'box.scene'
        save_scene(box_with_port(resolution=12), scene)
        code, _ = self._run('simulate', str(scene), '--particles', '2000', '--seed', '2',
                            '--format', 'csv')
        self.assertEqual(0, code)

        summary = self._load('summary.json')
        self._check_manifest(summary, 'simulate', 2)
        self.assertEqual({'scene': str(scene)}, summary['manifest']['inputs'])
        self.assertEqual(2000, summary['absorbed'] + summary['capped'] + summary['lost'] +
                         summary['leaked'])
        self.assertIn('pump_port', summary['groups'])

        lines = (self._tmp / 'out' / 'facets.csv').read_text(encoding='utf-8').splitlines()
        self.assertTrue(lines[0].startswith('# manifest '))

    def test_single_value_sweep(self):
        """A sweep over one value should repeat the plain simulation."""
        argv = ('--particles', '1000', '--seed', '3')
        self.assertEqual(0, self._run('sweep', 'chamber', 'port_diameter', '0.0984', *argv)[0])
        self.assertEqual(0, self._run('simulate', '--assembly', 'chamber-large', *argv)[0])

        rows = self._load('sweep.json')['rows']
        summary = self._load('summary.json')
        self.assertEqual(1, len(rows))
        self.assertEqual(0.0984, rows[0]['value'])
        self.assertEqual(summary['groups']['roi']['pressure_mbar'], rows[0]['roi_pressure_mbar'])

    def test_validation_errors(self):
        """Invalid input should exit with the validation code."""
        code, written = self._run('gauge-fit', str(self._tmp / 'missing.csv'),
                                  str(self._tmp / 'missing.json'))
        self.assertEqual(EXIT_VALIDATION, code)
        self.assertEqual([], written)

        config = self._write('typo.yaml', 'gass:\n  mass_amu: 4.0\n')
        code, _ = self._run('estimate-q', '--config', str(config))
        self.assertEqual(EXIT_VALIDATION, code)

        code, _ = self._run('sweep', 'chamber', 'tube_length', '0.1')
        self.assertEqual(EXIT_VALIDATION, code)

        code, _ = self._run('chain-pressure', '--dark', '3', '--barrier', '5e-4')
        self.assertEqual(EXIT_VALIDATION, code)

        with contextlib.redirect_stderr(io.StringIO()), self.assertRaises(SystemExit):
            main(['outgas-plan', '--segment', '673'])

    def test_computation_error(self):
        """A scene that cannot absorb should exit with the computation code."""
        scene = self._tmp / 'closed.scene'
        save_scene(build_box((0.1, 0.1, 0.1), (), 8, wall_outgassing=1e-9), scene)
        code, _ = self._run('simulate', str(scene), '--particles', '100')
        self.assertEqual(EXIT_COMPUTATION, code)

    def test_calibrate_holder_out_of_reach(self):
        """A ratio that no holder gap gives should exit with the computation
        code and write nothing.
        """
        code, written = self._run('calibrate-holder', '--ratio', '1000', '--particles', '4000',
                                  '--iterations', '1', '--seed', '5')
        self.assertEqual(EXIT_COMPUTATION, code)
        self.assertEqual([], written)

    def test_outgas_plan(self):
        """The bake plan should follow the given segments and carry the
        manifest in its CSV header.
        """
        code, _ = self._run('outgas-plan', '--segment', '573:24', '--segment', '673:24',
                            '--points', '5', '--format', 'csv', '--target', '1e-15')
        self.assertEqual(0, code)

        with (self._tmp / 'out' / 'bake_plan.csv').open(encoding='utf-8') as infile:
            self.assertTrue(infile.readline().startswith('# manifest '))
            rows = list(csv.DictReader(infile))

        self.assertEqual(10, len(rows))
        self.assertEqual(['573.0'] * 5 + ['673.0'] * 5, [row['temperature_k'] for row in rows])
        self.assertAlmostEqual(48.0, float(rows[-1]['time_h']))

        summary = self._load('bake_summary.json')
        self.assertEqual([[573.0, 86400.0], [673.0, 86400.0]], summary['segments'])
        self.assertAlmostEqual(summary['final_q_mbar_l_s_cm2'] * 1700.0 / 268.0,
                               summary['final_pressure_mbar'])
        self.assertGreater(summary['bake_days_for_target'], 0.0)

    def test_estimate_q(self):
        """The estimate should use the heat-treatment presets of the part."""
        self.assertEqual(0, self._run('estimate-q', '--part', 'cube')[0])
        document = self._load('outgassing.json')

        self._check_manifest(document, 'estimate-q', 0)
        self.assertEqual(4.8e-8, document['pressure_ht_mbar'])
        self.assertAlmostEqual(1.0, document['q_rt'] /
                               estimate_q_rt(4.8e-8, 2470.0, 162.5, 298.0, 673.0, 2.0),
                               places=12)

    def test_chain_pressure(self):
        """The corrected collision interval should give the pressure at the
        ions.
        """
        code, _ = self._run('chain-pressure', '--dark', '3', '--barrier', '5e-4',
                            '--interval-hours', '1.9', '--interval-error-hours', '0.19')
        self.assertEqual(0, code)

        document = self._load('chain_pressure.json')
        self.assertEqual('interval', document['method'])
        self.assertAlmostEqual(3.995, document['pressure'] * 1e12, delta=0.005)
        self.assertAlmostEqual(0.1 * document['pressure'], document['standard_error'])
        self.assertAlmostEqual(1.9, document['collision_interval_hours_per_ion'])

    def test_gauge_fit(self):
        """The rise fit should recover the parameters of a clean trace."""
        volume, s_g = 1000.0, 1000.0 / 625000.0
        trace = synthesize_trace(1e-12, 1.9e-11 * s_g, s_g, volume, 5 * 625000.0, 300)
        lines = ['t_s,p_mbar'] + [f'{t!r},{p!r}' for t, p in zip(trace.times.tolist(),
                                                                   trace.pressures.tolist(),
                                                                   strict=True)]
        data = self._write('rise.csv', '\n'.join(lines) + '\n')
        manifest = self._write('rise.json', json.dumps({'volume': volume, 'p_min': 0.0}))

        self.assertEqual(0, self._run('gauge-fit', str(data), str(manifest))[0])
        document = self._load('gauge_fit.json')

        self._check_close(document['p_base_mbar'], 1e-12, 1e-4)
        self._check_close(document['q_ng_mbar_l_s'], 1.9e-11 * s_g, 1e-4)
        self._check_close(document['ng_partial_pressure_mbar'], 1.9e-11 * s_g / 10.0, 1e-4)
        self.assertEqual({'trace': str(data), 'manifest': str(manifest)},
                         document['manifest']['inputs'])

    def test_detect_reorders(self):
        """The detection should count the scripted events and write their
        interval histogram.
        """
        script, kinds, intervals = scripted_reorders(12, 120.0)
        duration = float(np.sum(intervals)) + 60.0
        frames = np.stack([f for _, f in synthesize_frames(20, script, duration,
                                                          melt_frames=1, seed=4)])
        np.save(self._tmp / 'frames.npy', frames)
        manifest = self._write('series.json', json.dumps({'frames': 'frames.npy',
                                                          'cadence': 5.0, 'ions': 20}))

        self.assertEqual(0, self._run('detect-reorders', str(manifest))[0])
        events = self._load('events.json')['events']
        summary = self._load('reorder_summary.json')

        self.assertEqual(kinds, [e['kind'] for e in events])
        self.assertEqual({REORDER: 11, BRIGHT_TO_DARK: 1, DARK_TO_BRIGHT: 1},
                         summary['events'])
        self.assertEqual(12, summary['countable'])
        self.assertEqual(3, summary['dark'])
        self.assertEqual(len(frames), summary['frames'])
        self.assertIsNotNone(summary['statistics'])
        self.assertTrue((self._tmp / 'out' / 'histogram.csv').is_file())

    def test_report(self):
        """The report should combine the outputs of earlier runs."""
        self.assertEqual(0, self._run('estimate-q')[0])
        self.assertEqual(0, self._run('chain-pressure', '--dark', '3', '--barrier', '5e-4',
                                      '--interval-hours', '1.9')[0])
        simulation = self._write('summary.json', json.dumps({
            'manifest': {'overrides': {'outgassing': 1e-14}},
            'groups': {
                'gauge': {'pressure_mbar': 2e-12, 'pressure_se_mbar': 2e-14},
                'roi': {'pressure_mbar': 4e-12, 'pressure_se_mbar': 4e-14},
            },
        }))
        out = self._tmp / 'out'
        code, _ = self._run('report', '--simulation', str(simulation),
                            '--outgassing-estimate', str(out / 'outgassing.json'),
                            '--chain', str(out / 'chain_pressure.json'))
        self.assertEqual(0, code)

        report = self._load('report.json')
        self.assertAlmostEqual(2.0, report['simulation']['roi_to_gauge_ratio'])
        self.assertAlmostEqual(2.0 * 0.01 * 2 ** 0.5,
                               report['simulation']['ratio_standard_error'])
        self.assertEqual(1e-14, report['simulation']['outgassing'])
        self.assertEqual('chamber', report['outgassing']['part'])
        self.assertIsNone(report['gauge']['p_base_mbar'])
        self.assertAlmostEqual(report['chain']['pressure_mbar'] / 4e-12,
                               report['chain_to_roi_ratio'])
