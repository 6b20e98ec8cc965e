"""The module contains the tests for the presets and the override files."""

from tests.helper import Helper
from xhv.config import load_config, load_presets, merge
from xhv.exceptions import ValidationError


class TestConfig(Helper):
    """The class implements the tests for the configuration layer."""

    def test_presets_are_copies(self):
        """Every call should return an independent copy of the presets."""
        presets = load_presets()
        presets['gas']['mass_amu'] = 4.0
        presets['trap']['frequencies_mhz'].append(1.0)

        fresh = load_presets()
        self.assertEqual(2.016, fresh['gas']['mass_amu'])
        self.assertEqual(3, len(fresh['trap']['frequencies_mhz']))

    def test_presets_content(self):
        """The shipped presets should carry the documented defaults."""
        presets = load_presets()
        self.assertEqual(20, presets['trap']['ions'])
        self.assertEqual(1.5e-12, presets['gauge']['p_min_mbar'])
        self.assertEqual(5.0, presets['reorder']['threshold_k'])
        self.assertEqual(1250.0, presets['pumps']['z1000']['nominal_speed'])

    def test_merge(self):
        """Merging should replace leaves and recurse into sections."""
        base = {'a': 1, 'b': {'c': 2, 'd': 3}}
        merged = merge(base, {'b': {'d': 4}})

        self.assertIs(base, merged)
        self.assertEqual({'a': 1, 'b': {'c': 2, 'd': 4}}, merged)

    def test_merge_rejects_unknown_keys(self):
        """Unknown keys should be rejected with their dotted path."""
        with self.assertRaisesRegex(ValidationError, "'b.e'"):
            merge({'b': {'c': 1}}, {'b': {'e': 2}})

        with self.assertRaisesRegex(ValidationError, 'must be a mapping'):
            merge({'b': {'c': 1}}, {'b': 3})

    def test_load_config(self):
        """A YAML file should override the matching presets only."""
        path = self._write('override.yaml', 'gas:\n  mass_amu: 4.0026\ntrap:\n  ions: 12\n')
        config = load_config(path)

        self.assertEqual(4.0026, config['gas']['mass_amu'])
        self.assertEqual(293.0, config['gas']['temperature'])
        self.assertEqual(12, config['trap']['ions'])

    def test_load_config_without_file(self):
        """No file and an empty file should both give the presets."""
        self.assertEqual(load_presets(), load_config())
        self.assertEqual(load_presets(), load_config(self._write('empty.yaml', '')))

    def test_load_config_errors(self):
        """Missing, malformed and non-mapping files should be rejected."""
        with self.assertRaisesRegex(ValidationError, 'cannot read'):
            load_config(self._tmp / 'missing.yaml')

        with self.assertRaisesRegex(ValidationError, 'malformed'):
            load_config(self._write('bad.yaml', 'gas: [1, 2\n'))

        with self.assertRaisesRegex(ValidationError, 'must contain a mapping'):
            load_config(self._write('list.yaml', '- 1\n- 2\n'))

        with self.assertRaisesRegex(ValidationError, 'unknown configuration key'):
            load_config(self._write('typo.yaml', 'gass:\n  mass_amu: 4.0\n'))
