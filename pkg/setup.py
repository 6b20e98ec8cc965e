"""The builds the xhv package."""

from setuptools import setup

try:
    import pypandoc
    long_description = pypandoc.convert('README.md', 'rst')
except ImportError:
    long_description = ('xhv is a design and validation toolkit for extreme-high-vacuum '
                        'systems: a molecular-flow Monte Carlo simulator, an outgassing '
                        'model, and pressure estimates from trapped-ion reorder events and '
                        'gauge traces.')


setup(name='xhv',
      version='0.1',
      description='Extreme-high-vacuum design and validation toolkit',
      long_description=long_description,
      license='http://www.apache.org/licenses/LICENSE-2.0',
      scripts=['bin/xhvctl.py'],
      packages=['xhv', 'xhv.core', 'xhv.geom', 'xhv.mixins'],
      package_data={'xhv': ['presets.json']},
      python_requires='>=3.12',
      install_requires=[
          'numpy',
          'PyYAML',
          'scipy',
      ])
