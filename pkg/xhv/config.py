"""The module loads the shipped presets and merges user overrides into them."""

import copy
import functools
import json
import logging
import re
from pathlib import Path

import yaml

from xhv.exceptions import ValidationError

LOGGER = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).parent / 'presets.json'


@functools.cache
def _read_presets():
    text = PRESETS_PATH.read_text(encoding='utf-8')
    text = re.sub(r'//.*', '', text)  # remove comments
    return json.loads(text)


def load_presets():
    """Return a fresh copy of the shipped presets."""
    return copy.deepcopy(_read_presets())


def merge(base, override, path=''):
    """Merge ``override`` into ``base`` recursively and return ``base``.

    Keys absent from ``base`` are rejected, so a typo in an override file
    never passes silently.
    """
    for key, value in override.items():
        where = f'{path}.{key}' if path else key
        if key not in base:
            msg = f'unknown configuration key {where!r}'
            raise ValidationError(msg)

        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                msg = f'configuration key {where!r} must be a mapping'
                raise ValidationError(msg)

            merge(base[key], value, where)
        else:
            base[key] = value

    return base


def load_config(path=None):
    """Load the presets and apply the YAML override file at ``path``, if any."""
    config = load_presets()
    if path is None:
        return config

    path = Path(path)
    try:
        override = yaml.safe_load(path.read_text(encoding='utf-8'))
    except OSError as exc:
        msg = f'cannot read configuration file {path}: {exc.strerror}'
        raise ValidationError(msg) from exc
    except yaml.YAMLError as exc:
        msg = f'malformed configuration file {path}: {exc}'
        raise ValidationError(msg) from exc

    if override is None:
        return config

    if not isinstance(override, dict):
        msg = f'configuration file {path} must contain a mapping'
        raise ValidationError(msg)

    LOGGER.debug('Applying configuration overrides from %s', path)
    return merge(config, override)
