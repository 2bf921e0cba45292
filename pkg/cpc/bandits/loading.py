"""
Contains methods for loading experiment settings from configuration files

A configuration file is a flat mapping of settings, written either as JSON or YAML. Keys are the
long command-line flags, with dashes or underscores:

    {"policies": "ucb,sbts-essr", "arms": 8, "horizon": 10000, "experiments": 100, "seed": 42}

Settings given on the command line override the ones read from the file.
"""

# Built-ins
import logging
import os

# Third-party
import yaml

# This package
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

CONFIG_KEYS = (
    'policy', 'policies', 'candidates', 'arms', 'horizon', 'experiments', 'seed', 'env',
    'reward', 'alpha', 'klucb_c', 'beta_bins', 'precision', 'nlearn', 'out', 'format', 'workers',
    'min_gap', 'file_template', 'stamp', 'baselines',
)

# Keys whose value is a comma-separated list on the command line
LIST_KEYS = ('policies', 'candidates', 'precision')


def normalize_key(key):
    return str(key).strip().lstrip('-').replace('-', '_')


def load_config(file):
    """
    Loads settings from a JSON or YAML configuration file

    ### Parameters

    - file (string): path to the file (environment variables are expanded)

    ### Returns

    - dict: settings keyed by their underscore names; list values of list-type keys are joined
      into comma-separated strings

    ### Raises

    - ConfigError: if the file can't be read, isn't a mapping, or contains unknown keys
    """
    file = os.path.expandvars(file)
    try:
        with open(file) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f'Couldn\'t load configuration file {file}: {e}')
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f'configuration file {file} must contain a mapping of settings')
    settings = {}
    for key, value in data.items():
        name = normalize_key(key)
        if name not in CONFIG_KEYS:
            raise ConfigError(f'unknown setting {key!r} in {file}', key=name)
        if name in LIST_KEYS and isinstance(value, (list, tuple)):
            value = ','.join(str(v) for v in value)
        settings[name] = value
    logger.info('Loaded %d settings from %s', len(settings), file)
    return settings


def merge_settings(defaults, file_settings=None, flags=None):
    """
    Combines settings: defaults < configuration file < command-line flags

    Flags whose value is None count as not given.

    Examples
    --------

        >>> merge_settings({'horizon': 10000, 'seed': 42}, {'seed': 7}, {'seed': None})
        {'horizon': 10000, 'seed': 7}
    """
    settings = dict(defaults)
    settings.update(file_settings or {})
    settings.update({k: v for k, v in (flags or {}).items() if v is not None})
    return settings
