import json

import pytest

from cpc.bandits.exceptions import ConfigError
from cpc.bandits.loading import load_config, merge_settings


def test_load_json_config(tmp_path):
    file = tmp_path / 'config.json'
    file.write_text(json.dumps({'policies': 'ucb,sbts-essr', 'arms': 8, 'beta-bins': 10}))
    assert load_config(str(file)) == {'policies': 'ucb,sbts-essr', 'arms': 8, 'beta_bins': 10}


def test_load_yaml_config_with_lists(tmp_path):
    file = tmp_path / 'config.yml'
    file.write_text('horizon: 5000\nprecision: [f32, "fixed:11:10"]\nklucb_c: 3\n')
    assert load_config(str(file)) == {'horizon': 5000, 'precision': 'f32,fixed:11:10',
                                      'klucb_c': 3}


def test_empty_config(tmp_path):
    file = tmp_path / 'empty.yml'
    file.write_text('')
    assert load_config(str(file)) == {}


def test_unknown_key(tmp_path):
    file = tmp_path / 'config.json'
    file.write_text('{"horizon": 100, "colour": "red"}')
    with pytest.raises(ConfigError) as e:
        load_config(str(file))
    assert e.value.key == 'colour'


def test_config_must_be_a_mapping(tmp_path):
    file = tmp_path / 'config.json'
    file.write_text('[1, 2]')
    with pytest.raises(ConfigError):
        load_config(str(file))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'nope.json'))


def test_flags_override_file_settings():
    settings = merge_settings({'horizon': 10000, 'seed': 42, 'env': 'random'},
                              {'seed': 7, 'env': 'mu1'}, {'env': 'mu2', 'seed': None})
    assert settings == {'horizon': 10000, 'seed': 7, 'env': 'mu2'}
