#!/usr/bin/env python
import json
import pathlib

import pytest

from ..Anderson_phi42.constants import DEFAULT_CONFIG
from ..Anderson_phi42.utils import ConfigurationError
from ..Anderson_phi42.Input import ExperimentConfig, canonical_json
from .utils import in_tmp_wd


text = """{
  "grid": {"M": 4},
  "solver": {"dt": 0.05, "T": 0.1},
  "experiment": {"samples": 10},
  "seed": 3
}"""


def test_defaults_are_merged():
    config = ExperimentConfig.from_json(text)
    assert config.grid.M == 4
    assert config.solver.dt == 0.05
    assert config.solver.p == DEFAULT_CONFIG['solver']['p']
    assert config.experiment == {'samples': 10}
    assert config.seed == 3
    assert config.output == pathlib.Path(DEFAULT_CONFIG['output'])
    assert ExperimentConfig.default(8).grid.M == 8


def test_missing_grid_size_points_at_line():
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_json('{\n  "seed": 1,\n  "grid": {"L": 3.0}\n}')
    assert excinfo.value.key == 'grid.M'
    assert excinfo.value.line == 3
    assert 'line 3' in str(excinfo.value)


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_json('{\n  "grid": {"M": 4},\n  "solver": {\n    "dtt": 0.1\n  }\n}')
    assert excinfo.value.key == 'solver.dtt'
    assert excinfo.value.line == 4
    with pytest.raises(ConfigurationError):
        ExperimentConfig({'grid': {'M': 4}, 'colour': 'blue'})


@pytest.mark.parametrize('config,key', [({'grid': {'M': 6}}, 'grid.M'),
                                        ({'grid': {'M': 4.0}}, 'grid.M'),
                                        ({'grid': {'M': 4}, 'solver': {'dt': -1.}}, 'solver.dt'),
                                        ({'grid': {'M': 4}, 'solver': {'p': 3}}, 'solver.p'),
                                        ({'grid': {'M': 4}, 'seed': -1}, 'seed'),
                                        ({'grid': {'M': 4}, 'hamiltonian': {'renorm': 'manual'}}, 'hamiltonian.renorm'),
                                        ({'grid': {'M': 4}, 'experiment': {'stat': 'kurtosis'}}, 'experiment.stat'),
                                        ({'grid': {'M': 4}, 'experiment': {'times': []}}, 'experiment.times'),
                                        ({'grid': {'M': 4}, 'experiment': {'observables': [{'kind': 'x'}]}},
                                         'experiment.observables'),
                                        ({'grid': {'M': 4}, 'experiment': {'potential': {'q': 1}}},
                                         'experiment.potential.q')])
def test_invalid_values(config, key):
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig(config)
    assert excinfo.value.key == key


def test_invalid_json():
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_json('{\n  "grid": {"M": 4},\n}')
    assert excinfo.value.line == 3
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_json('[1, 2]')


def test_hash_round_trip():
    config = ExperimentConfig.from_json(text)
    again = ExperimentConfig.from_json(config.to_json())
    assert again == config
    assert again.config_hash == config.config_hash
    assert config.replace(seed=4).config_hash != config.config_hash
    assert config.replace(solver={'T': 0.2}).solver.dt == 0.05
    assert canonical_json({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'


@in_tmp_wd
def test_from_file():
    pathlib.Path('config.json').write_text(text)
    assert ExperimentConfig.from_file('config.json') == ExperimentConfig(json.loads(text))
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_file('missing.json')


def test_build_operator_reaches_floor():
    config = ExperimentConfig.from_json(text)
    op = config.build_operator()
    assert op.lambda0 >= config.mass_floor*(1 - 1e-12)
    assert op.potential.tolist() == config.build_operator().potential.tolist()
    fixed = config.replace(hamiltonian={'renorm': 0.}).build_operator()
    assert fixed.renorm_constant == 0.


def test_describe_lists_keys():
    description = ExperimentConfig.describe()
    assert 'grid.M' in description
    assert 'experiment.observables' in description


if __name__ == '__main__':
    pass
