#!/usr/bin/env python
import json

import numpy as np
import pytest

from ..Anderson_phi42.lattice import TorusGrid
from ..Anderson_phi42.Noise import RngStream
from ..Anderson_phi42.Input import ExperimentConfig
from ..Anderson_phi42.Output import RunOutput
from ..Anderson_phi42.Experiment import EXPERIMENTS, initial_datum, default_modes
from .utils import in_tmp_wd


solver = {'dt': 0.05, 'T': 0.2}
cases = [('spectrum', {'samples': 2}, 'spectrum.json'),
         ('wick', {'stat': 'covariance', 'samples': 200}, 'wick_covariance.json'),
         ('wick', {'stat': 'logdiv'}, 'wick_logdiv.json'),
         ('wick', {'stat': 'cauchy', 'samples': 3}, 'wick_cauchy.json'),
         ('couple', {'seeds': [1, 2], 'initial_norm': 2.}, 'couple.json'),
         ('ergodicity', {'times': [0.1, 0.2], 'samples': 100, 'trajectories': 3, 'initial_norm': 2.}, 'ergodicity.json'),
         ('bel', {'t': 0.1, 'samples': 40}, 'bel.json'),
         ('relax', {'eps_targets': [0.5, 0.25], 'horizon': 1., 'eps_box': 1e6, 'N_cond': 2, 'max_tries': 5},
          'relax.json'),
         ('sweep', {'scales': [1., 2.], 'seeds': [1], 'samples': 2}, 'sweep.json')]


@pytest.mark.parametrize('subcommand,experiment,report', cases)
@in_tmp_wd
def test_experiment_writes_report(subcommand, experiment, report):
    config = ExperimentConfig({'grid': {'M': 4}, 'solver': solver, 'experiment': experiment, 'seed': 5})
    output = RunOutput('out', config, subcommand)
    EXPERIMENTS[subcommand](config, output, 1)
    assert output.finalize() in (0, 1)
    assert report in output.manifest.files
    payload = json.loads((output.directory/report).read_text())
    assert payload['config_hash'] == config.config_hash
    assert output.manifest.checks


def test_initial_datum():
    grid = TorusGrid(8)
    datum = initial_datum(grid, 3., RngStream(1, 'initial'))
    assert grid.lp_norm(datum) == pytest.approx(3.)
    assert np.array_equal(initial_datum(grid, 0., RngStream(1, 'initial')), grid.zeros())


def test_default_modes():
    config = ExperimentConfig.default(8)
    assert default_modes(config.build_operator()) == [1, 2, 4, 8]


if __name__ == '__main__':
    pass
