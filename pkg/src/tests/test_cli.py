#!/usr/bin/env python
import json
import pathlib

import pytest

from ..Anderson_phi42.__metadata__ import __version__
from ..Anderson_phi42.utils import ConfigurationError, NumericalError
from ..Anderson_phi42.Experiment import EXPERIMENTS
from ..Anderson_phi42.cli import run, make_parser
from .utils import in_tmp_wd


small = {"grid": {"M": 4}, "solver": {"dt": 0.05, "T": 0.1}, "seed": 11}


def write_config(config, path='config.json'):
    pathlib.Path(path).write_text(json.dumps(config, indent=2))
    return path


@in_tmp_wd
def test_simulate():
    code = run(['simulate', '--config', write_config(small), '--out', 'out'])
    assert code == 0
    for name in ('manifest.json', 'diagnostics.csv', 'snapshot_00000.aphi', 'snapshot_00001.aphi', 'trajectory.h5',
                 'simulate.json'):
        assert (pathlib.Path('out')/name).exists()
    manifest = json.loads(pathlib.Path('out/manifest.json').read_text())
    assert manifest['subcommand'] == 'simulate'
    assert manifest['seed'] == 11
    assert manifest['exit_code'] == 0


@in_tmp_wd
def test_seed_override():
    run(['simulate', '--config', write_config(small), '--out', 'out', '--seed', '5'])
    assert json.loads(pathlib.Path('out/manifest.json').read_text())['seed'] == 5


@in_tmp_wd
def test_invalid_configuration():
    assert run(['simulate', '--config', write_config({"grid": {"L": 1.0}}), '--out', 'out']) == 2
    assert run(['simulate', '--config', 'missing.json', '--out', 'out']) == 2
    assert run(['simulate', '--config', write_config(small), '--workers', '0']) == 2


@in_tmp_wd
def test_wick_independent_of_workers():
    config = dict(small, experiment={"stat": "cancel", "samples": 200})
    path = write_config(config)
    first = run(['wick', '--config', path, '--out', 'serial', '--workers', '1'])
    second = run(['wick', '--config', path, '--out', 'pooled', '--workers', '2'])
    assert first == second
    assert first in (0, 1)
    assert pathlib.Path('serial/wick_cancel.json').read_bytes() == pathlib.Path('pooled/wick_cancel.json').read_bytes()


@in_tmp_wd
def test_wick_flags_override_configuration():
    code = run(['wick', '--config', write_config(small), '--out', 'out', '--stat', 'logdiv', '--modes', '2', '4'])
    assert code in (0, 1)
    report = json.loads(pathlib.Path('out/wick_logdiv.json').read_text())
    assert report['stat'] == 'logdiv'
    assert len(report['sigma_means']) == 2
    assert not pathlib.Path('out/wick_cancel.json').exists()
    assert run(['wick', '--config', write_config(small), '--out', 'bad', '--stat', 'logdiv', '--modes', '40']) == 2
    assert run(['wick', '--config', write_config(small), '--out', 'bad', '--samples', '1']) == 2


@in_tmp_wd
def test_experiment_preconditions_are_configuration_errors():
    truncated = dict(small, solver={"dt": 0.05, "T": 0.1, "N": 3}, experiment={"t": 0.1, "samples": 10})
    assert run(['bel', '--config', write_config(truncated), '--out', 'bel']) == 2
    off_grid = dict(small, experiment={"t": 0.07, "samples": 10})
    assert run(['bel', '--config', write_config(off_grid), '--out', 'bel']) == 2
    few = dict(small, experiment={"times": [0.1], "samples": 10, "trajectories": 2})
    assert run(['ergodicity', '--config', write_config(few), '--out', 'ergodicity']) == 2


@pytest.mark.parametrize('error,code', [(ConfigurationError("bad key", key='experiment.t'), 2),
                                        (ValueError("singular step"), 3),
                                        (NumericalError("blow-up"), 3)])
@in_tmp_wd
def test_exit_codes(monkeypatch, error, code):
    def failing(config, output, workers):
        raise error
    monkeypatch.setitem(EXPERIMENTS, 'simulate', failing)
    assert run(['simulate', '--config', write_config(small), '--out', 'out']) == code
    manifest = pathlib.Path('out/manifest.json')
    if code == 3:
        assert json.loads(manifest.read_text())['exit_code'] == 3


@in_tmp_wd
def test_accept_smoke_independent_of_workers():
    first = run(['accept', '--profile', 'smoke', '--out', 'serial', '--workers', '1', '--seed', '3'])
    second = run(['accept', '--profile', 'smoke', '--out', 'pooled', '--workers', '2', '--seed', '3'])
    assert first == second
    assert first in (0, 1)
    serial = pathlib.Path('serial/acceptance.json')
    assert serial.read_bytes() == pathlib.Path('pooled/acceptance.json').read_bytes()
    summary = json.loads(serial.read_text())
    assert summary['profile'] == 'smoke'
    assert set(summary['criteria']) == {'harmonic_exactness', 'renormalization_signature', 'renormalization_necessity',
                                        'schauder_exponent', 'coming_down', 'derivative_consistency', 'mixing',
                                        'relaxation_scaling', 'determinism'}
    assert summary['criteria']['harmonic_exactness']['passed']
    assert summary['criteria']['determinism']['passed']
    manifest = json.loads(pathlib.Path('serial/manifest.json').read_text())
    assert manifest['exit_code'] == first


def test_parser():
    args = make_parser().parse_args(['accept', '--profile', 'smoke'])
    assert args.profile == 'smoke'
    args = make_parser().parse_args(['wick', '--stat', 'cauchy', '--modes', '1', '2', '--samples', '30'])
    assert (args.stat, args.modes, args.samples) == ('cauchy', [1, 2], 30)
    with pytest.raises(SystemExit):
        make_parser().parse_args(['wick', '--stat', 'variance'])
    with pytest.raises(SystemExit):
        make_parser().parse_args(['teleport'])
    with pytest.raises(SystemExit):
        make_parser().parse_args(['--version'])
    assert isinstance(__version__, str)


if __name__ == '__main__':
    pass
