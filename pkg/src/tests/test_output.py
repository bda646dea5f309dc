#!/usr/bin/env python
import json
import pathlib

import h5py as h5
import numpy as np
import pandas as pd

from ..Anderson_phi42.Input import ExperimentConfig
from ..Anderson_phi42.Noise import RngStream
from ..Anderson_phi42.Solver import simulate
from ..Anderson_phi42.Output import write_csv, write_json, RunOutput
from .utils import in_tmp_wd


config = ExperimentConfig.from_json('{"grid": {"M": 4}, "solver": {"dt": 0.05, "T": 0.1}}')


@in_tmp_wd
def test_csv_header_and_precision():
    write_csv('table.csv', pd.DataFrame({'x': [0.1, 1/3]}), header={'seed': 3})
    lines = pathlib.Path('table.csv').read_text().splitlines()
    assert lines[0] == '# {"seed": 3}'
    assert lines[1] == 'x'
    assert float(lines[3]) == 1/3
    assert pd.read_csv('table.csv', comment='#')['x'].tolist() == [0.1, 1/3]


@in_tmp_wd
def test_json_is_sorted_and_strict():
    write_json('report.json', {'b': np.float64(np.inf), 'a': np.arange(2)})
    payload = pathlib.Path('report.json').read_text()
    assert payload.index('"a"') < payload.index('"b"')
    assert json.loads(payload) == {'a': [0, 1], 'b': None}


@in_tmp_wd
def test_manifest_exit_codes():
    output = RunOutput('run', config, 'simulate')
    output.record_check('informative', False, acceptance=False)
    assert output.finalize() == 0
    output.record_check('required', False, value=1.5)
    assert output.finalize() == 1
    manifest = json.loads((output.directory/'manifest.json').read_text())
    assert manifest['exit_code'] == 1
    assert manifest['config_hash'] == config.config_hash
    assert manifest['checks'][1]['measured'] == {'value': 1.5}
    assert output.manifest.failed_checks == ['required']


@in_tmp_wd
def test_run_output_files():
    op = config.build_operator()
    trajectory = simulate(op.grid.zeros(), config.solver, op, RngStream(3), output_times=[0., 0.1])
    output = RunOutput('run', config, 'simulate')
    output.write_table('diagnostics.csv', trajectory.diagnostics)
    output.write_snapshot(0, trajectory.u[0], op.grid)
    output.write_trajectory(trajectory, op.grid)
    report = output.write_report('simulate.json', {'completed': True})
    assert output.manifest.files == ['diagnostics.csv', 'snapshot_00000.aphi', 'trajectory.h5', 'simulate.json']
    assert json.loads(report.read_text())['manifest'] == 'manifest.json'
    with h5.File(output.directory/'trajectory.h5', 'r') as f5:
        assert f5.attrs['M'] == 4
        assert f5['u'].shape == (2, 4, 4)
        assert len(f5['diagnostics/t']) == len(trajectory.diagnostics)


if __name__ == '__main__':
    pass
