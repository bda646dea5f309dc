#!/usr/bin/env python
"""
Contains the RunOutput and RunManifest class definitions

Reports are written deterministically (sorted JSON keys, CSV floats with 17
significant digits, HDF5 datasets without timestamps) so that reruns with an
equal configuration hash give byte-identical files. Wall-clock data lives in
the manifest only.

Please note that this module is private. All classes are available in the
main ``Anderson_phi42`` namespace - use that instead.
"""
import json
import time
import pathlib
import logging
from dataclasses import dataclass, field as dataclass_field, asdict

import numpy as np
import pandas as pd
import h5py as h5

from .constants import *
from .utils import to_jsonable
from .__metadata__ import __version__
from .Snapshot import write_snapshot

__all__ = ['RunManifest', 'RunOutput', 'write_json', 'write_csv', 'write_trajectory_hdf5']

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def write_json(path, obj):
    path = pathlib.Path(path)
    path.write_text(json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + '\n')
    return path


def write_csv(path, frame: pd.DataFrame, header: dict = None):
    """CSV with an optional first line '# {json}' holding run parameters"""
    path = pathlib.Path(path)
    with open(path, 'w', newline='') as _file:
        if header is not None:
            _file.write(f"# {json.dumps(to_jsonable(header), sort_keys=True)}\n")
        frame.to_csv(_file, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def write_trajectory_hdf5(path, trajectory, grid):
    path = pathlib.Path(path)
    with h5.File(path, 'w') as f5:
        f5.attrs[CTAGS.M] = grid.M
        f5.attrs[CTAGS.L] = grid.L
        f5.create_dataset(name='times', data=np.asarray(trajectory.times, dtype=float), track_times=False)
        f5.create_dataset(name='u', data=np.asarray(trajectory.u, dtype=float), track_times=False)
        f5.create_dataset(name='v', data=np.asarray(trajectory.v, dtype=float), track_times=False)
        for _column in trajectory.diagnostics.columns:
            f5.create_dataset(name=f"diagnostics/{_column}", data=trajectory.diagnostics[_column].to_numpy(dtype=float),
                              track_times=False)
    logger.debug("Exported trajectory to %s", path)
    return path


@dataclass
class RunManifest:
    subcommand: str
    config_hash: str
    seed: int
    code_version: str = __version__
    started: float = dataclass_field(default_factory=time.time)
    wall_clock: float = None
    exit_code: int = None
    checks: list = dataclass_field(default_factory=list)
    files: list = dataclass_field(default_factory=list)

    def record_check(self, name, passed, acceptance=True, **measured):
        self.checks.append({'name': name, 'passed': bool(passed), 'acceptance': bool(acceptance),
                            'measured': measured})
        logger.info("Check %s %s", name, 'passed' if passed else 'FAILED')

    @property
    def failed_checks(self):
        return [_check['name'] for _check in self.checks if _check['acceptance'] and not _check['passed']]

    def checks_report(self):
        """Checks without wall-clock data, for the deterministic reports"""
        return {'config_hash': self.config_hash, 'seed': self.seed, 'checks': self.checks}

    def to_dict(self):
        return asdict(self)


class RunOutput:
    def __init__(self, directory, config, subcommand) -> None:
        """
            Output directory of one run: reports, tables, snapshots and the
            manifest referencing all of them.

            Call signature::

                output = RunOutput(directory, config, subcommand)

            Parameters
            ----------
            directory : string or pathlib.Path
                Created if missing.

            config : ExperimentConfig
                Configuration of the run, whose hash keys the manifest.

            subcommand : string
                One of {SUBCOMMANDS}.
        """
        self.__directory = pathlib.Path(directory)
        self.__directory.mkdir(parents=True, exist_ok=True)
        self.__manifest = RunManifest(subcommand, config.config_hash, config.seed)

    @property
    def directory(self):
        return self.__directory

    @property
    def manifest(self):
        return self.__manifest

    def __register(self, path):
        self.__manifest.files.append(path.name)
        return path

    def write_report(self, name, report):
        _report = dict(report)
        _report['manifest'] = MANIFEST_FILE
        _report['config_hash'] = self.__manifest.config_hash
        return self.__register(write_json(self.__directory / name, _report))

    def write_table(self, name, frame, header=None):
        return self.__register(write_csv(self.__directory / name, frame, header))

    def write_snapshot(self, index, field, grid, time=0.):
        return self.__register(write_snapshot(self.__directory / SNAPSHOT_TEMPLATE.format(index=index), field, grid, time))

    def write_trajectory(self, trajectory, grid):
        return self.__register(write_trajectory_hdf5(self.__directory / TRAJECTORY_FILE, trajectory, grid))

    def record_check(self, name, passed, acceptance=True, **measured):
        self.__manifest.record_check(name, passed, acceptance, **measured)

    def finalize(self, exit_code=None):
        if exit_code is None:
            exit_code = EXIT_CHECK_FAILED if self.__manifest.failed_checks else EXIT_OK
        self.__manifest.exit_code = exit_code
        self.__manifest.wall_clock = time.time() - self.__manifest.started
        write_json(self.__directory / MANIFEST_FILE, self.__manifest.to_dict())
        logger.info("Wrote %d files and the manifest to %s", len(self.__manifest.files), self.__directory)
        return exit_code


RunOutput.__init__.__doc__ = RunOutput.__init__.__doc__.format(SUBCOMMANDS=SUBCOMMANDS)


if __name__ == '__main__':
    pass
