#!/usr/bin/env python
"""
Contains the acceptance suite run by the ``accept`` subcommand

Each criterion runs its experiments into a subdirectory of the output, with
sizes taken from the selected profile (smoke, quick or full), and is passed
when every check it recorded passed. The suite report acceptance.json holds
no wall-clock data, so two runs with the same seed are byte-identical
whatever the worker count.

Please note that this module is private. All functions are available in the
main ``Anderson_phi42`` namespace - use that instead.
"""
import logging
import filecmp
from collections import namedtuple

import numpy as np

from .constants import *
from .utils import ConfigurationError, say
from .lattice import TorusGrid
from .Noise import RngStream, lift_X, truncate_high, sample_space_white_noise
from .Hamiltonian import AndersonOperator, renorm_constant
from .Wick import OUState, hermite, sigma_profile, binomial_shift
from .Solver import phi_map, gamma_map
from .Input import ExperimentConfig
from .Output import RunOutput
from .Experiment import EXPERIMENTS

__all__ = ['Profile', 'PROFILE_SETTINGS', 'harmonic_exactness', 'run_acceptance']

logger = logging.getLogger(__name__)

EXACTNESS_TOLERANCE = 1e-10

Profile = namedtuple('Profile', ['exact_grids', 'exact_instances',
                                 'wick_M', 'wick_samples', 'cauchy_samples',
                                 'schauder_M', 'schauder_samples',
                                 'sweep_M', 'sweep_seeds', 'sweep_dt',
                                 'bel_M', 'bel_samples', 'bel_dt',
                                 'mixing_M', 'mixing_dt', 'couple_T', 'couple_seeds', 'averages_T',
                                 'mixing_times', 'mixing_samples', 'trajectories',
                                 'relax_M', 'relax_dt', 'relax_horizon', 'relax_box',
                                 'determinism_M'])

PROFILE_SETTINGS = {
    'smoke': Profile(exact_grids=(4, 8), exact_instances=5,
                     wick_M=8, wick_samples=400, cauchy_samples=10,
                     schauder_M=8, schauder_samples=4,
                     sweep_M=8, sweep_seeds=1, sweep_dt=1e-2,
                     bel_M=4, bel_samples=200, bel_dt=5e-2,
                     mixing_M=4, mixing_dt=5e-2, couple_T=2., couple_seeds=2, averages_T=4.,
                     mixing_times=[0.5, 1., 2.], mixing_samples=100, trajectories=4,
                     relax_M=4, relax_dt=5e-2, relax_horizon=5., relax_box=0.5,
                     determinism_M=4),
    'quick': Profile(exact_grids=(8, 16), exact_instances=50,
                     wick_M=16, wick_samples=10000, cauchy_samples=100,
                     schauder_M=16, schauder_samples=20,
                     sweep_M=16, sweep_seeds=3, sweep_dt=5e-3,
                     bel_M=8, bel_samples=2000, bel_dt=2.5e-2,
                     mixing_M=8, mixing_dt=2.5e-2, couple_T=10., couple_seeds=5, averages_T=20.,
                     mixing_times=[1., 3., 10.], mixing_samples=200, trajectories=10,
                     relax_M=8, relax_dt=2.5e-2, relax_horizon=10., relax_box=0.3,
                     determinism_M=4),
    'full': Profile(exact_grids=(8, 16), exact_instances=50,
                    wick_M=32, wick_samples=10000, cauchy_samples=200,
                    schauder_M=32, schauder_samples=20,
                    sweep_M=32, sweep_seeds=3, sweep_dt=1e-3,
                    bel_M=16, bel_samples=10000, bel_dt=1e-2,
                    mixing_M=16, mixing_dt=1e-2, couple_T=20., couple_seeds=5, averages_T=50.,
                    mixing_times=[1., 3., 10.], mixing_samples=500, trajectories=20,
                    relax_M=16, relax_dt=1e-2, relax_horizon=20., relax_box=0.1,
                    determinism_M=8)}


def _relative_error(value, reference):
    _scale = max(float(np.max(np.abs(reference))), 1.)
    return float(np.max(np.abs(value - reference)))/_scale


def harmonic_exactness(grids, instances, rng: RngStream):
    """
        Worst relative errors over random instances of the identities that
        hold exactly at the lattice level: Littlewood–Paley reconstruction,
        the Bony decomposition of a product, Γₙ∘Φₙ = id and the binomial
        Wick identity (raw and with the propagated variance).

        Returns
        -------
        errors : dict
            Maximal relative error per identity.
    """
    _errors = {'lp_reconstruction': 0., 'bony_decomposition': 0., 'gamma_phi_inverse': 0., 'binomial_wick': 0.,
               'binomial_wick_variance': 0.}
    for M in grids:
        grid = TorusGrid(M)
        _grid_rng = rng.spawn('grid', M)
        _xi = sample_space_white_noise(grid, _grid_rng.spawn('potential'))
        op = AndersonOperator.assemble(grid, _xi, renorm_constant(grid)).ensure_positive()
        _X = truncate_high(grid, lift_X(_xi), min(1, grid.max_block))
        _X = 0.1*_X/max(float(np.max(np.abs(_X))), 1e-300)
        _sigma = sigma_profile(op)
        for _i in range(instances):
            _sample = _grid_rng.spawn('instance', _i)
            f, g = _sample.standard_normal(grid.shape), _sample.standard_normal(grid.shape)
            _update = lambda key, value: _errors.__setitem__(key, max(_errors[key], value))
            _update('lp_reconstruction', _relative_error(grid.blocks.decompose(f).sum(axis=0), f))
            _bony = sum(grid.blocks.paraproduct(f, g, _mode) for _mode in ('lower', 'resonant', 'upper'))
            _update('bony_decomposition', _relative_error(_bony, f*g))
            _update('gamma_phi_inverse', _relative_error(gamma_map(phi_map(f, _X, grid), _X, grid).v, f))
            _state = OUState.stationary(op, _sample.spawn('stationary'))
            _later = _state.step(0.1, _sample.spawn('step'))
            _full = _later.field()
            _propagated = op.synthesize(np.exp(-0.1*op.eigenvalues)*_state.modes)
            _started = _full - _propagated
            _powers = tuple(hermite(_full, _sigma, n) for n in (1, 2, 3))
            _expected = tuple(hermite(_started, _sigma, n) for n in (1, 2, 3))
            _shifted = binomial_shift(_powers, _propagated)
            _update('binomial_wick', max(_relative_error(_a, _b) for _a, _b in zip(_shifted, _expected)))
            _sigma_p = ((op.eigenvectors**2) @ (np.exp(-0.2*op.eigenvalues)/op.eigenvalues)).reshape(grid.shape)/grid.h**2
            _expected = tuple(hermite(_started, _sigma - _sigma_p, n) for n in (1, 2, 3))
            _shifted = binomial_shift(_powers, _propagated, _sigma_p)
            _update('binomial_wick_variance', max(_relative_error(_a, _b) for _a, _b in zip(_shifted, _expected)))
    return _errors


def _configuration(M, seed, solver=None, experiment=None, hamiltonian=None):
    _config = {CTAGS.grid: {CTAGS.M: M}, CTAGS.seed: seed, CTAGS.experiment: experiment or {}}
    if solver:
        _config[CTAGS.solver] = solver
    if hamiltonian:
        _config[CTAGS.hamiltonian] = hamiltonian
    return ExperimentConfig(_config)


def _run(subcommand, config, directory, workers):
    _output = RunOutput(directory, config, subcommand)
    EXPERIMENTS[subcommand](config, _output, workers)
    _output.finalize()
    return _output.manifest.checks


def _criteria(profile: Profile, seed):
    """Criterion name and list of (subcommand, config, subdirectory) runs"""
    _T_mixing = {CTAGS.dt: profile.mixing_dt}
    return [
        ('renormalization_signature', [
            ('wick', _configuration(profile.wick_M, seed, experiment={CTAGS.stat: 'logdiv'}), 'logdiv'),
            ('wick', _configuration(profile.wick_M, seed, experiment={CTAGS.stat: 'cancel',
                                                                      CTAGS.samples: profile.wick_samples}), 'cancel'),
            ('wick', _configuration(profile.wick_M, seed, experiment={CTAGS.stat: 'covariance',
                                                                      CTAGS.samples: profile.wick_samples}), 'covariance')]),
        ('renormalization_necessity', [
            ('wick', _configuration(profile.wick_M, seed, experiment={CTAGS.stat: 'cauchy',
                                                                      CTAGS.samples: profile.cauchy_samples}), 'cauchy')]),
        ('schauder_exponent', [
            ('spectrum', _configuration(profile.schauder_M, seed,
                                        experiment={CTAGS.samples: profile.schauder_samples}), 'spectrum')]),
        ('coming_down', [
            ('sweep', _configuration(profile.sweep_M, seed,
                                     solver={CTAGS.dt: profile.sweep_dt, CTAGS.T: 1., CTAGS.scheme: SCHEME_SPLIT},
                                     experiment={CTAGS.seeds: [seed + _i for _i in range(profile.sweep_seeds)],
                                                 CTAGS.samples: 2}), 'sweep')]),
        ('derivative_consistency', [
            ('bel', _configuration(profile.bel_M, seed, solver={CTAGS.dt: profile.bel_dt},
                                   experiment={CTAGS.t: 0.5, CTAGS.samples: profile.bel_samples}), 'bel')]),
        ('mixing', [
            ('couple', _configuration(profile.mixing_M, seed, solver={**_T_mixing, CTAGS.T: profile.couple_T},
                                      experiment={CTAGS.initial_norm: 10.,
                                                  CTAGS.seeds: [seed + _i for _i in range(profile.couple_seeds)]}),
             'couple'),
            ('ergodicity', _configuration(profile.mixing_M, seed, solver={**_T_mixing, CTAGS.T: profile.averages_T},
                                          experiment={CTAGS.initial_norm: 10., CTAGS.times: profile.mixing_times,
                                                      CTAGS.samples: profile.mixing_samples,
                                                      CTAGS.trajectories: profile.trajectories}), 'ergodicity')]),
        ('relaxation_scaling', [
            ('relax', _configuration(profile.relax_M, seed, solver={CTAGS.dt: profile.relax_dt, CTAGS.T: 1.},
                                     experiment={CTAGS.horizon: profile.relax_horizon,
                                                 CTAGS.eps_box: profile.relax_box}), 'relax')])]


def _determinism(profile: Profile, seed, directory, workers):
    """Small runs repeated with one worker and with more, compared byte for byte"""
    _runs = [('wick', _configuration(profile.determinism_M, seed, experiment={CTAGS.stat: 'cancel', CTAGS.samples: 200})),
             ('couple', _configuration(profile.determinism_M, seed, solver={CTAGS.dt: 5e-2, CTAGS.T: 1.},
                                       experiment={CTAGS.seeds: [seed, seed + 1]})),
             ('ergodicity', _configuration(profile.determinism_M, seed, solver={CTAGS.dt: 5e-2, CTAGS.T: 1.},
                                           experiment={CTAGS.times: [0.5, 1.], CTAGS.samples: 100,
                                                       CTAGS.trajectories: 4}))]
    _mismatches = []
    for _subcommand, _config in _runs:
        _directories = [directory / f"{_subcommand}_workers_{_w}" for _w in (1, max(2, workers))]
        for _directory, _w in zip(_directories, (1, max(2, workers))):
            _run(_subcommand, _config, _directory, _w)
        _files = sorted(_path.name for _path in _directories[0].iterdir() if _path.name != MANIFEST_FILE)
        _, _mismatch, _errors = filecmp.cmpfiles(*_directories, _files, shallow=False)
        _mismatches += [f"{_subcommand}/{_name}" for _name in _mismatch + _errors]
    return _mismatches


def run_acceptance(directory, profile='quick', seed=7, workers=1):
    """
        Runs every acceptance criterion at the sizes of the profile.

        Parameters
        ----------
        directory : pathlib.Path
            Output directory; each criterion writes into its own
            subdirectory and acceptance.json summarizes them.

        profile : string
            One of {PROFILES}.

        seed : int
            Master seed of every run.

        workers : int
            Process pool size; results do not depend on it.

        Returns
        -------
        output : RunOutput
            With one recorded check per criterion, not yet finalized.
    """
    if profile not in PROFILES:
        raise ConfigurationError(f"Unknown profile {profile!r}, expected one of {PROFILES}", key='profile')
    _settings = PROFILE_SETTINGS[profile]
    _config = _configuration(_settings.mixing_M, seed, experiment={})
    output = RunOutput(directory, _config, 'accept')
    _summary = {'profile': profile, 'seed': seed, 'criteria': {}}

    say(f"[{profile}] harmonic_exactness...")
    _errors = harmonic_exactness(_settings.exact_grids, _settings.exact_instances, RngStream(seed, 'exactness'))
    _passed = all(_error <= EXACTNESS_TOLERANCE for _error in _errors.values())
    output.record_check('harmonic_exactness', _passed, **_errors)
    _summary['criteria']['harmonic_exactness'] = {'passed': _passed, 'errors': _errors}
    say("done\n")

    for _name, _runs in _criteria(_settings, seed):
        say(f"[{profile}] {_name}...")
        _checks = []
        for _subcommand, _sub_config, _subdirectory in _runs:
            _checks += [{**_check, 'run': _subdirectory}
                        for _check in _run(_subcommand, _sub_config, output.directory / _name / _subdirectory, workers)]
        _passed = all(_check['passed'] for _check in _checks if _check['acceptance'])
        output.record_check(_name, _passed, checks=[_check['name'] for _check in _checks])
        _summary['criteria'][_name] = {'passed': _passed, 'checks': _checks}
        say("done\n")

    say(f"[{profile}] determinism...")
    _mismatches = _determinism(_settings, seed, output.directory / 'determinism', workers)
    output.record_check('determinism', not _mismatches, mismatches=_mismatches)
    _summary['criteria']['determinism'] = {'passed': not _mismatches, 'mismatches': _mismatches}
    say("done\n")

    _summary['passed'] = all(_criterion['passed'] for _criterion in _summary['criteria'].values())
    output.write_report('acceptance.json', _summary)
    return output


run_acceptance.__doc__ = run_acceptance.__doc__.format(PROFILES=PROFILES)


if __name__ == '__main__':
    pass
