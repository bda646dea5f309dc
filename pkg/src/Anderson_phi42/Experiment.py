#!/usr/bin/env python
"""
Contains the experiment behind each subcommand

Every experiment takes a validated ExperimentConfig, a RunOutput and a worker
count, writes its reports through the RunOutput, records its checks and
returns the report dictionary. All random streams derive from the
configured seed.

Please note that this module is private. All functions are available in the
main ``Anderson_phi42`` namespace - use that instead.
"""
import logging

import numpy as np
import pandas as pd

from .constants import *
from .utils import ConfigurationError, NumericalError
from .Noise import RngStream, random_smooth_field
from .Hamiltonian import trace_identity, gaussian_bound_fit, green_log_slope, schauder_exponent_fit
from .Wick import wick_cancellation, chaos_covariance, variance_log_fit, cauchy_trend
from .Solver import simulate, random_direction
from .Ergodicity import (Observable, synchronous_couple, ergodicity_report, ks_decreasing, chapman_kolmogorov,
                         bel_derivative, relaxation_scaling, relaxation_probe, coming_down_sweep, moment_growth_fit)
from .Input import ExperimentConfig
from .Output import RunOutput

__all__ = ['DEFAULT_OBSERVABLES', 'SCHAUDER_EXPONENTS', 'initial_datum', 'default_modes', 'run_spectrum', 'run_wick',
           'run_simulate', 'run_couple', 'run_ergodicity', 'run_bel', 'run_relax', 'run_sweep', 'EXPERIMENTS']

logger = logging.getLogger(__name__)

DEFAULT_OBSERVABLES = [{'kind': 'fourier_char', 'mode': [1, 0], 'amplitude': 1.0},
                       {'kind': 'low_norm', 'K': 2},
                       {'kind': 'lp_norm', 'p': 2}]
SCHAUDER_EXPONENTS = (-0.2, 0.4)
SCHAUDER_TOLERANCE = 0.15
CHAOS_TOLERANCE = 0.15


def initial_datum(grid, norm, rng: RngStream):
    """Smooth random field of L² norm `norm`, zero when norm is 0"""
    if norm == 0:
        return grid.zeros()
    _profile = random_smooth_field(grid, rng)
    return norm*_profile/grid.lp_norm(_profile, 2)


def default_modes(op):
    """Truncations size/64, size/32, size/16, size/8, keeping those ≥ 1"""
    return sorted({op.size//_d for _d in (64, 32, 16, 8) if op.size//_d >= 1})


def _observables(experiment, grid):
    try:
        return [Observable.from_dict(_entry, grid)
                for _entry in experiment.get(CTAGS.observables, DEFAULT_OBSERVABLES)]
    except (TypeError, ValueError) as _error:
        raise ConfigurationError(str(_error), key=f"{CTAGS.experiment}.{CTAGS.observables}") from None


def _require(condition, message, key, block=CTAGS.experiment):
    if not condition:
        raise ConfigurationError(message, key=f"{block}.{key}")


def _require_times(times, cfg, key):
    for t in times:
        _steps = round(t/cfg.dt)
        _require(t > 0 and abs(_steps*cfg.dt - t) <= 1e-9*max(1., t),
                 f"Time {t} must be a positive multiple of dt={cfg.dt}", key)


def _require_modes(modes, op, top=None):
    top = op.size - 1 if top is None else top
    _require(all(1 <= _N <= top for _N in modes), f"Truncations {modes} must lie in [1, {top}]", CTAGS.modes)


def run_spectrum(config: ExperimentConfig, output: RunOutput, workers=1):
    """Eigenvalues of H with trace, heat-kernel, Green-function and Schauder diagnostics"""
    _experiment = config.experiment
    op = config.build_operator()
    grid = op.grid
    t = _experiment.get(CTAGS.t, 0.1)
    output.write_table('spectrum.csv', pd.DataFrame({'k': np.arange(op.size), 'eigenvalue': op.eigenvalues}),
                       header={CTAGS.M: grid.M, CTAGS.L: grid.L, CTAGS.renorm: op.renorm_constant,
                               'mass_shift': op.mass_shift, 'lambda0': op.lambda0})
    _trace, _kernel_trace = trace_identity(op, t)
    output.record_check('trace_identity', abs(_trace - _kernel_trace) <= 1e-10*abs(_trace),
                        spectral=_trace, kernel=_kernel_trace, t=t)
    _pairs = [((0, 0), (0, _j)) for _j in range(grid.M//2 + 1)]
    _gaussian = gaussian_bound_fit(op, [t/2, t, 2*t], _pairs)
    _alpha, _beta = SCHAUDER_EXPONENTS
    _slope = schauder_exponent_fit(op, _alpha, _beta, _experiment.get(CTAGS.samples, 20), config.rng('schauder'))
    _target = -(_beta - _alpha)/2
    output.record_check('schauder_exponent', abs(_slope - _target) <= SCHAUDER_TOLERANCE, slope=_slope, target=_target,
                        M=grid.M)
    _report = {'lambda0': op.lambda0, 'mass_shift': op.mass_shift, 'renorm_constant': op.renorm_constant,
               'trace_identity': [_trace, _kernel_trace],
               'gaussian_bound': _gaussian._asdict(), 'schauder_slope': _slope, 'schauder_target': _target,
               'green_log_slope': green_log_slope(op) if grid.M >= 8 else None}
    output.write_report('spectrum.json', _report)
    return _report


def run_wick(config: ExperimentConfig, output: RunOutput, workers=1):
    """One of the Wick statistics {WICK_STATS} selected by experiment.stat"""
    _experiment = config.experiment
    _stat = _experiment.get(CTAGS.stat, WICK_STATS[0])
    _samples = _experiment.get(CTAGS.samples, 1000)
    op = config.build_operator()
    N = config.solver.truncation(op)
    _rng = config.rng('wick', WICK_STATS.index(_stat))
    _modes = _experiment.get(CTAGS.modes, default_modes(op))
    _require(_samples >= 2, f"At least 2 samples are required, got {_samples}", CTAGS.samples)
    if _stat == 'logdiv':
        _require_modes(_modes, op)
        _require(len(set(_modes)) >= 2, f"The log fit needs 2 distinct truncations, got {_modes}", CTAGS.modes)
    elif _stat == 'cauchy':
        _require_modes(_modes, op, (op.size - 1)//2)
    _report = {CTAGS.stat: _stat, CTAGS.samples: _samples, CTAGS.N: N}
    if _stat == 'cancel':
        _result = wick_cancellation(op, N, _samples, _rng)
        _report.update(_result)
        output.record_check('wick_cancellation', _result['order_2']['passed'],
                            mean=_result['order_2']['mean'], stderr=_result['order_2']['stderr'])
    elif _stat == 'covariance':
        _pairs = [((0, 0), (0, _j)) for _j in range(min(5, op.grid.M))]
        _ratios = chaos_covariance(op, N, _samples, _rng, _pairs)
        output.write_table('wick_covariance.csv', pd.DataFrame({'offset': [_y[1] for _, _y in _pairs], 'ratio': _ratios}))
        _report['ratios'] = _ratios
        output.record_check('chaos_covariance', all(abs(_r - 1) <= CHAOS_TOLERANCE for _r in _ratios), ratios=_ratios)
    elif _stat == 'logdiv':
        _fit, _means = variance_log_fit(op, _modes)
        output.write_table('wick_logdiv.csv', pd.DataFrame({CTAGS.N: _modes, 'sigma_mean': _means}))
        _report.update({'fit': _fit._asdict(), 'sigma_means': _means})
        output.record_check('variance_log_divergence', _fit.r_squared > 0.9, **_fit._asdict())
    else:
        _renormalized, _raw = cauchy_trend(op, _modes, _samples, _rng, config.solver.eps)
        output.write_table('wick_cauchy.csv', pd.DataFrame({CTAGS.N: _modes, 'renormalized': _renormalized,
                                                            'raw': _raw}))
        _report.update({'renormalized': _renormalized, 'raw': _raw})
        output.record_check('renormalized_cauchy', bool(np.all(np.diff(_renormalized) < 0)),
                            renormalized=_renormalized, raw=_raw)
        output.record_check('raw_not_cauchy', not bool(np.all(np.diff(_raw) < 0)), raw=_raw)
    output.write_report(f"wick_{_stat}.json", _report)
    return _report


run_wick.__doc__ = run_wick.__doc__.format(WICK_STATS=WICK_STATS)


def run_simulate(config: ExperimentConfig, output: RunOutput, workers=1):
    """One trajectory from a smooth datum, with diagnostics, snapshots and the HDF5 archive"""
    _experiment = config.experiment
    cfg = config.solver
    op = config.build_operator()
    grid = op.grid
    _u0 = initial_datum(grid, _experiment.get(CTAGS.initial_norm, 1.), config.rng('initial'))
    _snapshot_times = _experiment.get(CTAGS.snapshot_times, [0., cfg.T])
    _trajectory = simulate(_u0, cfg, op, config.rng('noise'), output_times=_snapshot_times,
                           nonlinear=_experiment.get(CTAGS.nonlinear, True))
    output.write_table(DIAGNOSTICS_FILE, _trajectory.diagnostics)
    for _index, (_time, _u) in enumerate(zip(_trajectory.times, _trajectory.u)):
        output.write_snapshot(_index, _u, grid, _time)
    output.write_trajectory(_trajectory, grid)
    _final = _trajectory.diagnostics.iloc[-1]
    _report = {'horizon': _trajectory.horizon, 'completed': _trajectory.completed, 'steps': cfg.steps,
               'final': _final.to_dict(), 'snapshot_times': list(_trajectory.times)}
    output.write_report('simulate.json', _report)
    return _report


def run_couple(config: ExperimentConfig, output: RunOutput, workers=1):
    """Synchronous coupling of a datum of norm experiment.initial_norm with 0, one run per seed"""
    _experiment = config.experiment
    cfg = config.solver
    op = config.build_operator()
    _u0 = initial_datum(op.grid, _experiment.get(CTAGS.initial_norm, 10.), config.rng('initial'))
    _seeds = _experiment.get(CTAGS.seeds, [config.seed])
    _frames, _rows = [], []
    for _seed in _seeds:
        _coupling = synchronous_couple(_u0, op.grid.zeros(), cfg.T, op, cfg, RngStream(_seed, 'couple'))
        _frame = _coupling.to_frame()
        _frame.insert(0, CTAGS.seed, _seed)
        _frames.append(_frame)
        _rows.append({CTAGS.seed: _seed, **_coupling.to_dict()})
    output.write_table('coupling.csv', pd.concat(_frames, ignore_index=True))
    _good = [(_row['rate'] or 0) > 0 and (_row['r_squared'] or 0) > 0.7 for _row in _rows]
    output.record_check('coupling_rate', np.mean(_good) >= 0.8, good_seeds=int(np.sum(_good)), seeds=len(_seeds))
    _report = {'runs': _rows, CTAGS.T: cfg.T}
    output.write_report('couple.json', _report)
    return _report


def run_ergodicity(config: ExperimentConfig, output: RunOutput, workers=1):
    """Krylov–Bogoliubov uniqueness, KS mixing distances and coupling rate from ‖u₀‖ = initial_norm and 0"""
    _experiment = config.experiment
    cfg = config.solver
    op = config.build_operator()
    grid = op.grid
    _phis = _observables(_experiment, grid)
    _u0 = initial_datum(grid, _experiment.get(CTAGS.initial_norm, 10.), config.rng('initial'))
    _times = _experiment.get(CTAGS.times, [1., 3., 10.])
    _samples = _experiment.get(CTAGS.samples, 100)
    _require_times(_times, cfg, CTAGS.times)
    _require(_samples >= 100, f"Mixing distances need at least 100 samples, got {_samples}", CTAGS.samples)
    _report = ergodicity_report(_u0, grid.zeros(), _phis, cfg.T, _times, _samples,
                                _experiment.get(CTAGS.trajectories, 20), op, cfg, config.rng('ergodicity'), workers)
    for _label, _averages in _report.averages.items():
        output.write_table(f"averages_{_label}.csv", _averages.table())
    output.write_table('ks.csv', _report.ks)
    output.write_table('coupling.csv', _report.coupling.to_frame())
    output.record_check('krylov_bogoliubov_uniqueness', bool(_report.uniqueness['agree'].all()),
                        differences=_report.uniqueness['difference'].to_list())
    _monotone = ks_decreasing(_report.ks)
    output.record_check('ks_decreasing', all(_monotone.values()), observables=_monotone)
    output.record_check('coupling_contraction', (_report.coupling.rate or 0) > 0 and (_report.coupling.r_squared or 0) > 0.7,
                        rate=_report.coupling.rate, r_squared=_report.coupling.r_squared)
    _chapman = chapman_kolmogorov(_u0, _phis[0], _times[0], max(_samples//10, 2), 10, op, cfg,
                                  config.rng('chapman_kolmogorov'), workers)
    output.record_check('chapman_kolmogorov', _chapman['agree'], acceptance=False, **_chapman)
    _dict = _report.to_dict()
    _dict['chapman_kolmogorov'] = _chapman
    output.write_report('ergodicity.json', _dict)
    return _dict


def run_bel(config: ExperimentConfig, output: RunOutput, workers=1):
    """Derivative of P_tφ at a smooth datum along a smooth direction, against finite differences"""
    _experiment = config.experiment
    cfg = config.solver
    op = config.build_operator()
    grid = op.grid
    _u0 = initial_datum(grid, _experiment.get(CTAGS.initial_norm, 1.), config.rng('initial'))
    _direction = random_direction(grid, config.rng('direction'))
    _t = _experiment.get(CTAGS.t, 0.5)
    _require_times([_t], cfg, CTAGS.t)
    _require(cfg.truncation(op) == op.size - 1, f"The derivative estimator needs the untruncated noise N={op.size - 1}",
             CTAGS.N, CTAGS.solver)
    _require(cfg.scheme == SCHEME_EXPONENTIAL_EULER, f"The derivative estimator needs the {SCHEME_EXPONENTIAL_EULER} scheme",
             CTAGS.scheme, CTAGS.solver)
    _report = bel_derivative(_u0, _direction, _observables(_experiment, grid)[0], _t,
                             _experiment.get(CTAGS.samples, 1000), op, cfg, config.rng('bel'),
                             use_feynman_kac=_experiment.get(CTAGS.use_feynman_kac, False),
                             potential=_experiment.get(CTAGS.potential), fd_delta=_experiment.get(CTAGS.fd_delta, 1e-4),
                             nonlinear=_experiment.get(CTAGS.nonlinear, True), workers=workers)
    output.record_check('bel_vs_finite_difference', _report.agrees_with_fd, estimate=_report.estimate[0],
                        reference=_report.estimate[2], joint_stderr=_report.estimate[3])
    output.record_check('bel_variants_consistent', _report.variants_consistent,
                        difference=_report.consistency_difference, stderr=_report.consistency_stderr)
    output.write_report('bel.json', _report.to_dict())
    return _report.to_dict()


def run_relax(config: ExperimentConfig, output: RunOutput, workers=1):
    """
    Hitting times of ‖v‖_{L²} ≤ ε under low-mode conditioned noise, their
    affine fit in log(1/ε), and the noise-free reference time.
    """
    _experiment = config.experiment
    cfg = config.solver
    op = config.build_operator()
    _u0 = initial_datum(op.grid, _experiment.get(CTAGS.initial_norm, 1.), config.rng('initial'))
    _targets = _experiment.get(CTAGS.eps_targets, [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    _horizon = _experiment.get(CTAGS.horizon, max(cfg.T, 20.))
    _require(all(_eps > 0 for _eps in _targets), f"Targets {_targets} must be positive", CTAGS.eps_targets)
    _N_cond = _experiment.get(CTAGS.N_cond, 3)
    _require(0 <= _N_cond < op.size, f"N_cond={_N_cond} must lie in [0, {op.size - 1}]", CTAGS.N_cond)
    _arguments = dict(eps_box=_experiment.get(CTAGS.eps_box, 0.1), N_cond=_N_cond, op=op,
                      cfg=cfg, horizon=_horizon, kappa=_experiment.get(CTAGS.kappa, DEFAULT_EPS), norm='l2',
                      max_tries=_experiment.get(CTAGS.max_tries, 1000))
    _table, _fit = relaxation_scaling(_u0, _targets, rng=config.rng('relax'), **_arguments)
    output.write_table('relaxation.csv', _table)
    output.record_check('relaxation_log_scaling', _fit is not None and _fit.r_squared > 0.8,
                        **({} if _fit is None else _fit._asdict()))
    _quiet = relaxation_probe(_u0, min(_targets), rng=config.rng('relax_quiet'), noise=False, **_arguments)
    _prediction = np.log(_quiet.initial_norm/min(_targets))/(2*op.lambda0)
    _ratio = _quiet.T_hit/_prediction if (_quiet.success and _prediction > 0) else None
    output.record_check('noise_free_decay', _ratio is not None and 0.5 <= _ratio <= 2., acceptance=False,
                        T_hit=_quiet.T_hit, prediction=_prediction)
    _report = {'fit': None if _fit is None else _fit._asdict(), 'table': _table.to_dict(orient='records'),
               'noise_free': _quiet._asdict(), 'noise_free_prediction': _prediction, 'horizon': _horizon}
    output.write_report('relax.json', _report)
    return _report


def run_sweep(config: ExperimentConfig, output: RunOutput, workers=1):
    """Coming-down sweep over experiment.scales and experiment.seeds, with the moment-growth fit"""
    _experiment = config.experiment
    cfg = config.solver
    op = config.build_operator()
    _profile = random_smooth_field(op.grid, config.rng('profile'))
    _scales = _experiment.get(CTAGS.scales, [1., 10., 100., 1000.])
    _seeds = _experiment.get(CTAGS.seeds, [config.seed + _i for _i in range(3)])
    _table, _ratios = coming_down_sweep(_scales, cfg.T, _seeds, op, cfg, _profile, workers)
    output.write_table('sweep.csv', _table)
    output.record_check('coming_down_ratio', all(_r < 1.2 for _r in _ratios.values()), ratios=_ratios)
    output.record_check('coming_down_bound', bool(_table['bound_holds'].all()),
                        cells=len(_table), holding=int(_table['bound_holds'].sum()))
    _report = {'ratios': _ratios, 'table': _table.to_dict(orient='records')}
    try:
        _moments, _fit = moment_growth_fit(_scales, _profile, op, cfg, config.rng('moments'),
                                           _experiment.get(CTAGS.samples, 4), workers)
        output.write_table('moments.csv', _moments)
        _report['moment_growth'] = _fit._asdict()
    except NumericalError as _error:
        logger.warning("Moment growth fit skipped: %s", _error)
        _report['moment_growth'] = None
    output.write_report('sweep.json', _report)
    return _report


EXPERIMENTS = {'spectrum': run_spectrum, 'wick': run_wick, 'simulate': run_simulate, 'couple': run_couple,
               'ergodicity': run_ergodicity, 'bel': run_bel, 'relax': run_relax, 'sweep': run_sweep}


if __name__ == '__main__':
    pass
