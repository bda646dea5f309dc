#!/usr/bin/env python
"""
Contains the Observable class definition and the Monte Carlo harness of the
transition semigroup P_tφ(u₀) = E[φ(u(t; u₀))]

Every ensemble draws trajectory i from its own stream rng.spawn(purpose, i)
and is mapped over a process pool, so results do not depend on the number
of workers.

Please note that this module is private. All classes and functions are
available in the main ``Anderson_phi42`` namespace - use that instead.
"""
import logging
import functools
from collections import namedtuple
from dataclasses import dataclass, asdict, field as dataclass_field

import numpy as np
import pandas as pd
from scipy import stats

from .constants import *
from .utils import NumericalError, IntegrationError, parallel_map, batch_mean_stderr, linear_fit, to_jsonable
from .Noise import RngStream
from .Wick import hermite, low_mode_conditioned_sample
from .Solver import SolverConfig, TruncatedDynamics, step_eta, simulate, coming_down_statistic, shifted_energy

__all__ = ['Observable', 'SemigroupEstimate', 'estimate_semigroup', 'chapman_kolmogorov', 'common_random_difference',
           'feller_lipschitz', 'gradient_shape', 'KrylovBogoliubovResult', 'krylov_bogoliubov', 'uniqueness_check',
           'CouplingReport', 'synchronous_couple', 'mixing_distance', 'ks_decreasing', 'RelaxationResult',
           'relaxation_probe', 'relaxation_scaling', 'feynman_kac_potential', 'feynman_kac_derivative', 'BELReport',
           'bel_derivative', 'coming_down_sweep', 'moment_growth_fit', 'uniform_moment_profile', 'shifted_energy_sweep',
           'ErgodicityReport', 'ergodicity_report']

logger = logging.getLogger(__name__)

FAILURE_TOLERANCE = 0.01


class Observable:
    _kind_prop = ('kind', "One of {OBSERVABLE_KINDS}")
    _mode_prop = ('mode', "Integer wave vector (k1, k2) of the test function cos(k·x)")
    _amplitude_prop = ('amplitude', "Amplitude of the test function")
    _cutoff_prop = ('K', "Frequency cutoff |k| <= K of low_norm")
    _exponent_prop = ('p', "Lebesgue exponent of lp_norm")
    _value_prop = ('value', "Value of constant")
    def __init__(self, kind, grid, mode=(1, 0), amplitude=1.0, K=1, p=2, value=1.0) -> None:
        """
            Function φ of the field, evaluated on lattice fields of grid.

            Call signatures::

                phi = Observable('fourier_char', grid, mode=(1, 0), amplitude=1.)

                phi = Observable.from_dict({'kind': 'lp_norm', 'p': 4}, grid)

            Parameters
            ----------
            kind : string
                fourier_char  cos(⟨u, f⟩), bounded by 1
                linear        ⟨u, f⟩
                low_norm      L² norm of the Fourier modes |k| ≤ K of u
                lp_norm       ‖u‖_{Lᵖ}
                constant      the given value
                with f = amplitude·cos(2π(k·x)/L) for k = mode.
        """
        if kind not in OBSERVABLE_KINDS:
            raise ValueError(f"Unknown observable kind {kind!r}, expected one of {OBSERVABLE_KINDS}")
        self.__kind = kind
        self.__grid = grid
        self.__mode = tuple(int(_k) for _k in mode)
        self.__amplitude = float(amplitude)
        self.__K = float(K)
        self.__p = float(p)
        self.__value = float(value)
        self.__test_function = self.__amplitude*grid.mode(*self.__mode)
        self.__low_mask = grid.k_squared <= self.__K**2

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.name})"

    @classmethod
    def from_dict(cls, entry: dict, grid):
        _entry = dict(entry)
        return cls(_entry.pop(cls._kind_prop[0]), grid, **_entry)

    def to_dict(self):
        _entry = {self._kind_prop[0]: self.__kind}
        if self.__kind in ('fourier_char', 'linear'):
            _entry.update({self._mode_prop[0]: list(self.__mode), self._amplitude_prop[0]: self.__amplitude})
        elif self.__kind == 'low_norm':
            _entry[self._cutoff_prop[0]] = self.__K
        elif self.__kind == 'lp_norm':
            _entry[self._exponent_prop[0]] = self.__p
        else:
            _entry[self._value_prop[0]] = self.__value
        return _entry

    @property
    def kind(self):
        return self.__kind

    @property
    def name(self):
        _details = {'fourier_char': f"k={self.__mode[0]},{self.__mode[1]}",
                    'linear': f"k={self.__mode[0]},{self.__mode[1]}",
                    'low_norm': f"K={self.__K:g}",
                    'lp_norm': f"p={self.__p:g}",
                    'constant': f"c={self.__value:g}"}[self.__kind]
        return f"{self.__kind}[{_details}]"

    @property
    def test_function(self):
        return self.__test_function

    @property
    def bounded(self):
        return self.__kind in ('fourier_char', 'constant')

    def __call__(self, u):
        if self.__kind == 'fourier_char':
            return float(np.cos(self.__grid.inner(u, self.__test_function)))
        elif self.__kind == 'linear':
            return float(self.__grid.inner(u, self.__test_function))
        elif self.__kind == 'low_norm':
            return self.__grid.lp_norm(self.__grid.inverse(self.__grid.forward(u)*self.__low_mask), 2)
        elif self.__kind == 'lp_norm':
            return self.__grid.lp_norm(u, self.__p)
        return self.__value


@dataclass(frozen=True, eq=False)
class EnsembleContext:
    op: object
    cfg: SolverConfig
    rng: RngStream
    observables: tuple = ()
    noise: bool = True
    nonlinear: bool = True

    def dynamics(self, u0, purpose, index, cfg=None):
        return TruncatedDynamics(self.op, self.cfg if cfg is None else cfg, u0, self.rng.spawn(purpose, index),
                                 self.noise, nonlinear=self.nonlinear)


def _run(dynamics, steps):
    for _ in range(steps):
        dynamics.step()
    return dynamics


def _terminal_values(context: EnsembleContext, u0, purpose, index):
    try:
        _u = _run(context.dynamics(u0, purpose, index), context.cfg.steps).u
    except IntegrationError as _error:
        logger.warning("Trajectory %s/%d failed: %s", purpose, index, _error)
        return None
    return np.array([_phi(_u) for _phi in context.observables])


def _collect(results, what):
    _kept = [_r for _r in results if _r is not None]
    _failures = len(results) - len(_kept)
    if _failures > FAILURE_TOLERANCE*len(results):
        raise NumericalError(f"{_failures} of {len(results)} trajectories failed in {what}, above the "
                             f"{FAILURE_TOLERANCE:.0%} tolerance")
    if not _kept:
        raise NumericalError(f"No trajectory succeeded in {what}")
    return np.array(_kept), _failures


SemigroupEstimate = namedtuple('SemigroupEstimate', ['mean', 'stderr', 'samples', 'failures'])


def _time_config(cfg: SolverConfig, t):
    _steps = int(round(t/cfg.dt))
    if abs(_steps*cfg.dt - t) > 1e-9*max(1., t):
        raise ValueError(f"Time t={t} is not a multiple of the time step dt={cfg.dt}")
    return cfg.replace(T=_steps*cfg.dt)


def estimate_semigroup(u0, observable, t, samples, op, cfg: SolverConfig, rng: RngStream, workers=1, noise=True,
                       purpose='semigroup'):
    """
        Monte Carlo estimate of P_tφ(u₀) over independent noise
        realizations, with a batch-means standard error.

        Parameters
        ----------
        u0 : ndarray
            Initial datum.

        observable : Observable or list of Observable
            φ, or several observables evaluated on the same trajectories.

        t : float
            Time, a multiple of cfg.dt.

        samples : int
            Number of trajectories, at least 2.

        Returns
        -------
        estimate : SemigroupEstimate
            (mean, stderr, samples, failures), mean and stderr being arrays
            when a list of observables was given.
    """
    _single = isinstance(observable, Observable)
    _observables = (observable,) if _single else tuple(observable)
    if t < 0:
        raise ValueError(f"Semigroup time t={t} must be nonnegative")
    if samples < 2:
        raise ValueError(f"At least 2 samples are required, got {samples}")
    if t == 0:
        _values = np.array([_phi(u0) for _phi in _observables])
        _zeros = np.zeros(len(_observables))
        return SemigroupEstimate(_values[0] if _single else _values, 0. if _single else _zeros, samples, 0)
    _context = EnsembleContext(op, _time_config(cfg, t), rng, _observables, noise)
    _results = parallel_map(functools.partial(_terminal_values, _context, u0, purpose), range(samples), workers)
    _values, _failures = _collect(_results, 'estimate_semigroup')
    _estimates = np.array([batch_mean_stderr(_column) for _column in _values.T])
    if _single:
        return SemigroupEstimate(float(_estimates[0, 0]), float(_estimates[0, 1]), len(_values), _failures)
    return SemigroupEstimate(_estimates[:, 0], _estimates[:, 1], len(_values), _failures)


def _nested_value(context: EnsembleContext, u0, half_cfg, inner, index):
    try:
        _u_half = _run(context.dynamics(u0, 'outer', index, half_cfg), half_cfg.steps).u
        _inner_context = EnsembleContext(context.op, half_cfg, context.rng.spawn('inner', index),
                                         context.observables, context.noise, context.nonlinear)
        _values = [_terminal_values(_inner_context, _u_half, 'trajectory', _j) for _j in range(inner)]
    except IntegrationError:
        return None
    _values = [_v[0] for _v in _values if _v is not None]
    return float(np.mean(_values)) if _values else None


def chapman_kolmogorov(u0, observable, t, outer, inner, op, cfg: SolverConfig, rng: RngStream, workers=1):
    """
        Direct estimate of P_tφ(u₀) against the two-stage estimate
        E[P_{t/2}φ(u(t/2))], agreeing within 2 joint standard errors.
    """
    _direct = estimate_semigroup(u0, observable, t, outer*inner, op, cfg, rng.spawn('direct'), workers)
    _half_cfg = _time_config(cfg, t/2)
    _context = EnsembleContext(op, _half_cfg, rng.spawn('nested'), (observable,))
    _results = parallel_map(functools.partial(_nested_value, _context, u0, _half_cfg, inner), range(outer), workers)
    _nested, _failures = _collect(_results, 'chapman_kolmogorov')
    _mean, _stderr = batch_mean_stderr(_nested)
    _joint = np.hypot(_direct.stderr, _stderr)
    return {'direct': _direct.mean, 'direct_stderr': _direct.stderr, 'nested': _mean, 'nested_stderr': _stderr,
            'joint_stderr': float(_joint), 'agree': bool(abs(_direct.mean - _mean) <= 2*_joint)}


def _perturbed_values(context: EnsembleContext, u0, direction, deltas, index):
    _values = []
    try:
        for _delta in (0.,) + tuple(deltas):
            _u = _run(context.dynamics(u0 + _delta*direction, 'crn', index), context.cfg.steps).u
            _values.append(context.observables[0](_u))
    except IntegrationError:
        return None
    return np.array(_values)


def common_random_difference(u0, direction, deltas, observable, t, samples, op, cfg: SolverConfig, rng: RngStream,
                             workers=1):
    """
        Difference quotients (P_tφ(u₀+δh) − P_tφ(u₀))/δ for each δ, under
        common random numbers.

        Returns
        -------
        table : pandas.DataFrame
            Columns delta, quotient, stderr.
    """
    if t <= 0:
        raise ValueError(f"Difference quotients need t > 0, got {t}")
    _context = EnsembleContext(op, _time_config(cfg, t), rng, (observable,))
    _results = parallel_map(functools.partial(_perturbed_values, _context, u0, direction, tuple(deltas)),
                            range(samples), workers)
    _values, _ = _collect(_results, 'common_random_difference')
    _rows = []
    for _i, _delta in enumerate(deltas, start=1):
        _mean, _stderr = batch_mean_stderr((_values[:, _i] - _values[:, 0])/_delta)
        _rows.append({'delta': _delta, 'quotient': _mean, 'stderr': _stderr})
    return pd.DataFrame(_rows)


def feller_lipschitz(u0, direction, deltas, observable, t, samples, op, cfg, rng, workers=1):
    """
    |P_tφ(u₀+δh) − P_tφ(u₀)| for shrinking δ and the fitted Lipschitz
    constant (largest absolute quotient).
    """
    _table = common_random_difference(u0, direction, deltas, observable, t, samples, op, cfg, rng, workers)
    _table['difference'] = np.abs(_table['quotient']*_table['delta'])
    return _table, float(np.max(np.abs(_table['quotient'])))


def gradient_shape(u0, direction, observable, times, delta, samples, op, cfg, rng, workers=1):
    """Lipschitz ratio |P_tφ(u₀+δh) − P_tφ(u₀)|/δ at each time, growing as t ↓ 0"""
    _rows = []
    for _i, t in enumerate(times):
        _table = common_random_difference(u0, direction, [delta], observable, t, samples, op, cfg,
                                          rng.spawn('time', _i), workers)
        _rows.append({'t': t, 'ratio': abs(float(_table['quotient'][0])), 'stderr': float(_table['stderr'][0])})
    return pd.DataFrame(_rows)


def _running_averages(context: EnsembleContext, u0, checkpoint_steps, index):
    try:
        _dynamics = context.dynamics(u0, 'trajectory', index)
        _sums = np.zeros(len(context.observables))
        _averages, _values = [], []
        _dt = context.cfg.dt
        for _step in range(1, checkpoint_steps[-1] + 1):
            _sums += _dt*np.array([_phi(_dynamics.u) for _phi in context.observables])
            _dynamics.step()
            if _step in checkpoint_steps:
                _averages.append(_sums/(_step*_dt))
                _values.append([_phi(_dynamics.u) for _phi in context.observables])
    except IntegrationError:
        return None
    return np.array([_averages, _values])


@dataclass(eq=False)
class KrylovBogoliubovResult:
    checkpoints: np.ndarray
    observables: list
    averages: np.ndarray
    values: np.ndarray
    failures: int = 0

    def table(self):
        """Per checkpoint and observable: mean and stderr of the running averages, and their variance"""
        _rows = []
        for _c, t in enumerate(self.checkpoints):
            _row = {'t': float(t)}
            for _o, _name in enumerate(self.observables):
                _column = self.averages[:, _c, _o]
                _row[f"{_name}_mean"], _row[f"{_name}_stderr"] = batch_mean_stderr(_column)
                _row[f"{_name}_var"] = float(np.var(_column, ddof=1))
            _rows.append(_row)
        return pd.DataFrame(_rows)

    def final(self, index):
        return batch_mean_stderr(self.averages[:, -1, index])

    def variance_slope(self, index):
        """log-log slope of the running-average variance against t, −1 for a mixing chain"""
        _var = np.var(self.averages[:, :, index], axis=0, ddof=1)
        _keep = _var > 0
        return linear_fit(np.log(self.checkpoints[_keep]), np.log(_var[_keep]))


def krylov_bogoliubov(u0, observables, T, dt, rng: RngStream, op, cfg: SolverConfig, trajectories=20, checkpoints=None,
                      workers=1):
    """
        Running time averages (1/t)∫₀ᵗφ(u_r)dr along independent
        trajectories, recorded at positive checkpoints in (0, T], together
        with the values φ(u_t) at those checkpoints.
    """
    if not T > 0:
        raise ValueError(f"Horizon T={T} must be positive")
    _cfg = cfg.replace(dt=dt, T=T)
    checkpoints = np.linspace(T/10, T, 10) if checkpoints is None else np.asarray(checkpoints, dtype=float)
    _steps = sorted({max(int(round(_t/dt)), 1) for _t in checkpoints})
    _context = EnsembleContext(op, _cfg, rng, tuple(observables))
    _results = parallel_map(functools.partial(_running_averages, _context, u0, _steps), range(trajectories), workers)
    _stack, _failures = _collect(_results, 'krylov_bogoliubov')
    return KrylovBogoliubovResult(np.array(_steps)*dt, [_phi.name for _phi in observables],
                                  _stack[:, 0], _stack[:, 1], _failures)


def uniqueness_check(first: KrylovBogoliubovResult, second: KrylovBogoliubovResult):
    """Final running averages from two initial data, compared within 2 joint standard errors"""
    _rows = []
    for _o, _name in enumerate(first.observables):
        (_m1, _s1), (_m2, _s2) = first.final(_o), second.final(_o)
        _joint = float(np.hypot(_s1, _s2))
        _rows.append({'observable': _name, 'first': _m1, 'second': _m2, 'difference': _m1 - _m2,
                      'joint_stderr': _joint, 'agree': bool(abs(_m1 - _m2) <= 2*_joint)})
    return pd.DataFrame(_rows)


@dataclass(eq=False)
class CouplingReport:
    times: np.ndarray
    distance_l2: np.ndarray
    distance_besov: np.ndarray
    rate: float = None
    r_squared: float = None
    accepted: bool = False
    window: tuple = None

    def to_frame(self):
        return pd.DataFrame({'t': self.times, 'distance_l2': self.distance_l2, 'distance_besov': self.distance_besov})

    def to_dict(self):
        return to_jsonable({'rate': self.rate, 'r_squared': self.r_squared, 'accepted': self.accepted,
                            'window': self.window, 'initial_distance': self.distance_l2[0],
                            'final_distance': self.distance_l2[-1]})


def synchronous_couple(u0, u0_tilde, T, op, cfg: SolverConfig, rng: RngStream, noise=True, window=None,
                       min_r_squared=0.5):
    """
        Evolves both initial data with the identical noise stream, records
        d(t) = ‖u(t;u₀) − u(t;ũ₀)‖ in L² and C^{−ε}, and fits the decay rate
        ρ of log d(t) ≈ const − ρt over the window (default [T/2, T]).
        Fits with R² below min_r_squared are reported as not accepted.
    """
    _cfg = _time_config(cfg, T)
    _grid = op.grid
    _first = TruncatedDynamics(op, _cfg, u0, rng.spawn('coupling'), noise)
    _second = TruncatedDynamics(op, _cfg, u0_tilde, rng.spawn('coupling'), noise)
    _times, _l2, _besov = [], [], []
    for _step in range(_cfg.steps + 1):
        _difference = _first.u - _second.u
        _times.append(_first.time)
        _l2.append(_grid.lp_norm(_difference, 2))
        _besov.append(_grid.blocks.besov_norm(_difference, -_cfg.eps))
        if _step < _cfg.steps:
            _first.step()
            _second.step()
    _report = CouplingReport(np.array(_times), np.array(_l2), np.array(_besov))
    window = (T/2, T) if window is None else tuple(window)
    _report.window = window
    _mask = (_report.times >= window[0] - 1e-12) & (_report.times <= window[1] + 1e-12) & (_report.distance_l2 > 0)
    if np.count_nonzero(_mask) >= 2:
        _fit = linear_fit(_report.times[_mask], np.log(_report.distance_l2[_mask]))
        _report.rate, _report.r_squared = -_fit.slope, _fit.r_squared
        _report.accepted = _fit.r_squared >= min_r_squared
        if not _report.accepted:
            logger.warning("Coupling rate fit rejected with R2=%.3g", _fit.r_squared)
    return _report


def mixing_distance(u0, u0_tilde, t, observables, samples, op, cfg: SolverConfig, rng: RngStream, workers=1):
    """
        Two-sample Kolmogorov–Smirnov statistics between φ(u(t;u₀)) and
        φ(u(t;ũ₀)) over independent ensembles, a lower bound witness of the
        total variation distance between the two laws.

        Returns
        -------
        table : pandas.DataFrame
            Columns observable, statistic, pvalue.
    """
    if samples < 100:
        raise ValueError(f"Mixing distance needs at least 100 samples, got {samples}")
    _observables = tuple(observables)
    if t == 0:
        _left = np.tile([_phi(u0) for _phi in _observables], (samples, 1))
        _right = np.tile([_phi(u0_tilde) for _phi in _observables], (samples, 1))
    else:
        _context = EnsembleContext(op, _time_config(cfg, t), rng, _observables)
        _left, _ = _collect(parallel_map(functools.partial(_terminal_values, _context, u0, 'left'), range(samples),
                                         workers), 'mixing_distance')
        _right, _ = _collect(parallel_map(functools.partial(_terminal_values, _context, u0_tilde, 'right'),
                                          range(samples), workers), 'mixing_distance')
    _rows = []
    for _o, _phi in enumerate(_observables):
        _result = stats.ks_2samp(_left[:, _o], _right[:, _o])
        _rows.append({'observable': _phi.name, 'statistic': float(_result.statistic), 'pvalue': float(_result.pvalue)})
    return pd.DataFrame(_rows)


def ks_decreasing(ks_table: pd.DataFrame):
    """Per observable, whether the KS statistic is non-increasing along the sorted times"""
    return {_name: bool(np.all(np.diff(_group.sort_values('t')['statistic'].to_numpy()) <= 0))
            for _name, _group in ks_table.groupby('observable', sort=False)}


RelaxationResult = namedtuple('RelaxationResult', ['T_hit', 'success', 'reason', 'tries', 'bound', 'initial_norm'])


def relaxation_probe(u0, eps_target, eps_box, N_cond, op, cfg: SolverConfig, rng: RngStream, horizon=None,
                     kappa=DEFAULT_EPS, norm='besov', noise=True, max_tries=1000):
    """
        First time the remainder reaches ‖v(t)‖ ≤ ε_target, the dynamics
        being truncated at N_cond and driven by a low-mode conditioned
        noise path (or by no noise at all).

        Parameters
        ----------
        eps_target : float
            Target size of v.

        eps_box : float
            Size of the conditioning box of the low modes.

        N_cond : int
            Number of conditioned modes minus one; also the truncation.

        horizon : float
            Largest time explored. Default to cfg.T.

        kappa : float
            The norm is C^{1−κ} when norm='besov', L² when norm='l2'.

        Returns
        -------
        result : RelaxationResult
            T_hit (None when missed), success flag, failure reason
            ('conditioning_exhausted' or 'horizon_exceeded'), conditioning
            tries, box bound and the norm of v(0).
    """
    if not eps_target > 0:
        raise ValueError(f"Target eps_target={eps_target} must be positive")
    horizon = cfg.T if horizon is None else horizon
    _cfg = cfg.replace(N=int(N_cond), T=horizon)
    _grid = op.grid
    if norm == 'besov':
        _norm = lambda f: _grid.blocks.besov_norm(f, 1 - kappa)
    elif norm == 'l2':
        _norm = lambda f: _grid.lp_norm(f, 2)
    else:
        raise ValueError(f"Unknown norm {norm!r}, expected 'besov' or 'l2'")
    _tries, _bound, _z_path = 0, None, None
    if noise:
        _sample = low_mode_conditioned_sample(op, N_cond, eps_box, horizon, cfg.dt, rng.spawn('conditioning'), max_tries)
        _tries, _bound = _sample.tries, _sample.bound
        if not _sample.accepted:
            return RelaxationResult(None, False, 'conditioning_exhausted', _tries, _bound, _norm(u0))
        _z_path = _sample.enhanced_trajectory()
    _dynamics = TruncatedDynamics(op, _cfg, u0, noise=noise, z_path=_z_path)
    _initial = _norm(_dynamics.remainder)
    for _ in range(_cfg.steps + 1):
        if _norm(_dynamics.remainder) <= eps_target:
            return RelaxationResult(_dynamics.time, True, None, _tries, _bound, _initial)
        if _dynamics.step_count < _cfg.steps:
            _dynamics.step()
    return RelaxationResult(None, False, 'horizon_exceeded', _tries, _bound, _initial)


def relaxation_scaling(u0, eps_targets, eps_box, N_cond, op, cfg, rng, horizon=None, kappa=DEFAULT_EPS, norm='besov',
                       noise=True, max_tries=1000):
    """
    T_hit for each target on one conditioned path and the affine fit of
    T_hit against log(1/ε_target).
    """
    _rows = []
    for _target in eps_targets:
        _result = relaxation_probe(u0, _target, eps_box, N_cond, op, cfg, rng.spawn('path'), horizon, kappa, norm,
                                   noise, max_tries)
        _rows.append({'eps_target': _target, 'T_hit': _result.T_hit, 'success': _result.success,
                      'reason': _result.reason, 'tries': _result.tries})
    _table = pd.DataFrame(_rows)
    _hit = _table[_table['success']]
    _fit = linear_fit(np.log(1/_hit['eps_target'].astype(float)), _hit['T_hit'].astype(float)) if len(_hit) >= 2 else None
    return _table, _fit


def feynman_kac_potential(u, sigma, grid, c_tilde=1.0, p=2, eps=DEFAULT_EPS):
    """V(u) = c̃‖:u²:‖ᵖ_{H^{−ε}}"""
    return c_tilde*grid.sobolev_norm(hermite(u, sigma, 2), -eps)**p


def feynman_kac_derivative(u, sigma, eta, grid, c_tilde=1.0, p=2, eps=DEFAULT_EPS):
    """dV(u)·η = 2p·c̃‖:u²:‖^{p−2}_{H^{−ε}}⟨:u²:, uη⟩_{H^{−ε}}"""
    _square = hermite(u, sigma, 2)
    _scale = 1. if p == 2 else grid.sobolev_norm(_square, -eps)**(p - 2)
    return 2*p*c_tilde*_scale*grid.sobolev_inner(_square, u*eta, -eps)


def _bel_sample(context: EnsembleContext, u0, direction, fd_delta, potential, index):
    _op, _cfg, _grid = context.op, context.cfg, context.op.grid
    _V = lambda u, sigma: feynman_kac_potential(u, sigma, _grid, **potential)
    try:
        _base = context.dynamics(u0, 'bel', index)
        _perturbed = context.dynamics(u0 + fd_delta*direction, 'bel', index)
        _t = _cfg.steps*_cfg.dt
        _eta = np.array(direction, dtype=float)
        _weight = _V0 = _V1 = _dv = 0.
        for _ in range(_cfg.steps):
            _s, _u, _sigma = _base.time, _base.u, _base.sigma
            _V0 += _cfg.dt*_V(_u, _sigma)
            _V1 += _cfg.dt*_V(_perturbed.u, _perturbed.sigma)
            _dv += _cfg.dt*(1 - _s/_t)*feynman_kac_derivative(_u, _sigma, _eta, _grid, **potential)
            _eta_next = step_eta(_eta, _u, _sigma, _cfg.dt, _op, _s, context.nonlinear)
            _increment = _base.step()
            _perturbed.step()
            _weight += _grid.inner(_eta, _increment)
            _eta = _eta_next
    except IntegrationError:
        return None
    _phi0, _phi1 = context.observables[0](_base.u), context.observables[0](_perturbed.u)
    _malliavin = _weight/(np.sqrt(2)*_t)
    return np.array([_phi0*_malliavin,
                     np.exp(-_V0)*_phi0*(_malliavin - _dv),
                     (_phi1 - _phi0)/fd_delta,
                     (np.exp(-_V1)*_phi1 - np.exp(-_V0)*_phi0)/fd_delta])


@dataclass(eq=False)
class BELReport:
    value: float
    stderr: float
    samples: int
    fd_reference: float
    fd_stderr: float
    feynman_kac_value: float
    feynman_kac_stderr: float
    feynman_kac_fd_reference: float
    feynman_kac_fd_stderr: float
    plain_vs_fd_stderr: float
    feynman_kac_vs_fd_stderr: float
    consistency_difference: float
    consistency_stderr: float
    potential: dict = dataclass_field(default_factory=dict)
    use_feynman_kac: bool = False
    t: float = None
    fd_delta: float = None
    mass_shift: float = None
    failures: int = 0

    @property
    def estimate(self):
        """Estimator of the configured variant and its finite-difference reference"""
        if self.use_feynman_kac:
            return self.feynman_kac_value, self.feynman_kac_stderr, self.feynman_kac_fd_reference, self.feynman_kac_vs_fd_stderr
        return self.value, self.stderr, self.fd_reference, self.plain_vs_fd_stderr

    @property
    def low_power(self):
        _value, _stderr = self.estimate[:2]
        return bool(_stderr > 0.5*abs(_value))

    @property
    def agrees_with_fd(self):
        """within 10% relative or 2 joint standard errors"""
        _value, _, _reference, _joint = self.estimate
        return bool(abs(_value - _reference) <= max(0.1*abs(_reference), 2*_joint))

    @property
    def variants_consistent(self):
        return bool(abs(self.consistency_difference) <= 2*self.consistency_stderr)

    def to_dict(self):
        _dict = asdict(self)
        _dict.update({'low_power': self.low_power, 'agrees_with_fd': self.agrees_with_fd,
                      'variants_consistent': self.variants_consistent})
        return to_jsonable(_dict)


def bel_derivative(u0, direction, observable, t, samples, op, cfg: SolverConfig, rng: RngStream,
                   use_feynman_kac=False, potential=None, fd_delta=1e-4, nonlinear=True, workers=1):
    """
        Bismut–Elworthy–Li estimator of the derivative d(P_tφ)(u₀)·h.

        Along each trajectory the linearized flow η (η(0) = h) is paired with
        the site increments of the driving noise √2·W, giving
        φ(u_t)·(1/(√2t))Σ⟨η_{{s_i}}, ΔW_i⟩. The Feynman–Kac variant estimates
        d(S_tφ)(u₀)·h for S_tφ(u₀) = E[e^{{−∫V(u_s)ds}}φ(u_t)] as
        E[e^{{−∫V}}φ(u_t)((1/(√2t))Σ⟨η, ΔW⟩ − ∫(1−s/t)dV(u_s)·η_s ds)]. Both are
        returned with the common-random-number finite differences of P_tφ
        and S_tφ.

        Parameters
        ----------
        direction : ndarray
            Direction h.

        potential : dict
            c_tilde, p, eps of V = c̃‖:u²:‖ᵖ_{{H^{{−ε}}}}. Default to
            {DEFAULT_POTENTIAL}.

        fd_delta : float
            Step δ of the finite-difference reference.

        nonlinear : bool
            Drops the cubic nonlinearity when False.

        Returns
        -------
        report : BELReport
    """
    if not t > 0:
        raise ValueError(f"Derivative time t={t} must be positive")
    if not np.all(np.isfinite(direction)):
        raise ValueError("Direction h must be finite")
    if cfg.truncation(op) != op.size - 1:
        raise ValueError(f"The derivative estimator needs the untruncated noise N={op.size - 1}, got N={cfg.N}")
    if cfg.scheme != SCHEME_EXPONENTIAL_EULER:
        raise ValueError(f"The derivative estimator needs the {SCHEME_EXPONENTIAL_EULER} scheme, got {cfg.scheme}")
    potential = dict(DEFAULT_POTENTIAL if potential is None else potential)
    _context = EnsembleContext(op, _time_config(cfg, t), rng, (observable,), True, nonlinear)
    _results = parallel_map(functools.partial(_bel_sample, _context, u0, direction, fd_delta, potential),
                            range(samples), workers)
    _values, _failures = _collect(_results, 'bel_derivative')
    _plain, _fk, _fd, _fd_fk = [batch_mean_stderr(_column) for _column in _values.T]
    _report = BELReport(value=_plain[0], stderr=_plain[1], samples=len(_values),
                        fd_reference=_fd[0], fd_stderr=_fd[1],
                        feynman_kac_value=_fk[0], feynman_kac_stderr=_fk[1],
                        feynman_kac_fd_reference=_fd_fk[0], feynman_kac_fd_stderr=_fd_fk[1],
                        plain_vs_fd_stderr=batch_mean_stderr(_values[:, 0] - _values[:, 2])[1],
                        feynman_kac_vs_fd_stderr=batch_mean_stderr(_values[:, 1] - _values[:, 3])[1],
                        consistency_difference=0., consistency_stderr=0.,
                        potential=potential, use_feynman_kac=use_feynman_kac, t=t, fd_delta=fd_delta,
                        mass_shift=op.mass_shift, failures=_failures)
    _consistency = (_values[:, 0] - _values[:, 1]) - (_values[:, 2] - _values[:, 3])
    _report.consistency_difference, _report.consistency_stderr = batch_mean_stderr(_consistency)
    if _report.low_power:
        logger.warning("Derivative estimator has low power: stderr %.3g for value %.3g", *_report.estimate[1::-1])
    return _report


bel_derivative.__doc__ = bel_derivative.__doc__.format(DEFAULT_POTENTIAL=DEFAULT_POTENTIAL)


def _coming_down_cell(op, cfg, profile, cell):
    _seed, _scale = cell
    try:
        _trajectory = simulate(_scale*profile, cfg, op, RngStream(_seed, 'coming_down', 0))
    except IntegrationError as _error:
        logger.warning("Coming-down cell seed=%d scale=%g failed: %s", _seed, _scale, _error)
        return {'seed': _seed, 'scale': _scale, 'statistic': np.nan, 'K_tilde_T': np.nan, 'bound_holds': False}
    _statistic = coming_down_statistic(_trajectory, (0.5*cfg.T, cfg.T))
    _K_tilde = float(_trajectory.constants.K_tilde[-1])
    return {'seed': _seed, 'scale': _scale, 'statistic': _statistic, 'K_tilde_T': _K_tilde,
            'bound_holds': bool(_statistic <= 1 + _K_tilde)}


def coming_down_sweep(scales, T, seeds, op, cfg: SolverConfig, profile, workers=1):
    """
        For u₀ = s·g over the scales and a matched noise per seed, tabulates
        max_{t∈[T/2,T]}(1∧√t)‖v(t)‖_{L^{3p−2}} next to K̃_T.

        Returns
        -------
        table : pandas.DataFrame
            Columns seed, scale, statistic, K_tilde_T, bound_holds.

        ratios : dict
            max/min ratio of the statistic across scales, per seed.
    """
    if not len(scales):
        raise ValueError("At least one scale is required")
    _cfg = _time_config(cfg, T)
    _cells = [(int(_seed), float(_scale)) for _seed in seeds for _scale in scales]
    _table = pd.DataFrame(parallel_map(functools.partial(_coming_down_cell, op, _cfg, profile), _cells, workers))
    _ratios = {int(_seed): float(_group['statistic'].max()/_group['statistic'].min())
               for _seed, _group in _table.groupby('seed')}
    return _table, _ratios


def _sup_besov(context: EnsembleContext, u0, index):
    try:
        _dynamics = context.dynamics(u0, 'moment', index)
        _sup = context.op.grid.blocks.besov_norm(_dynamics.remainder, -context.cfg.eps)
        for _ in range(context.cfg.steps):
            _dynamics.step()
            _sup = max(_sup, context.op.grid.blocks.besov_norm(_dynamics.remainder, -context.cfg.eps))
    except IntegrationError:
        return None
    return np.array([_sup])


def moment_growth_fit(scales, profile, op, cfg: SolverConfig, rng: RngStream, samples=10, workers=1):
    """
    log-log fit of E[sup_{[0,T]}‖v‖_{C^{−ε}}] against ‖u₀‖_{C^{−ε}} over
    u₀ = s·g, a finite stable slope witnessing polynomial growth.
    """
    _rows = []
    for _i, _scale in enumerate(scales):
        _u0 = _scale*profile
        _context = EnsembleContext(op, cfg, rng.spawn('scale', _i))
        _values, _ = _collect(parallel_map(functools.partial(_sup_besov, _context, _u0), range(samples), workers),
                              'moment_growth_fit')
        _rows.append({'scale': _scale, 'initial_norm': op.grid.blocks.besov_norm(_u0, -cfg.eps),
                      'moment': float(np.mean(_values))})
    _table = pd.DataFrame(_rows)
    return _table, linear_fit(np.log(_table['initial_norm']), np.log(_table['moment']))


def _moment_path(context: EnsembleContext, u0, index):
    _exponent = 3*context.cfg.p - 2
    try:
        _dynamics = context.dynamics(u0, 'uniform', index)
        _path = [context.op.grid.lp_norm(_dynamics.u, _exponent)**_exponent]
        for _ in range(context.cfg.steps):
            _dynamics.step()
            _path.append(context.op.grid.lp_norm(_dynamics.u, _exponent)**_exponent)
    except IntegrationError:
        return None
    return np.array(_path)


def uniform_moment_profile(u0, T, samples, op, cfg: SolverConfig, rng: RngStream, workers=1):
    """
        Running maximum over [0, T] of (1∧t^{(3p−2)/2})E[‖u(t)‖^{3p−2}_{L^{3p−2}}]
        and its relative increase over the last tenth of the horizon.
    """
    _cfg = _time_config(cfg, T)
    _context = EnsembleContext(op, _cfg, rng)
    _paths, _ = _collect(parallel_map(functools.partial(_moment_path, _context, u0), range(samples), workers),
                         'uniform_moment_profile')
    _times = _cfg.dt*np.arange(_cfg.steps + 1)
    _weighted = np.minimum(1., _times**((3*_cfg.p - 2)/2))*_paths.mean(axis=0)
    _running = np.maximum.accumulate(_weighted)
    _cut = np.searchsorted(_times, 0.9*T)
    _increase = float((_running[-1] - _running[_cut])/_running[_cut]) if _running[_cut] > 0 else np.nan
    return pd.DataFrame({'t': _times, 'weighted_moment': _weighted, 'running_max': _running}), _increase


def shifted_energy_sweep(scales, profile, op, cfg: SolverConfig, rng: RngStream):
    """
    sup‖ṽ‖²_{L²} + ∫‖ṽ‖²_{H¹} of the shifted ansatz against ‖u₀‖_{L²},
    with the log-log growth fit.
    """
    _rows = [{'scale': _scale, 'initial_norm': op.grid.lp_norm(_scale*profile, 2),
              'energy': shifted_energy(_scale*profile, cfg, op, rng.spawn('energy'))} for _scale in scales]
    _table = pd.DataFrame(_rows)
    return _table, linear_fit(np.log(_table['initial_norm']), np.log(1 + _table['energy']))


@dataclass(eq=False)
class ErgodicityReport:
    observables: list
    averages: dict
    uniqueness: pd.DataFrame
    ks: pd.DataFrame
    coupling: CouplingReport
    variance_slopes: dict = dataclass_field(default_factory=dict)

    def to_dict(self):
        return to_jsonable({'observables': self.observables,
                            'uniqueness': self.uniqueness.to_dict(orient='records'),
                            'ks': self.ks.to_dict(orient='records'),
                            'coupling': self.coupling.to_dict(),
                            'variance_slopes': self.variance_slopes,
                            'final_averages': {_label: _result.table().iloc[-1].to_dict()
                                               for _label, _result in self.averages.items()}})


def ergodicity_report(u0, u0_tilde, observables, T, times, samples, trajectories, op, cfg: SolverConfig,
                      rng: RngStream, workers=1):
    """
        Krylov–Bogoliubov averages from both initial data over [0, T], their
        uniqueness comparison, KS mixing distances at each of times and the
        synchronous coupling rate.
    """
    _averages = {_label: krylov_bogoliubov(_u0, observables, T, cfg.dt, rng.spawn('averages', _i), op, cfg,
                                           trajectories, workers=workers)
                 for _i, (_label, _u0) in enumerate((('first', u0), ('second', u0_tilde)))}
    _ks = []
    for _i, t in enumerate(times):
        _table = mixing_distance(u0, u0_tilde, t, observables, samples, op, cfg, rng.spawn('mixing', _i), workers)
        _table.insert(0, 't', t)
        _ks.append(_table)
    _coupling = synchronous_couple(u0, u0_tilde, T, op, cfg, rng.spawn('coupling'))
    _slopes = {}
    for _o, _phi in enumerate(observables):
        try:
            _slopes[_phi.name] = _averages['first'].variance_slope(_o).slope
        except NumericalError:
            _slopes[_phi.name] = None
    return ErgodicityReport([_phi.name for _phi in observables], _averages,
                            uniqueness_check(_averages['first'], _averages['second']),
                            pd.concat(_ks, ignore_index=True), _coupling, _slopes)


if __name__ == '__main__':
    pass
