#!/usr/bin/env python
"""
Contains the OUState and EnhancedNoise class definitions

The stochastic convolution of (∂ₜ + H) = √2ζ is simulated exactly as a
family of independent Ornstein–Uhlenbeck modes in the eigenbasis of H, and
its Wick powers are taken with the exact modal variance.

Please note that this module is private. All classes and functions are
available in the main ``Anderson_phi42`` namespace - use that instead.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .constants import INIT_STATIONARY, INIT_ZERO
from .utils import phi1, linear_fit, batch_mean_stderr
from .Noise import RngStream

__all__ = ['OUState', 'EnhancedNoise', 'step_ou', 'assemble_field', 'hermite', 'wick_power', 'sigma_profile',
           'enhanced_data', 'binomial_shift', 'ConditionedSample', 'low_mode_conditioned_sample',
           'stationary_fields', 'wick_cancellation', 'chaos_covariance', 'variance_log_fit', 'cauchy_trend',
           'stationarity_windows', 'modal_covariance', 'mode_variances']

logger = logging.getLogger(__name__)


def _check_positive(op):
    if op.needs_shift:
        raise ValueError(f"Stationary Ornstein-Uhlenbeck modes need a positive operator, lambda0={op.lambda0:.6g}")


class OUState:
    def __init__(self, op, modes, time=0., init=INIT_STATIONARY) -> None:
        """
            Modal state X_k(t), k = 0..K−1, of the stochastic convolution
            in the eigenbasis of op.

            Call signatures::

                state = OUState.stationary(op, rng, n_modes=None)

                state = OUState.zero(op, n_modes=None)

                state = state.step(dt, rng)

                state = state.step(dt, increment=dW)
        """
        if init not in (INIT_STATIONARY, INIT_ZERO):
            raise ValueError(f"Unknown initialization {init!r}, expected '{INIT_STATIONARY}' or '{INIT_ZERO}'")
        self.__op = op
        self.__modes = np.asarray(modes, dtype=float)
        if not 0 < len(self.__modes) <= op.size:
            raise ValueError(f"Number of modes {len(self.__modes)} outside [1, {op.size}]")
        self.__time = float(time)
        self.__init = init

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(t={self.time:.6g}, modes={self.n_modes}, init={self.init!r})"

    @classmethod
    def stationary(cls, op, rng: RngStream, n_modes=None):
        _check_positive(op)
        n_modes = op.size if n_modes is None else n_modes
        return cls(op, rng.standard_normal(n_modes)/np.sqrt(op.eigenvalues[:n_modes]), 0., INIT_STATIONARY)

    @classmethod
    def zero(cls, op, n_modes=None):
        return cls(op, np.zeros(op.size if n_modes is None else n_modes), 0., INIT_ZERO)

    @property
    def op(self):
        return self.__op

    @property
    def modes(self):
        return self.__modes

    @property
    def n_modes(self):
        return len(self.__modes)

    @property
    def time(self):
        return self.__time

    @property
    def init(self):
        return self.__init

    def step(self, dt, rng: RngStream = None, increment=None):
        """
            Exact transition X_k ← e^{−λ_k dt}X_k + g_k of dX = −λX dt + √2 dB.

            Without increment, g_k ~ N(0, (1−e^{−2λ_k dt})/λ_k) is drawn from
            rng. Given the site increment ΔW of the step, the modal Brownian
            increment ΔB_k = ⟨ΔW, φ_k⟩ is projected out and the stochastic
            integral is conditioned on it, the independent residual being
            drawn from rng; this keeps the modes driven by the same noise as
            the field equation.
        """
        if not dt > 0:
            raise ValueError(f"Time step dt={dt} must be positive")
        _lam = self.__op.eigenvalues[:self.n_modes]
        _decay = np.exp(-_lam*dt)
        if increment is None:
            if rng is None:
                raise ValueError("Either rng or increment is required to step the modes")
            _kick = np.sqrt(2*dt*phi1(2*_lam*dt))*rng.standard_normal(self.n_modes)
        else:
            _db = self.__op.coefficients(increment, self.n_modes - 1)
            _a = phi1(_lam*dt)
            _residual = np.sqrt(np.clip(dt*phi1(2*_lam*dt) - _a**2*dt, 0., None))
            _noise = rng.standard_normal(self.n_modes) if rng is not None else np.zeros(self.n_modes)
            _kick = np.sqrt(2)*(_a*_db + _residual*_noise)
        return OUState(self.__op, _decay*self.__modes + _kick, self.__time + dt, self.__init)

    def field(self, N=None):
        return assemble_field(self, N)


def step_ou(state: OUState, dt, rng: RngStream = None, increment=None) -> OUState:
    return state.step(dt, rng, increment)


def assemble_field(state: OUState, N=None):
    """Π_N⟨ = Σ_{k≤N} X_k φ_k"""
    N = state.n_modes - 1 if N is None else int(N)
    if not 0 <= N < state.n_modes:
        raise ValueError(f"Truncation N={N} outside the {state.n_modes} simulated modes")
    return state.op.synthesize(state.modes[:N+1])


def hermite(x, sigma, n):
    """Hermite polynomial H_n(x, σ) with variance σ, n = 0..3"""
    if n == 0:
        return np.ones_like(x)
    elif n == 1:
        return np.array(x, dtype=float)
    elif n == 2:
        return x**2 - sigma
    elif n == 3:
        return x**3 - 3*sigma*x
    raise ValueError(f"Unsupported Wick order n={n}, expected 1, 2 or 3")


def wick_power(field, sigma, n):
    """:fieldⁿ: = H_n(field, σ) pointwise"""
    if np.shape(field) != np.shape(sigma) and np.ndim(sigma) != 0:
        raise ValueError(f"Field of shape {np.shape(field)} and variance of shape {np.shape(sigma)} differ")
    if n not in (1, 2, 3):
        raise ValueError(f"Unsupported Wick order n={n}, expected 1, 2 or 3")
    return hermite(field, sigma, n)


def mode_variances(op, N, t=0., init=INIT_STATIONARY):
    _lam = op.eigenvalues[:N+1]
    if init == INIT_STATIONARY:
        _check_positive(op)
        return 1/_lam
    elif init == INIT_ZERO:
        if t < 0:
            raise ValueError(f"Zero-initialized variance needs t >= 0, got {t}")
        return 2*t*phi1(2*_lam*t)
    raise ValueError(f"Unknown initialization {init!r}")


def sigma_profile(op, N=None, t=0., init=INIT_STATIONARY):
    """σ_N(x, t) = Σ_{k≤N} φ_k(x)² v_k(t)"""
    N = op.size - 1 if N is None else op._check_truncation(N)
    _v = mode_variances(op, N, t, init)
    return ((op.eigenvectors[:, :N+1]**2) @ _v).reshape(op.grid.shape)/op.grid.h**2


@dataclass(frozen=True, eq=False)
class EnhancedNoise:
    """
    Enhanced data z = (3Π_N⟨, 3:(Π_N⟨)²:, :(Π_N⟨)³:) at one time.
    """
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray
    time: float = 0.
    N: int = None
    sigma: np.ndarray = None

    @classmethod
    def from_field(cls, field, sigma, time=0., N=None):
        return cls(3*field, 3*hermite(field, sigma, 2), hermite(field, sigma, 3), float(time), N, sigma)

    @classmethod
    def zeros(cls, grid, time=0.):
        _zero = grid.zeros()
        return cls(_zero, _zero, _zero, float(time), None, _zero)

    @property
    def fields(self):
        return self.z1, self.z2, self.z3

    def nonlinearity(self, v):
        """v³ + v²z1 + v·z2 + z3"""
        return v**3 + v**2*self.z1 + v*self.z2 + self.z3


def enhanced_data(state: OUState, N=None) -> EnhancedNoise:
    N = state.n_modes - 1 if N is None else N
    _field = assemble_field(state, N)
    _sigma = sigma_profile(state.op, N, state.time, state.init)
    return EnhancedNoise.from_field(_field, _sigma, state.time, N)


def binomial_shift(wick_powers_at_t, propagated, propagated_variance=None):
    """
        Wick powers of the stochastic convolution started at s from those
        of the stationary one,
        :⟨_{s,t}ⁿ: = Σ_k C(n,k)(−1)^k P^k :⟨_{−∞,t}^{n−k}:, n = 1, 2, 3,
        with P = e^{−(t−s)H}⟨_{−∞,s}.

        With propagated_variance σ_P the raw powers P^k are replaced by
        H_k(P, −σ_P), which turns the output into the Wick powers of ⟨_{s,t}
        taken with its own variance σ_∞ − σ_P.

        Parameters
        ----------
        wick_powers_at_t : tuple
            (:⟨¹:, :⟨²:, :⟨³:) at time t, unscaled.

        propagated : ndarray
            P = e^{−(t−s)H}⟨_{−∞,s}.

        propagated_variance : ndarray
            Optional variance profile of P.

        Returns
        -------
        shifted : tuple
            (:⟨_{s,t}¹:, :⟨_{s,t}²:, :⟨_{s,t}³:).
    """
    _w1, _w2, _w3 = wick_powers_at_t
    _p = propagated
    _sigma_p = 0. if propagated_variance is None else -np.asarray(propagated_variance)
    _p1, _p2, _p3 = hermite(_p, _sigma_p, 1), hermite(_p, _sigma_p, 2), hermite(_p, _sigma_p, 3)
    return (_w1 - _p1,
            _w2 - 2*_p1*_w1 + _p2,
            _w3 - 3*_p1*_w2 + 3*_p2*_w1 - _p3)


class ConditionedSample(namedtuple('ConditionedSample', ['accepted', 'tries', 'bound', 'times', 'modes', 'op'])):
    __slots__ = ()

    def enhanced_trajectory(self):
        """EnhancedNoise along an accepted path, with the stationary variance of the conditioned modes"""
        if not self.accepted:
            return []
        _N = self.modes.shape[1] - 1
        _sigma = sigma_profile(self.op, _N, 0., INIT_STATIONARY)
        return [EnhancedNoise.from_field(self.op.synthesize(_x), _sigma, _t, _N) for _t, _x in zip(self.times, self.modes)]


def low_mode_conditioned_sample(op, N_cond, eps_box, T, dt, rng: RngStream, max_tries=1000):
    """
        Rejection sampling of stationary OU paths of modes 0..N_cond on the
        time grid of step dt over [0, T], conditioned on
        sup_t |X_i(t)| ≤ δ = ε_box/((N_cond+1)·max_{i≤N_cond} sup|φ_i|).

        Returns
        -------
        sample : ConditionedSample
            accepted flag, number of tries used, the box bound δ, the time
            grid and the (steps+1, N_cond+1) accepted mode path (None on
            exhaustion). enhanced_trajectory() rebuilds the enhanced data.
    """
    if not eps_box > 0:
        raise ValueError(f"Box size eps_box={eps_box} must be positive")
    _check_positive(op)
    _n_modes = int(N_cond) + 1
    op._check_truncation(N_cond)
    _sup_phi = max(np.max(np.abs(op.eigenfunction(i))) for i in range(_n_modes))
    _bound = eps_box/(_n_modes*_sup_phi)
    _steps = int(np.ceil(T/dt - 1e-9))
    _times = dt*np.arange(_steps + 1)
    for _try in range(1, max_tries + 1):
        _state = OUState.stationary(op, rng, _n_modes)
        _path = [_state.modes]
        _inside = np.all(np.abs(_state.modes) <= _bound)
        for _ in range(_steps):
            if not _inside:
                break
            _state = _state.step(dt, rng)
            _path.append(_state.modes)
            _inside = np.all(np.abs(_state.modes) <= _bound)
        if _inside:
            logger.debug("Conditioned sample accepted after %d tries", _try)
            return ConditionedSample(True, _try, _bound, _times, np.array(_path), op)
    logger.warning("Low-mode conditioning exhausted %d tries with box bound %.3g", max_tries, _bound)
    return ConditionedSample(False, max_tries, _bound, _times, None, op)


def stationary_fields(op, N, samples, rng: RngStream, batch=1000):
    """Independent stationary draws of Π_N⟨, shape (samples, M, M), generated in batches"""
    _check_positive(op)
    N = op._check_truncation(N)
    _scale = 1/np.sqrt(op.eigenvalues[:N+1])
    _out = np.empty((samples,) + op.grid.shape)
    for _start in range(0, samples, batch):
        _stop = min(_start + batch, samples)
        _x = rng.spawn('batch', _start//batch).standard_normal((_stop - _start, N+1))*_scale
        _out[_start:_stop] = (_x @ op.eigenvectors[:, :N+1].T).reshape((-1,) + op.grid.shape)/op.grid.h
    return _out


def modal_covariance(op, N, x, y):
    """E[Π_N⟨(x)Π_N⟨(y)] at stationarity"""
    N = op._check_truncation(N)
    _vx = op.eigenvectors[op.grid.flat_index(x), :N+1]
    _vy = op.eigenvectors[op.grid.flat_index(y), :N+1]
    return float(np.sum(_vx*_vy/op.eigenvalues[:N+1])/op.grid.h**2)


def wick_cancellation(op, N, samples, rng: RngStream):
    """
    Sample means of the spatial averages of :⟨²: and :⟨³: with their
    batch standard errors, and the fraction of sites whose own mean lies
    within 3 standard errors.
    """
    _fields = stationary_fields(op, N, samples, rng)
    _sigma = sigma_profile(op, N)
    _report = {}
    for n in (2, 3):
        _powers = hermite(_fields, _sigma, n)
        _mean, _stderr = batch_mean_stderr(_powers.mean(axis=(1, 2)))
        _site_mean = _powers.mean(axis=0)
        _site_stderr = _powers.std(axis=0, ddof=1)/np.sqrt(samples)
        _report[f"order_{n}"] = {'mean': _mean, 'stderr': _stderr,
                                 'passed': bool(abs(_mean) < 3*_stderr),
                                 'site_pass_fraction': float(np.mean(np.abs(_site_mean) < 3*_site_stderr))}
    return _report


def chaos_covariance(op, N, samples, rng: RngStream, pairs):
    """
    Ratio E[:⟨²:(x):⟨²:(y)] / (2E[⟨(x)⟨(y)]²) at each probe pair, the
    expectation being a sample mean and the covariance the modal formula.
    """
    _fields = stationary_fields(op, N, samples, rng)
    _sigma = sigma_profile(op, N)
    _squares = hermite(_fields, _sigma, 2)
    _ratios = []
    for x, y in pairs:
        _ix = divmod(op.grid.flat_index(x), op.grid.M)
        _iy = divmod(op.grid.flat_index(y), op.grid.M)
        _empirical = np.mean(_squares[:, _ix[0], _ix[1]]*_squares[:, _iy[0], _iy[1]])
        _ratios.append(float(_empirical/(2*modal_covariance(op, N, x, y)**2)))
    return _ratios


def variance_log_fit(op, Ns):
    """Affine fit of the spatial mean of σ_N against log N at stationarity"""
    _means = [op.grid.mean(sigma_profile(op, N)) for N in Ns]
    return linear_fit(np.log(Ns), _means), _means


def cauchy_trend(op, Ns, samples, rng: RngStream, eps=0.25):
    """
        Mean C^{−ε} distances ‖:(Π_{2N}⟨)²: − :(Π_N⟨)²:‖ (renormalized) and
        ‖(Π_{2N}⟨)² − (Π_N⟨)²‖ (raw) for each N, on matched samples.
    """
    _check_positive(op)
    _top = op._check_truncation(2*max(Ns))
    _scale = 1/np.sqrt(op.eigenvalues[:_top+1])
    _renormalized = np.zeros(len(Ns))
    _raw = np.zeros(len(Ns))
    _blocks = op.grid.blocks
    _sigmas = {N: sigma_profile(op, N) for N in set(Ns) | {2*N for N in Ns}}
    for _s in range(samples):
        _modes = rng.spawn('sample', _s).standard_normal(_top+1)*_scale
        _state = OUState(op, _modes)
        for _i, N in enumerate(Ns):
            _coarse, _fine = assemble_field(_state, N), assemble_field(_state, 2*N)
            _renormalized[_i] += _blocks.besov_norm(hermite(_fine, _sigmas[2*N], 2)
                                                    - hermite(_coarse, _sigmas[N], 2), -eps)
            _raw[_i] += _blocks.besov_norm(_fine**2 - _coarse**2, -eps)
    return _renormalized/samples, _raw/samples


def stationarity_windows(op, N, T, dt, window, rng: RngStream):
    """
    Time averages of the spatial mean of z2 and of ‖z1‖²_{L²} over
    consecutive windows of a stationary path; equal in law across windows.
    """
    _state = OUState.stationary(op, rng, N+1)
    _steps_per_window = max(int(round(window/dt)), 1)
    _windows = int(round(T/window))
    _rows = []
    for _w in range(_windows):
        _z2, _z1 = [], []
        for _ in range(_steps_per_window):
            _z = enhanced_data(_state, N)
            _z2.append(op.grid.mean(_z.z2))
            _z1.append(op.grid.lp_norm(_z.z1, 2)**2)
            _state = _state.step(dt, rng)
        _rows.append((_w*window, float(np.mean(_z2)), float(np.mean(_z1))))
    return _rows


if __name__ == '__main__':
    pass
