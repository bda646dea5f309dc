#!/usr/bin/env python
"""
Contains the SolverConfig, TruncatedDynamics and ParacontrolledPair class
definitions

The remainder v = u − Π_N⟨ solves ∂ₜv + Hv + v³ + v²z1 + v·z2 + z3 = 0 and is
advanced by exponential Euler in the eigenbasis of H, while the modes of the
stochastic convolution follow their exact transitions.

Please note that this module is private. All classes and functions are
available in the main ``Anderson_phi42`` namespace - use that instead.
"""
import logging
from dataclasses import dataclass, asdict, field as dataclass_field

import numpy as np
import pandas as pd

from .constants import *
from .utils import ConfigurationError, IntegrationError, ConvergenceError, phi1
from .Noise import RngStream, sample_wiener_increment, random_smooth_field
from .Wick import OUState, EnhancedNoise, enhanced_data, hermite

__all__ = ['SolverConfig', 'step_v', 'step_eta', 'phi_map', 'gamma_map', 'ParacontrolledPair',
           'contraction_proxy', 'remainder_equation_diagnostics', 'shifted_data', 'DiagnosticConstants',
           'ConstantsAccumulator', 'diagnostic_constants', 'TruncatedDynamics', 'Trajectory', 'simulate',
           'remainder_operator_ratio', 'shifted_energy', 'coming_down_statistic', 'random_direction']

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """
    Time stepping and diagnostic parameters. N = None keeps every mode
    (M²−1); ε < σ and q satisfy (σ+ε)/2·q/(q−1) < 1/3.
    """
    dt: float = 1e-2
    T: float = 1.0
    N: int = None
    n: int = 1
    eps: float = DEFAULT_EPS
    sigma: float = DEFAULT_SIGMA
    p: int = DEFAULT_P
    q: float = DEFAULT_Q
    a: float = DEFAULT_KTILDE_A
    b: float = DEFAULT_KTILDE_B
    lambda_min: float = DEFAULT_MASS_FLOOR
    tol: float = 1e-12
    max_iter: int = 200
    scheme: str = SCHEME_EXPONENTIAL_EULER

    def __post_init__(self):
        _prefix = f"{CTAGS.solver}."
        if not self.dt > 0:
            raise ConfigurationError(f"Time step dt={self.dt} must be positive", key=_prefix+CTAGS.dt)
        if not self.T > 0:
            raise ConfigurationError(f"Horizon T={self.T} must be positive", key=_prefix+CTAGS.T)
        if self.N is not None and self.N < 0:
            raise ConfigurationError(f"Spectral truncation N={self.N} must be nonnegative", key=_prefix+CTAGS.N)
        if self.n < 0:
            raise ConfigurationError(f"Paraproduct truncation n={self.n} must be nonnegative", key=_prefix+CTAGS.n)
        if not 0 < self.eps < self.sigma < 1:
            raise ConfigurationError(f"Exponents must satisfy 0 < eps < sigma < 1, got eps={self.eps}, sigma={self.sigma}",
                                     key=_prefix+CTAGS.eps)
        if not self.q > 1:
            raise ConfigurationError(f"Time integrability q={self.q} must exceed 1", key=_prefix+CTAGS.q)
        if not (self.sigma + self.eps)/2*self.q/(self.q - 1) < 1/3:
            raise ConfigurationError(f"Exponents violate (sigma+eps)/2*q/(q-1) < 1/3 with sigma={self.sigma}, "
                                     f"eps={self.eps}, q={self.q}", key=_prefix+CTAGS.sigma)
        if int(self.p) != self.p or self.p < 2 or self.p % 2:
            raise ConfigurationError(f"Diagnostic exponent p={self.p} must be an even integer", key=_prefix+CTAGS.p)
        if not (self.a > 0 and self.b > 0):
            raise ConfigurationError(f"Exponents a={self.a}, b={self.b} must be positive", key=_prefix+CTAGS.a)
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"Unknown scheme {self.scheme!r}, expected one of {SCHEMES}", key=_prefix+CTAGS.scheme)
        if not self.lambda_min > 0:
            raise ConfigurationError(f"Spectral floor {self.lambda_min} must be positive",
                                     key=f"{CTAGS.hamiltonian}.{CTAGS.mass_floor}")

    @property
    def steps(self):
        return int(round(self.T/self.dt))

    def truncation(self, op):
        return op.size - 1 if self.N is None else min(int(self.N), op.size - 1)

    def replace(self, **changes):
        return SolverConfig(**{**asdict(self), **changes})

    def as_dict(self):
        return asdict(self)


def _check_finite(field, time, what='v'):
    if not np.all(np.isfinite(field)):
        raise IntegrationError(f"Non-finite {what} field after time step", time)
    return field


def step_v(v, z: EnhancedNoise, dt, op, time=None, scheme=SCHEME_EXPONENTIAL_EULER, nonlinear=True):
    """
        One step of the remainder equation.

        exponential_euler: v ← e^{−dtH}v − dt·φ₁(dtH)(v³ + v²z1 + v·z2 + z3),
        the nonlinearity being frozen at the left endpoint.

        split: the exact pointwise flow v ← v/√(1+2dt·v²) of ∂ₜv = −v³,
        followed by the exponential Euler step of the remaining terms
        v²z1 + v·z2 + z3. It stays stable for arbitrarily large data.

        With nonlinear=False only the linear flow e^{−dtH}v is applied.
    """
    if not dt > 0:
        raise ValueError(f"Time step dt={dt} must be positive")
    _lam_dt = op.eigenvalues*dt
    _time = (z.time if time is None else time) + dt
    if not nonlinear:
        return _check_finite(op.spectral_apply(np.exp(-_lam_dt), v), _time)
    if scheme == SCHEME_SPLIT:
        v = v/np.sqrt(1 + 2*dt*v**2)
        _forcing = v**2*z.z1 + v*z.z2 + z.z3
    elif scheme == SCHEME_EXPONENTIAL_EULER:
        _forcing = z.nonlinearity(v)
    else:
        raise ValueError(f"Unknown scheme {scheme!r}, expected one of {SCHEMES}")
    _coefficients = np.exp(-_lam_dt)*op.coefficients(v) - dt*phi1(_lam_dt)*op.coefficients(_forcing)
    return _check_finite(op.synthesize(_coefficients), _time)


def step_eta(eta, u, sigma, dt, op, time=None, nonlinear=True):
    """
        One exponential Euler step of ∂ₜη + Hη + 3:u²:η = 0, the potential
        3(u² − σ) frozen at the left endpoint. It is the exact derivative of
        step_v along the direction η.
    """
    if not dt > 0:
        raise ValueError(f"Time step dt={dt} must be positive")
    _lam_dt = op.eigenvalues*dt
    _forcing = 3*hermite(u, sigma, 2)*eta if nonlinear else np.zeros_like(eta)
    _coefficients = np.exp(-_lam_dt)*op.coefficients(eta) - dt*phi1(_lam_dt)*op.coefficients(_forcing)
    return _check_finite(op.synthesize(_coefficients), (0. if time is None else time) + dt, 'eta')


def phi_map(v, X_gt_n, grid):
    """Φₙ(v) = v − v ≺ X_{>n}"""
    return v - grid.blocks.paraproduct(v, X_gt_n, 'lower')


@dataclass(frozen=True, eq=False)
class ParacontrolledPair:
    v: np.ndarray
    w: np.ndarray
    n: int
    residual: float
    iterations: int = 0


def contraction_proxy(X_gt_n, grid, probes=8, rng: RngStream = None):
    """Largest ratio ‖v ≺ X_{>n}‖_{L²}/‖v‖_{L²} over random probe fields"""
    rng = RngStream(0, 'contraction') if rng is None else rng
    _ratios = []
    for _ in range(probes):
        _v = rng.standard_normal(grid.shape)
        _ratios.append(grid.lp_norm(grid.blocks.paraproduct(_v, X_gt_n, 'lower'), 2)/grid.lp_norm(_v, 2))
    return float(max(_ratios))


def gamma_map(w, X_gt_n, grid, tol=1e-12, max_iter=200, n=None):
    """
        Γₙ(w), the inverse of Φₙ, by the fixed-point iteration
        v ← w + v ≺ X_{>n} started from v = w.

        Raises
        ------
        ConvergenceError
            When the residual ‖Φₙ(v) − w‖_{L²} stays above tol·max(1, ‖w‖_{L²})
            after max_iter iterations; a larger n shrinks X_{>n}.
    """
    _proxy = contraction_proxy(X_gt_n, grid, probes=4)
    if _proxy >= 1:
        logger.warning("Paraproduct with X_>n has norm proxy %.3g >= 1, the fixed point may diverge; "
                       "consider a larger n", _proxy)
    _scale = max(1., grid.lp_norm(w, 2))
    _v = np.array(w, dtype=float)
    _residual = grid.lp_norm(phi_map(_v, X_gt_n, grid) - w, 2)
    _iteration = 0
    while _residual > tol*_scale:
        if _iteration >= max_iter or not np.isfinite(_residual):
            raise ConvergenceError(f"Gamma map did not converge in {max_iter} iterations (residual {_residual:.3g}, "
                                   f"paraproduct norm proxy {_proxy:.3g}); increase the paraproduct truncation n")
        _v = w + grid.blocks.paraproduct(_v, X_gt_n, 'lower')
        _residual = grid.lp_norm(phi_map(_v, X_gt_n, grid) - w, 2)
        _iteration += 1
    return ParacontrolledPair(_v, np.array(w, dtype=float), n, float(_residual), _iteration)


def remainder_equation_diagnostics(pair: ParacontrolledPair, op, z: EnhancedNoise, p, X_gt_n):
    """
        Budget of the remainder equation tested against w^{3p−3}.

        Returns
        -------
        report : dict
            good_lp = ‖w‖_{L^{3p}}^{3p}, good_gradient = (3p−3)‖|∇w|²w^{3p−4}‖_{L¹},
            the pairings of Q1, Q2, Q3 and ξ ⪯ w with w^{3p−3}, the coercive
            total and whether it dominates |⟨Q1, w^{3p−3}⟩|.
    """
    if int(p) != p or p % 2:
        raise ValueError(f"Testing exponent p={p} must be an even integer")
    grid = op.grid
    _v, _w = pair.v, pair.w
    _test = _w**(3*p - 3)
    _d1, _d2 = grid.gradient(_w)
    _para = lambda f: grid.blocks.paraproduct(f, X_gt_n, 'lower')
    _vx = _para(_v)
    _q1 = -_para(_v**3) + _vx**3 + 3*_vx*_w**2 + 3*_vx**2*_w
    _q2 = _v**2*z.z1 + _v*z.z2 + z.z3
    _q3 = -_para(_q2)
    _report = {
        'good_lp': grid.integral(_w**(3*p)),
        'good_gradient': (3*p - 3)*grid.integral((_d1**2 + _d2**2)*_w**(3*p - 4)),
        'pairing_q1': grid.inner(_q1, _test),
        'pairing_q2': grid.inner(_q2, _test),
        'pairing_q3': grid.inner(_q3, _test),
        'pairing_xi': grid.inner(grid.blocks.paraproduct(op.potential, _w, 'leq'), _test)}
    _report['coercive'] = _report['good_lp'] + _report['good_gradient']
    _report['coercive_dominates'] = bool(_report['coercive'] >= abs(_report['pairing_q1']))
    return {_key: (_value if isinstance(_value, bool) else float(_value)) for _key, _value in _report.items()}


def shifted_data(z_trajectory, u0, op):
    """
        Enhanced data of the ansatz u = Π_N⟨ + e^{−tH}u₀ + ṽ:
        z̃1 = z1 + 3P, z̃2 = z2 + 2P·z1 + 3P², z̃3 = z3 + P²·z1 + P·z2 + P³
        with P = e^{−tH}u₀ at the time of each element.
    """
    _out = []
    for z in z_trajectory:
        _p = op.heat_apply(z.time, u0)
        _out.append(EnhancedNoise(z.z1 + 3*_p,
                                  z.z2 + 2*_p*z.z1 + 3*_p**2,
                                  z.z3 + _p**2*z.z1 + _p*z.z2 + _p**3,
                                  z.time, z.N, z.sigma))
    return _out


@dataclass(frozen=True, eq=False)
class DiagnosticConstants:
    times: np.ndarray
    K: np.ndarray
    K_tilde: np.ndarray
    p: int
    eps: float
    q: float
    a: float
    b: float

    def to_frame(self):
        return pd.DataFrame({'t': self.times, 'K_t': self.K, 'K_tilde_t': self.K_tilde})


class ConstantsAccumulator:
    def __init__(self, grid, p=DEFAULT_P, eps=DEFAULT_EPS, q=DEFAULT_Q, a=DEFAULT_KTILDE_A, b=DEFAULT_KTILDE_B) -> None:
        """
            Running K_t = sup_{r≤t}‖z1‖^{2p} + ∫₀ᵗ‖z2‖^{3p} + ∫₀ᵗ‖z3‖^{3p} and
            K̃_t = (sup_{r≤t}‖z1‖ + t^a‖z2‖_{L^q_t} + t^a‖z3‖_{L^q_t})^b, with
            C^{−ε} norms and left-endpoint quadrature.
        """
        self.__grid = grid
        self.__p, self.__eps, self.__q, self.__a, self.__b = p, eps, q, a, b
        self.__sup1 = 0.
        self.__int2 = self.__int3 = 0.
        self.__intq2 = self.__intq3 = 0.
        self.__last = None
        self.__times, self.__K, self.__K_tilde = [], [], []

    def update(self, z: EnhancedNoise):
        _norm = lambda f: self.__grid.blocks.besov_norm(f, -self.__eps)
        _n1, _n2, _n3 = _norm(z.z1), _norm(z.z2), _norm(z.z3)
        if self.__last is not None:
            _dt = z.time - self.__last[0]
            _l2, _l3 = self.__last[1:]
            self.__int2 += _dt*_l2**(3*self.__p)
            self.__int3 += _dt*_l3**(3*self.__p)
            self.__intq2 += _dt*_l2**self.__q
            self.__intq3 += _dt*_l3**self.__q
        self.__sup1 = max(self.__sup1, _n1)
        self.__last = (z.time, _n2, _n3)
        _K = self.__sup1**(2*self.__p) + self.__int2 + self.__int3
        _t_a = max(z.time, 0.)**self.__a
        _K_tilde = (self.__sup1 + _t_a*(self.__intq2**(1/self.__q) + self.__intq3**(1/self.__q)))**self.__b
        self.__times.append(z.time)
        self.__K.append(_K)
        self.__K_tilde.append(_K_tilde)
        return _K, _K_tilde

    @property
    def constants(self):
        return DiagnosticConstants(np.array(self.__times), np.array(self.__K), np.array(self.__K_tilde),
                                   self.__p, self.__eps, self.__q, self.__a, self.__b)


def diagnostic_constants(z_trajectory, grid, p=DEFAULT_P, eps=DEFAULT_EPS, q=DEFAULT_Q, a=DEFAULT_KTILDE_A, b=DEFAULT_KTILDE_B):
    _accumulator = ConstantsAccumulator(grid, p, eps, q, a, b)
    for z in z_trajectory:
        _accumulator.update(z)
    return _accumulator.constants


class TruncatedDynamics:
    _standard = 'standard'
    _shifted = 'shifted'
    def __init__(self, op, cfg: SolverConfig, u0, rng: RngStream = None, noise=True, ansatz='standard', z_path=None,
                 nonlinear=True) -> None:
        """
            Stepper of the truncated dynamics ∂ₜu + Hu + :u³: = √2Π_Nζ
            written as u = Π_N⟨ + v with ⟨(0) = 0 and v(0) = u₀.

            Each step draws the site increment ΔW (stored as
            last_increment) then the residual noise of the modes, always
            in that order, so that two dynamics on equal streams share
            their noise.

            Call signatures::

                dynamics = TruncatedDynamics(op, cfg, u0, rng)

                dynamics = TruncatedDynamics(op, cfg, u0, noise=False)

                dynamics = TruncatedDynamics(op, cfg, u0, rng, ansatz='shifted')

                dynamics = TruncatedDynamics(op, cfg, u0, z_path=enhanced_list)

            Parameters
            ----------
            op : AndersonOperator
                Positive operator H.

            cfg : SolverConfig
                Time step and truncation.

            u0 : ndarray
                Initial datum.

            rng : RngStream
                Noise stream, required when noise is on and no z_path is
                given.

            noise : bool
                Switches the stochastic forcing off (z ≡ 0) when False.

            ansatz : string
                'standard' evolves v from u₀; 'shifted' evolves ṽ from 0 with
                the shifted data z̃ so that u = Π_N⟨ + e^{−tH}u₀ + ṽ.

            nonlinear : bool
                Drops the cubic nonlinearity when False, leaving the linear
                stochastic heat equation.

            z_path : list of EnhancedNoise
                Prescribed enhanced data, one element per time step.
        """
        if op.needs_shift:
            raise ValueError(f"Dynamics require a positive operator, lambda0={op.lambda0:.6g}")
        if ansatz not in (self._standard, self._shifted):
            raise ValueError(f"Unknown ansatz {ansatz!r}")
        op.grid.check(u0)
        if noise and z_path is None and rng is None:
            raise ValueError("A random stream is required for the noisy dynamics")
        self.__op = op
        self.__cfg = cfg
        self.__u0 = np.array(u0, dtype=float)
        self.__rng = rng
        self.__noise = noise
        self.__ansatz = ansatz
        self.__z_path = z_path
        self.__nonlinear = nonlinear
        self.__N = cfg.truncation(op)
        self.__step = 0
        self.__time = 0.
        self.__last_increment = None
        self.__ou = OUState.zero(op, self.__N + 1) if (noise and z_path is None) else None
        self.__v = op.grid.zeros() if ansatz == self._shifted else self.__u0.copy()
        self.__z = self.__current_data()

    def __current_data(self):
        if self.__z_path is not None:
            _z = self.__z_path[min(self.__step, len(self.__z_path) - 1)]
            _z = EnhancedNoise(_z.z1, _z.z2, _z.z3, self.__time, _z.N, _z.sigma)
        elif self.__ou is not None:
            _z = enhanced_data(self.__ou, self.__N)
        else:
            _z = EnhancedNoise.zeros(self.__op.grid, self.__time)
        if self.__ansatz == self._shifted:
            _z = shifted_data([_z], self.__u0, self.__op)[0]
        return _z

    @property
    def op(self):
        return self.__op

    @property
    def nonlinear(self):
        return self.__nonlinear

    @property
    def cfg(self):
        return self.__cfg

    @property
    def time(self):
        return self.__time

    @property
    def step_count(self):
        return self.__step

    @property
    def v(self):
        return self.__v

    @property
    def z(self):
        return self.__z

    @property
    def last_increment(self):
        return self.__last_increment

    @property
    def psi(self):
        """Π_N⟨ at the current time"""
        if self.__ou is not None:
            return self.__ou.field(self.__N)
        if self.__z_path is not None:
            return self.__z_path[min(self.__step, len(self.__z_path) - 1)].z1/3
        return self.__op.grid.zeros()

    @property
    def sigma(self):
        _sigma = self.__z.sigma
        return self.__op.grid.zeros() if _sigma is None else _sigma

    @property
    def u(self):
        _u = self.psi + self.__v
        if self.__ansatz == self._shifted:
            _u = _u + self.__op.heat_apply(self.__time, self.__u0)
        return _u

    @property
    def remainder(self):
        """v = u − Π_N⟨ whatever the ansatz"""
        return self.u - self.psi

    def step(self):
        _dt = self.__cfg.dt
        self.__v = step_v(self.__v, self.__z, _dt, self.__op, self.__time, self.__cfg.scheme, self.__nonlinear)
        if self.__ou is not None:
            self.__last_increment = sample_wiener_increment(self.__op.grid, _dt, self.__rng)
            self.__ou = self.__ou.step(_dt, self.__rng, increment=self.__last_increment)
        self.__step += 1
        self.__time = self.__step*_dt
        self.__z = self.__current_data()
        return self.__last_increment


@dataclass(eq=False)
class Trajectory:
    times: list = dataclass_field(default_factory=list)
    u: list = dataclass_field(default_factory=list)
    v: list = dataclass_field(default_factory=list)
    diagnostics: pd.DataFrame = None
    constants: DiagnosticConstants = None
    horizon: float = 0.
    completed: bool = True


def simulate(u0, cfg: SolverConfig, op, rng: RngStream = None, output_times=None, noise=True, ansatz='standard',
             z_path=None, record_every=1, nonlinear=True):
    """
        Integrates the truncated dynamics from u₀ over [0, T].

        Parameters
        ----------
        u0 : ndarray
            Initial datum.

        cfg : SolverConfig
            Solver parameters.

        op : AndersonOperator
            Positive operator H.

        rng : RngStream
            Noise stream.

        output_times : array_like
            Times at which u and v are stored, rounded to the time grid.
            Default to [T].

        noise, ansatz, z_path, nonlinear
            Passed to TruncatedDynamics.

        record_every : int
            Stride of the diagnostics rows.

        Returns
        -------
        trajectory : Trajectory
            Stored fields, diagnostics table with columns t, L2, L4, L3p2
            (norms of v), weighted_L3p2 = (1∧√t)‖v‖_{L^{3p−2}}, besov_u
            (C^{−ε} norm of u), K_t, K_tilde_t, and the constants.
    """
    _dynamics = TruncatedDynamics(op, cfg, u0, rng, noise, ansatz, z_path, nonlinear)
    _grid = op.grid
    _steps = cfg.steps
    output_times = [cfg.T] if output_times is None else output_times
    _output_steps = {int(round(_t/cfg.dt)): _t for _t in output_times}
    _accumulator = ConstantsAccumulator(_grid, cfg.p, cfg.eps, cfg.q, cfg.a, cfg.b)
    _trajectory = Trajectory()
    _rows = []
    while True:
        _t = _dynamics.time
        _K, _K_tilde = _accumulator.update(_dynamics.z)
        _step = _dynamics.step_count
        _v = _dynamics.remainder
        if _step % record_every == 0 or _step == _steps:
            _u = _dynamics.u
            _l3p2 = _grid.lp_norm(_v, 3*cfg.p - 2)
            _rows.append({'t': _t, 'L2': _grid.lp_norm(_v, 2), 'L4': _grid.lp_norm(_v, 4), 'L3p2': _l3p2,
                          'weighted_L3p2': min(1., np.sqrt(_t))*_l3p2, 'besov_u': _grid.blocks.besov_norm(_u, -cfg.eps),
                          'K_t': _K, 'K_tilde_t': _K_tilde})
        if _step in _output_steps:
            _trajectory.times.append(_t)
            _trajectory.u.append(_dynamics.u)
            _trajectory.v.append(_v)
        if _step >= _steps:
            break
        try:
            _dynamics.step()
        except IntegrationError as _error:
            logger.warning("Integration stopped, blow-up-free horizon %.6g: %s", _t, _error)
            _trajectory.completed = False
            _trajectory.horizon = _t
            _trajectory.diagnostics = pd.DataFrame(_rows)
            _trajectory.constants = _accumulator.constants
            raise
    _trajectory.horizon = _dynamics.time
    _trajectory.diagnostics = pd.DataFrame(_rows)
    _trajectory.constants = _accumulator.constants
    logger.debug("Simulated %d steps up to t=%.6g", _steps, _dynamics.time)
    return _trajectory


def coming_down_statistic(trajectory: Trajectory, window=(0.5, 1.0)):
    """max over t in window of (1∧√t)‖v(t)‖_{L^{3p−2}}"""
    _table = trajectory.diagnostics
    _mask = (_table['t'] >= window[0] - 1e-12) & (_table['t'] <= window[1] + 1e-12)
    return float(_table.loc[_mask, 'weighted_L3p2'].max())


def shifted_energy(u0, cfg: SolverConfig, op, rng: RngStream, noise=True):
    """sup_t ‖ṽ(t)‖²_{L²} + ∫₀ᵀ‖ṽ‖²_{H¹} along the shifted ansatz, left quadrature"""
    _dynamics = TruncatedDynamics(op, cfg, u0, rng, noise, ansatz='shifted')
    _grid = op.grid
    _sup = _grid.lp_norm(_dynamics.v, 2)**2
    _integral = 0.
    for _ in range(cfg.steps):
        _integral += cfg.dt*_grid.h1_norm_squared(_dynamics.v)
        _dynamics.step()
        _sup = max(_sup, _grid.lp_norm(_dynamics.v, 2)**2)
    return float(_sup + _integral)


def remainder_operator_ratio(op, X_gt_n, w, kappa=0.25, kappa_prime=0.25, p=2):
    """
        ‖R_n w‖_{B^{−κ'}_{p,∞}} / ‖w‖_{B^{κ}_{p,∞}} for the lattice remainder
        R_n(w) = Φₙ(HΓₙw) + Δ_h w − ξ ⪯ w.
    """
    grid = op.grid
    _v = gamma_map(w, X_gt_n, grid).v
    _remainder = phi_map(op.apply(_v), X_gt_n, grid) + grid.laplacian(w) - grid.blocks.paraproduct(op.potential, w, 'leq')
    _den = grid.blocks.besov_norm(w, kappa, p)
    return grid.blocks.besov_norm(_remainder, -kappa_prime, p)/_den if _den > 0 else np.nan


def random_direction(grid, rng: RngStream, smoothness=2.0):
    """Smooth unit-L² direction for derivative probes"""
    _h = random_smooth_field(grid, rng, smoothness)
    return _h/grid.lp_norm(_h, 2)


if __name__ == '__main__':
    pass
