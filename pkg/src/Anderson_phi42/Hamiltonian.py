#!/usr/bin/env python
"""
Contains the AndersonOperator class definition

Please note that this module is private. The AndersonOperator class and
its functional calculus are available in the main ``Anderson_phi42``
namespace - use that instead.
"""
import logging
from collections import namedtuple

import numpy as np
from scipy import linalg

from .constants import DEFAULT_MASS_FLOOR, SPECTRAL_ZERO_TOL
from .utils import NumericalError, linear_fit
from .Noise import SpaceWhiteNoise, RngStream

__all__ = ['AndersonOperator', 'renorm_constant', 'assemble', 'ensure_positive', 'heat_apply',
           'spectral_projector', 'heat_kernel', 'schauder_exponent_fit', 'schauder_datum',
           'trace_identity', 'gaussian_bound_fit', 'green_function', 'green_log_slope']

logger = logging.getLogger(__name__)


def renorm_constant(grid):
    """
        Lattice renormalization constant c_h = L^{−2} Σ_{k≠0} 1/ℓ_h(k), the
        per-site value of E[ξ·(−Δ_h)⁻¹ξ]. It diverges like (2π)⁻¹log M.
    """
    _symbol = grid.laplacian_symbol.ravel()[1:]
    return float(np.sum(1/_symbol)/grid.volume)


class AndersonOperator:
    def __init__(self, grid, potential, renorm_constant, mass_shift, eigenvalues, eigenvectors) -> None:
        """
            Renormalized lattice Anderson Hamiltonian H = −Δ_h + ξ − c + m
            together with its full eigendecomposition.

            Instances are built by assemble and are immutable. eigenvalues
            are sorted increasingly; the columns of eigenvectors are the
            Euclidean-orthonormal eigenvectors V, the h²-orthonormal
            eigenfunctions being φ_k = V[:, k]/h.

            Call signatures::

                op = AndersonOperator.assemble(grid, xi, c, m)
        """
        self.__grid = grid
        self.__potential = np.asarray(potential, dtype=float)
        self.__renorm_constant = float(renorm_constant)
        self.__mass_shift = float(mass_shift)
        self.__eigenvalues = eigenvalues
        self.__eigenvectors = eigenvectors
        self.__eigenvalues.flags.writeable = False
        self.__eigenvectors.flags.writeable = False

    def __repr__(self) -> str:
        return (f"{self.__class__.__name__}({self.grid!r}, c={self.renorm_constant:.6g}, "
                f"m={self.mass_shift:.6g}, lambda0={self.lambda0:.6g})")

    @classmethod
    def assemble(cls, grid, xi, c=0., m=0.):
        """
            Dense symmetric matrix of the 5-point stencil −Δ_h plus the
            diagonal ξ − c + m, fully diagonalized.

            Parameters
            ----------
            grid : TorusGrid
                Lattice the operator acts on.

            xi : SpaceWhiteNoise or ndarray
                Potential realization.

            c : float
                Renormalization constant subtracted from the potential.

            m : float
                Nonnegative mass shift.

            Returns
            -------
            op : AndersonOperator
                Flagged with needs_shift when λ₀ ≤ 0 up to round-off, in which case
                ensure_positive must be applied before running dynamics.
        """
        if m < 0:
            raise ValueError(f"Mass shift m={m} must be nonnegative")
        _xi = xi.field if isinstance(xi, SpaceWhiteNoise) else np.asarray(xi, dtype=float)
        grid.check(_xi)
        _matrix = cls.stencil_matrix(grid) + np.diag(_xi.ravel() - c + m)
        if not np.all(np.isfinite(_matrix)):
            raise NumericalError("Anderson matrix has non-finite entries")
        try:
            _eigenvalues, _eigenvectors = linalg.eigh(_matrix)
        except linalg.LinAlgError as _error:
            raise NumericalError(f"Eigensolver failed on a {grid.size}x{grid.size} matrix "
                                 f"(Frobenius norm {np.linalg.norm(_matrix):.6g}, "
                                 f"potential range [{_xi.min():.6g}, {_xi.max():.6g}]): {_error}")
        op = cls(grid, _xi, c, m, _eigenvalues, _eigenvectors)
        logger.debug("Assembled %r", op)
        if op.needs_shift:
            logger.info("Anderson operator has lambda0=%.6g <= 0 and needs a mass shift", op.lambda0)
        return op

    @staticmethod
    def stencil_matrix(grid):
        """Dense −Δ_h = D⊗I + I⊗D with D the periodic 1D second difference"""
        _eye = np.eye(grid.M)
        _second = (2*_eye - np.roll(_eye, 1, axis=0) - np.roll(_eye, -1, axis=0))/grid.h**2
        return np.kron(_second, _eye) + np.kron(_eye, _second)

    @property
    def grid(self):
        return self.__grid

    @property
    def potential(self):
        return self.__potential

    @property
    def renorm_constant(self):
        return self.__renorm_constant

    @property
    def mass_shift(self):
        return self.__mass_shift

    @property
    def eigenvalues(self):
        return self.__eigenvalues

    @property
    def eigenvectors(self):
        return self.__eigenvectors

    @property
    def lambda0(self):
        return float(self.__eigenvalues[0])

    @property
    def needs_shift(self):
        """λ₀ is zero up to round-off relative to the spectral radius, or negative"""
        return self.lambda0 <= SPECTRAL_ZERO_TOL*max(1., abs(float(self.__eigenvalues[-1])))

    @property
    def size(self):
        return len(self.__eigenvalues)

    def matrix(self):
        return self.stencil_matrix(self.__grid) + np.diag(self.__potential.ravel() - self.__renorm_constant + self.__mass_shift)

    def apply(self, f):
        """Stencil application Hf, without the eigenbasis"""
        _diagonal = self.__potential - self.__renorm_constant + self.__mass_shift
        return -self.__grid.laplacian(f) + _diagonal*f

    def _check_truncation(self, N):
        if N is None:
            return self.size - 1
        N = int(N)
        if not 0 <= N < self.size:
            raise ValueError(f"Truncation N={N} outside [0, {self.size - 1}]")
        return N

    def eigenfunction(self, k):
        return self.__eigenvectors[:, k].reshape(self.__grid.shape)/self.__grid.h

    def coefficients(self, f, N=None):
        """⟨φ_k, f⟩ for k = 0..N"""
        self.__grid.check(f)
        N = self._check_truncation(N)
        return self.__grid.h * (self.__eigenvectors[:, :N+1].T @ np.ravel(f))

    def synthesize(self, coefficients):
        """Σ_k c_k φ_k over the leading len(c) modes"""
        _c = np.asarray(coefficients)
        return (self.__eigenvectors[:, :len(_c)] @ _c).reshape(self.__grid.shape)/self.__grid.h

    def spectral_apply(self, symbol, f, N=None):
        """g(H)Π_N f for a symbol given as values g(λ_k), k = 0..N, or as a callable"""
        _c = self.coefficients(f, N)
        _g = symbol(self.__eigenvalues[:len(_c)]) if callable(symbol) else np.asarray(symbol)[:len(_c)]
        return self.synthesize(_g*_c)

    def with_mass_shift(self, increment):
        return AndersonOperator(self.__grid, self.__potential, self.__renorm_constant,
                                self.__mass_shift + increment, self.__eigenvalues + increment, self.__eigenvectors)

    def ensure_positive(self, lambda_min=DEFAULT_MASS_FLOOR):
        if not lambda_min > 0:
            raise ValueError(f"Spectral floor lambda_min={lambda_min} must be positive")
        _increment = max(0., lambda_min - self.lambda0)
        if _increment == 0:
            return self
        logger.debug("Shifting mass by %.6g to reach lambda0=%.6g", _increment, lambda_min)
        return self.with_mass_shift(_increment)

    def heat_apply(self, t, f):
        """e^{−tH}f = Σ_k e^{−λ_k t}⟨φ_k, f⟩φ_k, the identity at t = 0"""
        if t < 0:
            raise ValueError(f"Heat semigroup time t={t} must be nonnegative")
        if t == 0:
            self.__grid.check(f)
            return np.array(f, dtype=float)
        return self.spectral_apply(lambda lam: np.exp(-lam*t), f)

    def spectral_projector(self, N, f):
        """Π_N f, the projection on span{φ₀, …, φ_N}"""
        return self.synthesize(self.coefficients(f, N))

    def heat_kernel(self, t, x, y):
        """K_t(x, y) = Σ_k e^{−λ_k t}φ_k(x)φ_k(y) at nodes x, y given as (i, j) or flat indices"""
        if not t > 0:
            raise ValueError(f"Heat kernel time t={t} must be positive")
        _vx = self.__eigenvectors[self.__grid.flat_index(x)]
        _vy = self.__eigenvectors[self.__grid.flat_index(y)]
        return float(np.sum(np.exp(-self.__eigenvalues*t)*_vx*_vy)/self.__grid.h**2)

    def heat_kernel_matrix(self, t):
        if not t > 0:
            raise ValueError(f"Heat kernel time t={t} must be positive")
        _weighted = self.__eigenvectors*np.exp(-self.__eigenvalues*t)
        return (_weighted @ self.__eigenvectors.T)/self.__grid.h**2


def assemble(grid, xi, c=0., m=0.):
    return AndersonOperator.assemble(grid, xi, c, m)


def ensure_positive(op: AndersonOperator, lambda_min=DEFAULT_MASS_FLOOR):
    return op.ensure_positive(lambda_min)


def heat_apply(op: AndersonOperator, t, f):
    return op.heat_apply(t, f)


def spectral_projector(op: AndersonOperator, N, f):
    return op.spectral_projector(N, f)


def heat_kernel(op: AndersonOperator, t, x, y):
    return op.heat_kernel(t, x, y)


def schauder_datum(grid, alpha, rng: RngStream):
    """
    Random u₀ = Σⱼ 2^{−αj}Δⱼζ/‖Δⱼζ‖_∞ built from a white field ζ, so that
    ‖u₀‖_{C^α} = 1 exactly.
    """
    _blocks = grid.blocks.decompose(rng.standard_normal(grid.shape))
    _u0 = grid.zeros()
    for j, _block in enumerate(_blocks):
        _sup = np.max(np.abs(_block))
        if _sup > 0:
            _u0 += 2.**(-alpha*j)*_block/_sup
    return _u0


def schauder_exponent_fit(op: AndersonOperator, alpha, beta, samples=20, rng=None, times=None):
    """
        Fitted exponent of t ↦ ‖e^{−tH}u₀‖_{C^β} for C^α-normalized random
        data, to be compared with −(β−α)/2.

        Parameters
        ----------
        op : AndersonOperator
            Operator generating the semigroup.

        alpha, beta : float
            Regularity exponents with −1 < α ≤ β < 1.

        samples : int
            Number of random data u₀. Default to 20.

        rng : RngStream
            Stream for the random data. Default to RngStream(0, 'schauder').

        times : array_like
            Regression times. Default to 9 log-spaced times in [1e−3, 1e−1].

        Returns
        -------
        slope : float
            Least-squares slope of log‖e^{−tH}u₀‖_{C^β} against log t,
            pooled over all samples.
    """
    if not -1 < alpha <= beta < 1:
        raise ValueError(f"Schauder exponents must satisfy -1 < alpha <= beta < 1, got ({alpha}, {beta})")
    rng = RngStream(0, 'schauder') if rng is None else rng
    times = np.logspace(-3, -1, 9) if times is None else np.asarray(times, dtype=float)
    _log_t, _log_norm = [], []
    for _ in range(samples):
        _u0 = schauder_datum(op.grid, alpha, rng)
        for t in times:
            _log_t.append(np.log(t))
            _log_norm.append(np.log(op.grid.blocks.besov_norm(op.heat_apply(t, _u0), beta)))
    return linear_fit(_log_t, _log_norm).slope


def trace_identity(op: AndersonOperator, t):
    """Both sides of Σ_k e^{−λ_k t} = h²Σₓ K_t(x, x)"""
    _kernel_diagonal = np.sum(op.eigenvectors**2*np.exp(-op.eigenvalues*t), axis=1)/op.grid.h**2
    return float(np.sum(np.exp(-op.eigenvalues*t))), float(op.grid.h**2*np.sum(_kernel_diagonal))


GaussianBound = namedtuple('GaussianBound', ['c', 'bound', 'r_squared'])


def gaussian_bound_fit(op: AndersonOperator, times, pairs):
    """
        Least-squares fit of log(t·K_t(x,y)) ≈ log C − c|x−y|²/t over the
        sampled times and node pairs, returning the fitted c and the
        resulting bound max t·K_t(x,y)·e^{c|x−y|²/t}.
    """
    _scaled_sq, _log_tk, _records = [], [], []
    for t in times:
        for x, y in pairs:
            _tk = t*op.heat_kernel(t, x, y)
            _d2 = op.grid.distance(x, y)**2/t
            _records.append((_tk, _d2))
            if _tk > 0:
                _scaled_sq.append(-_d2)
                _log_tk.append(np.log(_tk))
    _fit = linear_fit(_scaled_sq, _log_tk)
    _c = max(_fit.slope, 0.)
    _bound = max(_tk*np.exp(_c*_d2) for _tk, _d2 in _records)
    return GaussianBound(float(_c), float(_bound), _fit.r_squared)


def green_function(op: AndersonOperator, x):
    """G(x, ·) = Σ_k φ_k(x)φ_k(·)/λ_k, for a positive operator"""
    if op.needs_shift:
        raise NumericalError(f"Green function requires a positive operator, lambda0={op.lambda0:.6g}")
    _vx = op.eigenvectors[op.grid.flat_index(x)]
    return (op.eigenvectors @ (_vx/op.eigenvalues)).reshape(op.grid.shape)/op.grid.h**2


def green_log_slope(op: AndersonOperator, x=(0, 0), max_offset=None):
    """
    Slope of G(x, y) against log|x−y| along the first axis, for offsets
    1..max_offset nodes; close to −1/(2π) on fine grids.
    """
    max_offset = op.grid.M//4 if max_offset is None else max_offset
    _green = green_function(op, x)
    _i, _j = divmod(op.grid.flat_index(x), op.grid.M)
    _offsets = np.arange(1, max_offset + 1)
    _values = [_green[(_i + _o) % op.grid.M, _j] for _o in _offsets]
    return linear_fit(np.log(_offsets*op.grid.h), _values).slope


if __name__ == '__main__':
    pass
