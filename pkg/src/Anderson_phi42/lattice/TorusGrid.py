#!/usr/bin/env python
"""
Contains the TorusGrid class definition

Please note that this module is private. The TorusGrid class is
available in the ``Anderson_phi42.lattice`` namespace - use that instead.
"""
import logging

import numpy as np

from ..constants import DEFAULT_SIDE_LENGTH
from ..utils import ConfigurationError

__all__ = ['TorusGrid', 'spectral_transform']

logger = logging.getLogger(__name__)


class TorusGrid:
    _forward = 'forward'
    _inverse = 'inverse'
    def __init__(self, points_per_side, side_length=DEFAULT_SIDE_LENGTH) -> None:
        """
            Periodic square lattice discretizing the 2-torus of side L with
            M nodes per side. Fields living on the grid are plain (M, M)
            numpy arrays indexed [i, j] with node x = (i*h, j*h), x₂ running
            fastest.

            Call signatures::

                grid = TorusGrid(M, L=2π)

            Parameters
            ----------
            points_per_side : int
                Number of nodes M per side, must be a power of two.

            side_length : float
                Physical side length L of the torus. Default to 2π.
        """
        try:
            points_per_side = int(points_per_side)
        except (TypeError, ValueError):
            raise ConfigurationError(f"Grid size must be an integer, got {points_per_side!r}", key='grid.M')
        if points_per_side < 2 or points_per_side & (points_per_side - 1):
            raise ConfigurationError(f"Grid size M={points_per_side} is not a power of two", key='grid.M')
        side_length = float(side_length)
        if not np.isfinite(side_length) or side_length <= 0:
            raise ConfigurationError(f"Side length L={side_length} must be positive", key='grid.L')
        self.__M = points_per_side
        self.__L = side_length
        self.__blocks = None
        _k = np.rint(np.fft.fftfreq(self.__M, 1/self.__M)).astype(int)
        self.__k1, self.__k2 = np.meshgrid(_k, _k, indexing='ij')

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(M={self.M}, L={self.L!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, TorusGrid) and self.M == other.M and self.L == other.L

    def __hash__(self) -> int:
        return hash((self.M, self.L))

    def __getstate__(self):
        state = self.__dict__.copy()
        state[f"_{TorusGrid.__name__}__blocks"] = None
        return state

    @property
    def points_per_side(self):
        return self.__M

    M = points_per_side

    @property
    def side_length(self):
        return self.__L

    L = side_length

    @property
    def spacing(self):
        return self.__L/self.__M

    h = spacing

    @property
    def shape(self):
        return (self.__M, self.__M)

    @property
    def size(self):
        return self.__M**2

    @property
    def volume(self):
        return self.__L**2

    @property
    def k1(self):
        return self.__k1

    @property
    def k2(self):
        return self.__k2

    @property
    def k_squared(self):
        """Integer |k|² of every frequency, in FFT ordering"""
        return self.__k1**2 + self.__k2**2

    @property
    def laplacian_symbol(self):
        """
        Symbol ℓ_h(k) = (2/h²)(2 − cos(2πk₁/M) − cos(2πk₂/M)) of the
        5-point stencil −Δ_h, vanishing only at k = 0.
        """
        _theta = 2*np.pi/self.__M
        return (2/self.h**2)*(2 - np.cos(_theta*self.__k1) - np.cos(_theta*self.__k2))

    @property
    def coordinates(self):
        _x = self.h*np.arange(self.__M)
        return np.meshgrid(_x, _x, indexing='ij')

    @property
    def blocks(self):
        if self.__blocks is None:
            from .LittlewoodPaley import DyadicBlocks
            self.__blocks = DyadicBlocks(self)
        return self.__blocks

    @property
    def max_block(self):
        return self.blocks.max_block

    def flat_index(self, x):
        """Row-major position of node x = (i, j), or x itself if already flat"""
        if np.ndim(x) == 0:
            return int(x) % self.size
        _i, _j = x
        return (int(_i) % self.__M)*self.__M + int(_j) % self.__M

    def distance(self, x, y):
        """Periodic Euclidean distance between nodes x = (i, j) and y"""
        _x = divmod(self.flat_index(x), self.__M)
        _y = divmod(self.flat_index(y), self.__M)
        _d = np.abs(np.subtract(_x, _y))
        _d = np.minimum(_d, self.__M - _d)
        return float(self.h*np.sqrt(np.sum(_d**2)))

    def check(self, *fields):
        for _f in fields:
            if np.shape(_f) != self.shape:
                raise ValueError(f"Field of shape {np.shape(_f)} does not live on {self}")

    def zeros(self):
        return np.zeros(self.shape)

    def constant(self, value):
        return np.full(self.shape, float(value))

    def mode(self, k1, k2=0, kind='cos'):
        """Real Fourier mode cos(2π(k₁x₁+k₂x₂)/L) or its sine counterpart"""
        _x1, _x2 = self.coordinates
        _phase = 2*np.pi*(k1*_x1 + k2*_x2)/self.__L
        return np.cos(_phase) if kind == 'cos' else np.sin(_phase)

    def forward(self, f):
        self.check(f)
        return self.h**2 * np.fft.fft2(f)

    def inverse(self, f_hat):
        self.check(f_hat)
        return np.real(np.fft.ifft2(f_hat)) * self.__M**2 / self.__L**2

    def transform(self, f, direction='forward'):
        if direction == self._forward:
            return self.forward(f)
        elif direction == self._inverse:
            return self.inverse(f)
        raise ValueError(f"Unknown transform direction {direction!r}, expected '{self._forward}' or '{self._inverse}'")

    def integral(self, f):
        self.check(f)
        return self.h**2 * np.sum(f)

    def mean(self, f):
        return self.integral(f)/self.volume

    def inner(self, f, g):
        self.check(f, g)
        return self.h**2 * np.sum(f*g)

    def lp_norm(self, f, p=2):
        """
        Lattice Lᵖ norm (h²Σ|f|ᵖ)^{1/p}, the maximum modulus when p = ∞.
        """
        self.check(f)
        p = float(p)
        if p < 1:
            raise ValueError(f"Lebesgue exponent p={p} must be at least 1")
        _abs = np.abs(f)
        if np.isinf(p):
            return float(np.max(_abs))
        return float((self.h**2 * np.sum(_abs**p))**(1/p))

    def sobolev_inner(self, f, g, s):
        """
        H^s inner product L^{−2}Σ_k (1+|2πk/L|²)^s f̂(k) conj(ĝ(k)).
        """
        _weight = (1 + (2*np.pi/self.__L)**2*self.k_squared)**s
        return float(np.real(np.sum(_weight * self.forward(f) * np.conj(self.forward(g)))) / self.volume)

    def sobolev_norm(self, f, s):
        return float(np.sqrt(max(self.sobolev_inner(f, f, s), 0.)))

    def laplacian(self, f):
        """5-point stencil Δ_h with periodic wrap"""
        self.check(f)
        return (np.roll(f, 1, 0) + np.roll(f, -1, 0) + np.roll(f, 1, 1) + np.roll(f, -1, 1) - 4*f)/self.h**2

    def gradient(self, f):
        """Forward differences with periodic wrap, returned as (∂₁f, ∂₂f)"""
        self.check(f)
        return (np.roll(f, -1, 0) - f)/self.h, (np.roll(f, -1, 1) - f)/self.h

    def h1_norm_squared(self, f):
        _d1, _d2 = self.gradient(f)
        return self.integral(f**2 + _d1**2 + _d2**2)


def spectral_transform(grid: TorusGrid, f, direction='forward'):
    """
        Discrete Fourier transform on the torus.

        forward computes f̂(k) = h² Σₓ f(x)e^{−ik·x} and inverse computes
        f(x) = L^{−2} Σ_k f̂(k)e^{ik·x}, returning the real part. Coefficients
        are stored in numpy FFT ordering of the integer frequencies.
    """
    return grid.transform(f, direction)


if __name__ == '__main__':
    pass
