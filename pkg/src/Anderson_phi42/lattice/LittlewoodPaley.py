#!/usr/bin/env python
"""
Contains the DyadicBlocks class definition, with the Besov norms and Bony
paraproducts built on top of it.

Blocks are sharp annuli of the integer frequency lattice: block 0 holds
|k| ≤ 1 and block j ≥ 1 holds 2^{j−1} < |k| ≤ 2^j, so that the blocks
reconstruct a field exactly.
"""
import logging

import numpy as np

from ..constants import PARAPRODUCT_MODES

__all__ = ['DyadicBlocks', 'lp_block', 'besov_norm', 'paraproduct', 'interpolation_ratio',
           'power_product_ratio', 'duality_ratio']

logger = logging.getLogger(__name__)


class DyadicBlocks:
    def __init__(self, grid) -> None:
        self.__grid = grid
        _ksq = grid.k_squared
        _index = np.zeros(grid.shape, dtype=int)
        j = 1
        while np.any(_ksq > 4**(j-1)):
            _index[_ksq > 4**(j-1)] = j
            j += 1
        self.__index = _index
        self.__max_block = int(_index.max())
        self.__masks = np.stack([_index == j for j in range(self.__max_block + 1)])

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.__grid!r}, J={self.max_block})"

    @property
    def grid(self):
        return self.__grid

    @property
    def block_index_of_frequency(self):
        return self.__index

    @property
    def max_block(self):
        return self.__max_block

    @property
    def masks(self):
        return self.__masks

    def _check_block(self, j):
        if not 0 <= j <= self.max_block:
            raise ValueError(f"Block index j={j} outside [0, {self.max_block}]")

    def lp_block(self, f, j):
        """Δⱼf, the inverse transform of f̂ restricted to block j"""
        self._check_block(j)
        return self.__grid.inverse(self.__grid.forward(f)*self.__masks[j])

    def decompose(self, f):
        """Stack of every block Δ₀f, …, Δ_Jf, shape (J+1, M, M)"""
        _f_hat = self.__grid.forward(f)
        return np.stack([self.__grid.inverse(_f_hat*_mask) for _mask in self.__masks])

    def low_pass(self, f, n):
        """S_n f, the sum of blocks 0..n (zero when n < 0)"""
        if n < 0:
            return self.__grid.zeros()
        _mask = self.__index <= n
        return self.__grid.inverse(self.__grid.forward(f)*_mask)

    def high_pass(self, f, n):
        """Δ_{>n}f, removing blocks 0..n"""
        if not 0 <= n <= self.max_block:
            raise ValueError(f"Truncation level n={n} outside [0, {self.max_block}]")
        _mask = self.__index > n
        return self.__grid.inverse(self.__grid.forward(f)*_mask)

    def block_norms(self, f, p=np.inf):
        return np.array([self.__grid.lp_norm(_block, p) for _block in self.decompose(f)])

    def besov_norm(self, f, alpha, p=np.inf, q=np.inf):
        """
            Besov norm (Σⱼ 2^{αjq}‖Δⱼf‖_{Lᵖ}^q)^{1/q}, supremum over blocks
            when q = ∞.

            Parameters
            ----------
            f : ndarray
                Real field on the grid.

            alpha : float
                Regularity exponent.

            p, q : float
                Integrability and summability exponents in [1, ∞].
        """
        q = float(q)
        if q < 1:
            raise ValueError(f"Summability exponent q={q} must be at least 1")
        _weighted = 2.**(alpha*np.arange(self.max_block + 1)) * self.block_norms(f, p)
        if np.isinf(q):
            return float(np.max(_weighted))
        return float(np.sum(_weighted**q)**(1/q))

    def paraproduct(self, f, g, mode='lower'):
        """
            Bony paraproducts on the sharp blocks.

            lower    f ≺ g = Σ_{j≥2} S_{j−2}f · Δⱼg
            resonant f ◦ g = Σ_{|i−j|≤1} Δᵢf · Δⱼg
            upper    f ≻ g = g ≺ f
            leq      f ⪯ g = f ≺ g + f ◦ g

            lower + resonant + upper reproduces f·g.
        """
        self.__grid.check(f, g)
        if mode not in PARAPRODUCT_MODES:
            raise ValueError(f"Unknown paraproduct mode {mode!r}, expected one of {PARAPRODUCT_MODES}")
        if mode == 'upper':
            return self.paraproduct(g, f, 'lower')
        _f_blocks = self.decompose(f)
        _g_blocks = self.decompose(g)
        _out = self.__grid.zeros()
        if mode in ('lower', 'leq'):
            _low = np.cumsum(_f_blocks, axis=0)
            for j in range(2, self.max_block + 1):
                _out += _low[j-2]*_g_blocks[j]
        if mode in ('resonant', 'leq'):
            for i in range(self.max_block + 1):
                for j in range(max(i-1, 0), min(i+1, self.max_block) + 1):
                    _out += _f_blocks[i]*_g_blocks[j]
        return _out


def lp_block(grid, f, j):
    return grid.blocks.lp_block(f, j)


def besov_norm(grid, f, alpha, p=np.inf, q=np.inf):
    return grid.blocks.besov_norm(f, alpha, p, q)


def paraproduct(grid, f, g, mode='lower'):
    return grid.blocks.paraproduct(f, g, mode)


def interpolation_ratio(grid, f, theta, first, second):
    """
    Ratio ‖f‖_{B^{θα₁+(1−θ)α₂}_{p,q}} / (‖f‖_{B^{α₁}_{p₁,q₁}}^θ ‖f‖_{B^{α₂}_{p₂,q₂}}^{1−θ})
    with first = (α₁, p₁, q₁), second = (α₂, p₂, q₂) and p, q the
    θ-interpolated exponents (1/p = θ/p₁ + (1−θ)/p₂, same for q).
    """
    (alpha1, p1, q1), (alpha2, p2, q2) = first, second
    _interp = lambda e1, e2: 1/(theta/e1 + (1-theta)/e2)
    _num = besov_norm(grid, f, theta*alpha1 + (1-theta)*alpha2, _interp(p1, p2), _interp(q1, q2))
    _den = besov_norm(grid, f, alpha1, p1, q1)**theta * besov_norm(grid, f, alpha2, p2, q2)**(1-theta)
    return _num/_den if _den > 0 else np.nan


def power_product_ratio(grid, f, r, alpha=-0.25, p=np.inf, q=np.inf):
    """Ratio ‖f^{r+1}‖ / (‖f^r‖‖f‖) in B^α_{p,q}"""
    _den = besov_norm(grid, f**r, alpha, p, q) * besov_norm(grid, f, alpha, p, q)
    return besov_norm(grid, f**(r+1), alpha, p, q)/_den if _den > 0 else np.nan


def duality_ratio(grid, f, g, alpha, p=2, q=2):
    """
    Ratio |∫fg| / (‖f‖_{B^α_{p,q}}‖g‖_{B^{−α}_{p',q'}}) with conjugate exponents.
    """
    _conj = lambda e: np.inf if e == 1 else (1. if np.isinf(e) else e/(e-1))
    _den = besov_norm(grid, f, alpha, p, q) * besov_norm(grid, g, -alpha, _conj(p), _conj(q))
    return abs(grid.inner(f, g))/_den if _den > 0 else np.nan


if __name__ == '__main__':
    pass
