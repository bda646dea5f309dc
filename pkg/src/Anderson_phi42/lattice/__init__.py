#!/usr/bin/env python
"""
Periodic lattice geometry, discrete Fourier analysis, Littlewood–Paley blocks,
Besov norms and paraproducts on the 2-torus.
"""
from .TorusGrid import *
from .LittlewoodPaley import *

__all__ = ['TorusGrid', 'DyadicBlocks', 'spectral_transform', 'lp_block', 'besov_norm', 'paraproduct',
           'interpolation_ratio', 'power_product_ratio', 'duality_ratio']


if __name__ == '__main__':
    pass
