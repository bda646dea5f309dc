#!/usr/bin/env python
"""
Contains the RngStream and SpaceWhiteNoise class definitions, along with
the samplers of the spatial white noise ξ, its lift X = Δ⁻¹ξ and the
spacetime white-noise increments.

Please note that this module is private. All classes and functions are
available in the main ``Anderson_phi42`` namespace - use that instead.
"""
import zlib
import logging

import numpy as np

__all__ = ['RngStream', 'SpaceWhiteNoise', 'sample_space_white_noise', 'lift_X', 'truncate_high',
           'sample_wiener_increment', 'random_smooth_field']

logger = logging.getLogger(__name__)


class RngStream:
    def __init__(self, master_seed, purpose='default', index=0, *subindices) -> None:
        """
            Counter-based random stream keyed by a master seed and a stream
            identifier (purpose tag, trajectory index). Equal keys give
            bit-identical draws; distinct keys give independent streams.

            Call signatures::

                rng = RngStream(master_seed, purpose='default', index=0)

                child = rng.spawn(purpose, index)

            Parameters
            ----------
            master_seed : int
                Unsigned 64-bit master seed of the experiment.

            purpose : string
                Tag naming what the stream is used for (e.g. 'potential',
                'trajectory').

            index : int
                Trajectory or sample index inside that purpose.
        """
        master_seed = int(master_seed)
        if not 0 <= master_seed < 2**64:
            raise ValueError(f"Master seed {master_seed} is not an unsigned 64-bit integer")
        self.__master_seed = master_seed
        self.__purpose = str(purpose)
        self.__indices = (int(index),) + tuple(int(_i) for _i in subindices)
        _key = (zlib.crc32(self.__purpose.encode()),) + self.__indices
        self.__generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=_key)))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(master_seed={self.master_seed}, stream_id={self.stream_id})"

    @property
    def master_seed(self):
        return self.__master_seed

    @property
    def stream_id(self):
        return (self.__purpose,) + self.__indices

    @property
    def generator(self):
        return self.__generator

    def spawn(self, purpose, index=0):
        """Independent stream nested under this one"""
        return RngStream(self.__master_seed, f"{self.__purpose}/{purpose}", *self.__indices, int(index))

    def standard_normal(self, size=None):
        return self.__generator.standard_normal(size)

    def normal(self, scale, size=None):
        return scale*self.__generator.standard_normal(size)


class SpaceWhiteNoise:
    def __init__(self, grid, field) -> None:
        """
            Lattice spatial white noise: i.i.d. centered Gaussians per site
            with standard deviation 1/h, so that ⟨ξ, f⟩ = h²Σξf has variance
            ‖f‖²_{L²}.
        """
        grid.check(field)
        self.__grid = grid
        self.__field = np.asarray(field, dtype=float)

    @property
    def grid(self):
        return self.__grid

    @property
    def field(self):
        return self.__field

    @property
    def normalization(self):
        return 1/self.__grid.h

    def pairing(self, f):
        return self.__grid.inner(self.__field, f)


def sample_space_white_noise(grid, rng: RngStream) -> SpaceWhiteNoise:
    return SpaceWhiteNoise(grid, rng.normal(1/grid.h, grid.shape))


def lift_X(xi, grid=None):
    """
        Zero-mean lift X = Δ⁻¹ξ through the 5-point symbol:
        X̂(k) = −ξ̂(k)/ℓ_h(k) for k ≠ 0 and X̂(0) = 0, so that
        Δ_h X = ξ − mean(ξ).

        Call signatures::

            X = lift_X(xi)

            X = lift_X(field, grid)
    """
    if isinstance(xi, SpaceWhiteNoise):
        grid, field = xi.grid, xi.field
    elif grid is None:
        raise TypeError("A TorusGrid is required when lifting a plain array")
    else:
        field = xi
    _symbol = grid.laplacian_symbol
    _symbol[0, 0] = 1.
    _x_hat = -grid.forward(field)/_symbol
    _x_hat[0, 0] = 0.
    return grid.inverse(_x_hat)


def truncate_high(grid, X, n):
    """X_{>n} = Δ_{>n}X, removing Littlewood–Paley blocks 0..n"""
    return grid.blocks.high_pass(X, n)


def sample_wiener_increment(grid, dt, rng: RngStream):
    """Per-site N(0, dt/h²) increments ΔW of the cylindrical Wiener process"""
    if not dt > 0:
        raise ValueError(f"Time step dt={dt} must be positive")
    return rng.normal(np.sqrt(dt)/grid.h, grid.shape)


def random_smooth_field(grid, rng: RngStream, smoothness=2.0, amplitude=1.0):
    """
    Gaussian field with Fourier weights (1+|k|²)^{−smoothness/2}, scaled to
    the given sup norm.
    """
    _filter = (1. + grid.k_squared)**(-smoothness/2)
    _field = grid.inverse(grid.forward(rng.standard_normal(grid.shape))*_filter)
    _sup = np.max(np.abs(_field))
    return amplitude*_field/_sup if _sup > 0 else _field


if __name__ == '__main__':
    pass
