#!/usr/bin/env python
import numpy as np
import pytest

from ..Anderson_phi42.utils import NumericalError
from ..Anderson_phi42.lattice import TorusGrid, besov_norm
from ..Anderson_phi42.Noise import RngStream, sample_space_white_noise
from ..Anderson_phi42.Hamiltonian import (renorm_constant, assemble, ensure_positive, heat_apply,
                                          spectral_projector, heat_kernel, trace_identity, green_function,
                                          green_log_slope, schauder_datum, schauder_exponent_fit)


grid = TorusGrid(8)
xi = sample_space_white_noise(grid, RngStream(7, 'potential'))
op = assemble(grid, xi, renorm_constant(grid)).ensure_positive(1.)
f = np.random.default_rng(3).standard_normal(grid.shape)


def test_free_laplacian_spectrum():
    free = assemble(grid, grid.zeros())
    assert np.allclose(free.eigenvalues, np.sort(grid.laplacian_symbol.ravel()), atol=1e-9)
    assert free.needs_shift
    shifted = ensure_positive(free, 1.)
    assert shifted.lambda0 == pytest.approx(1.)
    assert shifted.mass_shift == pytest.approx(1.)
    assert not shifted.needs_shift
    assert ensure_positive(shifted, 0.5) is shifted


@pytest.mark.parametrize('m,singular', [(0., True), (1e-14, True), (1e-3, False)])
def test_needs_shift_ignores_round_off(m, singular):
    op_m = assemble(grid, grid.zeros(), m=m)
    assert op_m.needs_shift is singular
    if singular:
        assert ensure_positive(op_m, 1.).lambda0 == pytest.approx(1.)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        assemble(grid, xi, m=-1.)
    with pytest.raises(ValueError):
        op.ensure_positive(0.)
    with pytest.raises(ValueError):
        op.coefficients(f, grid.size)
    with pytest.raises(ValueError):
        heat_apply(op, -0.1, f)
    with pytest.raises(ValueError):
        heat_kernel(op, 0., 0, 0)


def test_non_finite_potential():
    bad = grid.zeros()
    bad[0, 0] = np.nan
    with pytest.raises(NumericalError):
        assemble(grid, bad)


def test_renorm_constant_grows_with_resolution():
    assert 0 < renorm_constant(TorusGrid(8)) < renorm_constant(TorusGrid(16)) < renorm_constant(TorusGrid(32))


def test_spectral_representation():
    assert np.allclose(op.synthesize(op.coefficients(f)), f, atol=1e-10)
    assert np.allclose(op.spectral_apply(op.eigenvalues, f), op.apply(f), atol=1e-8)
    assert np.allclose(op.matrix() @ f.ravel(), op.apply(f).ravel(), atol=1e-8)
    assert grid.inner(op.eigenfunction(0), op.eigenfunction(0)) == pytest.approx(1.)


def test_projector_is_idempotent():
    once = spectral_projector(op, 10, f)
    assert np.allclose(spectral_projector(op, 10, once), once, atol=1e-10)


def test_heat_semigroup():
    assert np.array_equal(heat_apply(op, 0., f), f)
    assert np.allclose(heat_apply(op, 0.3, heat_apply(op, 0.2, f)), heat_apply(op, 0.5, f), atol=1e-10)
    assert grid.lp_norm(heat_apply(op, 0.5, f)) <= np.exp(-0.5*op.lambda0)*grid.lp_norm(f)*(1 + 1e-10)


def test_constant_potential_heat_flow():
    flat = assemble(grid, grid.constant(2.))
    assert np.allclose(flat.heat_apply(0.7, grid.constant(1.)), np.exp(-1.4), rtol=1e-8)


def test_heat_kernel_matches_matrix():
    kernel = op.heat_kernel_matrix(0.1)
    assert kernel[3, 17] == pytest.approx(heat_kernel(op, 0.1, 3, 17))
    assert np.allclose(kernel, kernel.T)


def test_trace_identity():
    lhs, rhs = trace_identity(op, 0.05)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_green_function_inverts_operator():
    green = green_function(op, (2, 5))
    delta = grid.zeros()
    delta[2, 5] = 1/grid.h**2
    assert np.allclose(op.apply(green), delta, atol=1e-8/grid.h**2)
    with pytest.raises(NumericalError):
        green_function(assemble(grid, grid.zeros()), 0)


def test_green_function_decays_logarithmically():
    assert green_log_slope(assemble(TorusGrid(16), TorusGrid(16).zeros(), m=0.01), max_offset=3) < 0


def test_schauder_datum_has_unit_norm():
    datum = schauder_datum(grid, -0.2, RngStream(7, 'schauder'))
    assert besov_norm(grid, datum, -0.2) == pytest.approx(1.)


def test_schauder_exponent_fit():
    slope = schauder_exponent_fit(op, -0.5, 0.5, samples=3, rng=RngStream(7, 'schauder'))
    assert np.isfinite(slope)
    assert slope < 0
    with pytest.raises(ValueError):
        schauder_exponent_fit(op, 0.5, -0.5)


if __name__ == '__main__':
    pass
