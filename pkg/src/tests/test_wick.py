#!/usr/bin/env python
import numpy as np
import pytest

from ..Anderson_phi42.lattice import TorusGrid
from ..Anderson_phi42.Noise import RngStream, sample_space_white_noise
from ..Anderson_phi42.Hamiltonian import assemble, renorm_constant
from ..Anderson_phi42.Wick import (OUState, step_ou, assemble_field, EnhancedNoise, enhanced_data, hermite, wick_power, sigma_profile,
                                   mode_variances, modal_covariance, binomial_shift, low_mode_conditioned_sample,
                                   stationary_fields, wick_cancellation, variance_log_fit)


grid = TorusGrid(4)
seed = 99
op = assemble(grid, sample_space_white_noise(grid, RngStream(seed, 'potential')), renorm_constant(grid)).ensure_positive(1.)
rng = np.random.default_rng(5)
psi, P = rng.standard_normal((2,) + grid.shape)
sigma, sigma_p = 2.0, 0.5


def test_hermite():
    x = np.array([-1., 0., 2.])
    assert np.array_equal(hermite(x, 1.5, 0), np.ones(3))
    assert np.array_equal(hermite(x, 1.5, 1), x)
    assert np.allclose(hermite(x, 1.5, 2), x**2 - 1.5)
    assert np.allclose(hermite(x, 1.5, 3), x**3 - 4.5*x)
    with pytest.raises(ValueError):
        hermite(x, 1.5, 4)


def test_wick_power_validation():
    with pytest.raises(ValueError):
        wick_power(psi, np.ones(3), 2)
    with pytest.raises(ValueError):
        wick_power(psi, 1., 0)


def test_binomial_shift_is_an_identity():
    powers = tuple(hermite(psi, sigma, n) for n in (1, 2, 3))
    shifted = binomial_shift(powers, P)
    for n in (1, 2, 3):
        assert np.allclose(shifted[n-1], hermite(psi - P, sigma, n), atol=1e-12)
    shifted = binomial_shift(powers, P, sigma_p)
    for n in (1, 2, 3):
        assert np.allclose(shifted[n-1], hermite(psi - P, sigma - sigma_p, n), atol=1e-12)


def test_enhanced_nonlinearity_expands_wick_cube():
    v = rng.standard_normal(grid.shape)
    z = EnhancedNoise.from_field(psi, sigma)
    assert np.allclose(z.nonlinearity(v), hermite(psi + v, sigma, 3), atol=1e-12)
    assert np.array_equal(EnhancedNoise.zeros(grid).nonlinearity(v), v**3)


def test_sigma_profile_mean_is_spectral_trace():
    assert grid.mean(sigma_profile(op)) == pytest.approx(np.sum(1/op.eigenvalues)/grid.volume, rel=1e-10)
    assert sigma_profile(op, 5)[1, 2] == pytest.approx(modal_covariance(op, 5, (1, 2), (1, 2)), rel=1e-10)


def test_mode_variances():
    assert np.allclose(mode_variances(op, 3, 0., 'zero'), 0.)
    assert np.allclose(mode_variances(op, 3, 200., 'zero'), mode_variances(op, 3), rtol=1e-10)
    with pytest.raises(ValueError):
        mode_variances(op, 3, -1., 'zero')
    with pytest.raises(ValueError):
        mode_variances(op, 3, 1., 'warm')


def test_stationary_requires_positive_operator():
    with pytest.raises(ValueError):
        OUState.stationary(assemble(grid, grid.zeros()), RngStream(seed))


def test_ou_state_validation():
    with pytest.raises(ValueError):
        OUState(op, np.zeros(op.size + 1))
    with pytest.raises(ValueError):
        OUState(op, np.zeros(3), init='warm')
    with pytest.raises(ValueError):
        OUState.zero(op).step(0.)
    with pytest.raises(ValueError):
        OUState.zero(op).step(0.1)


def test_ou_step_driven_by_increment():
    increment = rng.standard_normal(grid.shape)
    first = OUState.zero(op).step(0.1, increment=increment)
    second = OUState.zero(op).step(0.1, increment=increment)
    assert np.array_equal(first.modes, second.modes)
    assert first.time == pytest.approx(0.1)
    assert np.array_equal(OUState.zero(op).step(0.1, increment=grid.zeros()).modes, np.zeros(op.size))


def test_step_ou_and_assemble_field():
    state = OUState.stationary(op, RngStream(seed, 'ou'))
    first = step_ou(state, 0.05, RngStream(seed, 'ou', 1))
    second = state.step(0.05, RngStream(seed, 'ou', 1))
    assert np.array_equal(first.modes, second.modes)
    field = assemble_field(first)
    assert np.allclose(op.coefficients(field), first.modes)
    assert np.allclose(assemble_field(first, 3), op.spectral_projector(3, field))
    with pytest.raises(ValueError):
        assemble_field(first, op.size)


def test_enhanced_data_of_zero_state():
    z = enhanced_data(OUState.zero(op))
    for field in z.fields:
        assert np.allclose(field, 0.)


def test_stationary_site_variance():
    fields = stationary_fields(op, op.size - 1, 4000, RngStream(seed, 'stationary'))
    assert fields.shape == (4000,) + grid.shape
    assert np.mean(fields.var(axis=0))/np.mean(sigma_profile(op)) == pytest.approx(1, rel=0.05)


def test_wick_cancellation_report():
    report = wick_cancellation(op, op.size - 1, 500, RngStream(seed, 'wick'))
    assert set(report) == {'order_2', 'order_3'}
    for entry in report.values():
        assert entry['stderr'] > 0
        assert 0 <= entry['site_pass_fraction'] <= 1


def test_variance_grows_with_truncation():
    fit, means = variance_log_fit(op, [2, 4, 8, 15])
    assert np.all(np.diff(means) > 0)
    assert fit.slope > 0


def test_conditioned_sample():
    sample = low_mode_conditioned_sample(op, 2, 1e6, 0.5, 0.1, RngStream(seed, 'conditioned'))
    assert sample.accepted
    assert sample.tries == 1
    assert sample.modes.shape == (6, 3)
    assert len(sample.enhanced_trajectory()) == 6
    rejected = low_mode_conditioned_sample(op, 2, 1e-12, 0.5, 0.1, RngStream(seed, 'conditioned'), max_tries=3)
    assert not rejected.accepted
    assert rejected.enhanced_trajectory() == []
    with pytest.raises(ValueError):
        low_mode_conditioned_sample(op, 2, 0., 0.5, 0.1, RngStream(seed, 'conditioned'))


if __name__ == '__main__':
    pass
