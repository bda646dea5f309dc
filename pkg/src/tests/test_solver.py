#!/usr/bin/env python
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ..Anderson_phi42.utils import ConfigurationError, IntegrationError
from ..Anderson_phi42.lattice import TorusGrid
from ..Anderson_phi42.Noise import RngStream, sample_space_white_noise, lift_X, truncate_high
from ..Anderson_phi42.Hamiltonian import assemble, renorm_constant
from ..Anderson_phi42.Wick import EnhancedNoise
from ..Anderson_phi42.Solver import (SolverConfig, step_v, step_eta, phi_map, gamma_map, shifted_data,
                                     diagnostic_constants, TruncatedDynamics, simulate, coming_down_statistic,
                                     shifted_energy, remainder_equation_diagnostics, random_direction)


grid = TorusGrid(8)
seed = 2024
xi = sample_space_white_noise(grid, RngStream(seed, 'potential'))
op = assemble(grid, xi, renorm_constant(grid)).ensure_positive(1.)
cfg = SolverConfig(dt=0.02, T=0.2)
field_rng = np.random.default_rng(11)
u0, psi, v = 0.5*field_rng.standard_normal((3,) + grid.shape)
sigma = 0.3


@pytest.mark.parametrize('changes,key', [({'dt': 0.}, 'solver.dt'),
                                         ({'T': -1.}, 'solver.T'),
                                         ({'N': -1}, 'solver.N'),
                                         ({'p': 3}, 'solver.p'),
                                         ({'q': 1.}, 'solver.q'),
                                         ({'eps': 0.5, 'sigma': 0.4}, 'solver.eps'),
                                         ({'scheme': 'rk4'}, 'solver.scheme'),
                                         ({'lambda_min': 0.}, 'hamiltonian.mass_floor')])
def test_config_validation(changes, key):
    with pytest.raises(ConfigurationError) as excinfo:
        cfg.replace(**changes)
    assert excinfo.value.key == key


def test_config_steps_and_truncation():
    assert cfg.steps == 10
    assert cfg.truncation(op) == grid.size - 1
    assert cfg.replace(N=5).truncation(op) == 5


def test_linear_step_is_heat_flow():
    stepped = step_v(v, EnhancedNoise.zeros(grid), 0.05, op, nonlinear=False)
    assert np.allclose(stepped, op.heat_apply(0.05, v), atol=1e-12)
    with pytest.raises(ValueError):
        step_v(v, EnhancedNoise.zeros(grid), 0., op)
    with pytest.raises(ValueError):
        step_v(v, EnhancedNoise.zeros(grid), 0.05, op, scheme='rk4')


def test_non_finite_step():
    bad = v.copy()
    bad[0, 0] = np.nan
    with pytest.raises(IntegrationError):
        step_v(bad, EnhancedNoise.zeros(grid), 0.05, op)


def test_split_scheme_tames_large_data():
    flat = assemble(grid, grid.constant(1.))
    stepped = step_v(grid.constant(1e3), EnhancedNoise.zeros(grid), 0.01, flat, scheme='split')
    assert np.all(np.isfinite(stepped))
    assert np.max(np.abs(stepped)) < 1/np.sqrt(0.02)


def test_step_eta_is_derivative_of_step_v():
    z = EnhancedNoise.from_field(psi, sigma)
    eta = random_direction(grid, RngStream(seed, 'direction'))
    delta = 1e-5
    finite_difference = (step_v(v + delta*eta, z, 0.01, op) - step_v(v - delta*eta, z, 0.01, op))/(2*delta)
    assert np.allclose(step_eta(eta, psi + v, sigma, 0.01, op), finite_difference, atol=1e-7)
    assert np.allclose(step_eta(eta, psi + v, sigma, 0.01, op, nonlinear=False), op.heat_apply(0.01, eta), atol=1e-12)


def test_shifted_data_reproduces_nonlinearity():
    z = EnhancedNoise.from_field(psi, sigma, time=0.1)
    shifted = shifted_data([z], u0, op)[0]
    P = op.heat_apply(0.1, u0)
    assert np.allclose(shifted.nonlinearity(v), z.nonlinearity(v + P), atol=1e-10)


def test_gamma_inverts_phi():
    X = lift_X(xi)
    X_gt_n = 0.1*truncate_high(grid, X, 1)/np.max(np.abs(X))
    w = field_rng.standard_normal(grid.shape)
    pair = gamma_map(w, X_gt_n, grid, n=1)
    assert np.allclose(phi_map(pair.v, X_gt_n, grid), w, atol=1e-9)
    assert pair.residual <= 1e-12*max(1., grid.lp_norm(w))
    report = remainder_equation_diagnostics(pair, op, EnhancedNoise.from_field(psi, sigma), 2, X_gt_n)
    assert report['coercive'] >= 0
    assert isinstance(report['coercive_dominates'], bool)
    with pytest.raises(ValueError):
        remainder_equation_diagnostics(pair, op, EnhancedNoise.from_field(psi, sigma), 3, X_gt_n)


def test_noise_free_linear_dynamics():
    dynamics = TruncatedDynamics(op, cfg, u0, noise=False, nonlinear=False)
    for _ in range(5):
        assert dynamics.step() is None
    assert dynamics.time == pytest.approx(0.1)
    assert np.allclose(dynamics.u, op.heat_apply(0.1, u0), atol=1e-10)


def test_dynamics_validation():
    with pytest.raises(ValueError):
        TruncatedDynamics(op, cfg, u0)
    with pytest.raises(ValueError):
        TruncatedDynamics(op, cfg, u0, noise=False, ansatz='tilted')
    with pytest.raises(ValueError):
        TruncatedDynamics(assemble(grid, grid.zeros()), cfg, u0, noise=False)


def test_equal_streams_share_noise():
    first = TruncatedDynamics(op, cfg, u0, RngStream(seed, 'trajectory', 0))
    second = TruncatedDynamics(op, cfg, u0, RngStream(seed, 'trajectory', 0))
    for _ in range(3):
        assert np.array_equal(first.step(), second.step())
    assert np.array_equal(first.u, second.u)


def test_shifted_ansatz_starts_from_datum():
    dynamics = TruncatedDynamics(op, cfg, u0, RngStream(seed, 'trajectory'), ansatz='shifted')
    assert np.allclose(dynamics.u, u0)
    assert np.allclose(dynamics.remainder, u0)


def test_simulate_records_diagnostics():
    trajectory = simulate(u0, cfg, op, RngStream(seed, 'trajectory'), output_times=[0., 0.1, 0.2])
    assert trajectory.completed
    assert trajectory.horizon == pytest.approx(cfg.T)
    assert len(trajectory.u) == 3
    assert np.array_equal(trajectory.u[0], u0)
    table = trajectory.diagnostics
    assert list(table.columns) == ['t', 'L2', 'L4', 'L3p2', 'weighted_L3p2', 'besov_u', 'K_t', 'K_tilde_t']
    assert len(table) == cfg.steps + 1
    assert np.all(np.diff(table['K_t']) >= 0)
    assert coming_down_statistic(trajectory, (0.1, 0.2)) >= 0


def test_noise_free_constants_vanish():
    trajectory = simulate(u0, cfg, op, noise=False)
    assert np.allclose(trajectory.diagnostics['K_t'], 0.)
    constants = diagnostic_constants([EnhancedNoise.zeros(grid, 0.1*_i) for _i in range(3)], grid)
    assert np.allclose(constants.K, 0.)
    assert len(constants.to_frame()) == 3


def test_shifted_energy_of_zero_datum():
    assert shifted_energy(grid.zeros(), cfg, op, None, noise=False) == 0.


flat = assemble(grid, grid.zeros(), m=1.)


def cubic_decay(dt, T=1.):
    v = np.ones(grid.shape)
    for step in range(int(round(T/dt))):
        v = step_v(v, EnhancedNoise.zeros(grid, step*dt), dt, flat)
    return v


def cubic_decay_reference(T=1.):
    solution = solve_ivp(lambda t, y: -y - y**3, (0., T), [1.], method='DOP853', rtol=1e-12, atol=1e-14)
    return solution.y[0, -1]


def test_constant_field_follows_scalar_ode():
    dt = 1e-3
    v = cubic_decay(dt)
    assert np.allclose(v, v[0, 0], rtol=0, atol=1e-12)
    assert abs(v[0, 0] - cubic_decay_reference()) <= dt/2


def test_first_order_convergence_under_step_halving():
    reference = cubic_decay_reference()
    errors = [abs(cubic_decay(dt)[0, 0] - reference) for dt in (1e-2, 5e-3, 2.5e-3)]
    orders = np.log2(np.array(errors[:-1])/np.array(errors[1:]))
    assert np.all(orders >= 0.9)


def test_standard_and_shifted_ansatz_agree():
    times = [0., 0.1, 0.2]
    standard = simulate(u0, cfg, op, RngStream(seed, 'trajectory', 3), output_times=times)
    shifted = simulate(u0, cfg, op, RngStream(seed, 'trajectory', 3), output_times=times, ansatz='shifted')
    for first, second in zip(standard.u, shifted.u):
        assert np.max(np.abs(first - second)) <= 1e-8


def test_noise_free_remainder_decays_at_spectral_gap():
    smooth = 0.5*grid.mode(1, 0) + 0.3*grid.mode(0, 2, 'sin')
    trajectory = simulate(smooth, SolverConfig(dt=0.01, T=0.5), op, noise=False)
    table = trajectory.diagnostics
    bound = np.exp(-op.lambda0*table['t'])*grid.lp_norm(smooth, 2)
    assert np.all(table['L2'] <= bound*(1 + 1e-12))
    assert table['L2'].iloc[-1] < bound.iloc[-1]


if __name__ == '__main__':
    pass
