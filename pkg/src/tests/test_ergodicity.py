#!/usr/bin/env python
import numpy as np
import pandas as pd
import pytest

from ..Anderson_phi42.lattice import TorusGrid
from ..Anderson_phi42.Noise import RngStream, sample_space_white_noise
from ..Anderson_phi42.Hamiltonian import assemble, renorm_constant
from ..Anderson_phi42.Solver import SolverConfig, random_direction
from ..Anderson_phi42.Ergodicity import (Observable, estimate_semigroup, chapman_kolmogorov, common_random_difference,
                                         feller_lipschitz, krylov_bogoliubov, uniqueness_check, synchronous_couple,
                                         mixing_distance, ks_decreasing, relaxation_probe, relaxation_scaling,
                                         feynman_kac_potential, feynman_kac_derivative, bel_derivative, coming_down_sweep,
                                         moment_growth_fit, uniform_moment_profile, shifted_energy_sweep, ergodicity_report)


grid = TorusGrid(4)
seed = 31
op = assemble(grid, sample_space_white_noise(grid, RngStream(seed, 'potential')), renorm_constant(grid)).ensure_positive(1.)
cfg = SolverConfig(dt=0.05, T=0.2)
u0 = 0.3*grid.mode(1, 1)
constant = Observable('constant', grid, value=2.5)
linear = Observable('linear', grid, mode=(1, 0))


def test_observables():
    assert Observable('fourier_char', grid)(grid.zeros()) == 1
    assert Observable('linear', grid, amplitude=2.)(grid.mode(1, 0)) == pytest.approx(grid.L**2)
    assert Observable('low_norm', grid, K=1)(grid.mode(2, 0)) == pytest.approx(0, abs=1e-12)
    assert Observable('low_norm', grid, K=1)(grid.mode(1, 0)) == pytest.approx(grid.L/np.sqrt(2))
    assert Observable('lp_norm', grid, p=np.inf)(-3*grid.mode(1, 0)) == pytest.approx(3)
    assert Observable('fourier_char', grid).bounded and not linear.bounded
    with pytest.raises(ValueError):
        Observable('entropy', grid)


@pytest.mark.parametrize('entry', [{'kind': 'fourier_char', 'mode': [2, 1], 'amplitude': 0.5},
                                  {'kind': 'low_norm', 'K': 2}, {'kind': 'lp_norm', 'p': 4},
                                  {'kind': 'constant', 'value': 3.}])
def test_observable_entries(entry):
    observable = Observable.from_dict(entry, grid)
    assert Observable.from_dict(observable.to_dict(), grid).name == observable.name
    assert observable.to_dict()['kind'] == entry['kind']


def test_semigroup_at_time_zero_is_exact():
    estimate = estimate_semigroup(u0, [linear, constant], 0., 10, op, cfg, RngStream(seed))
    assert np.allclose(estimate.mean, [linear(u0), 2.5])
    assert np.all(estimate.stderr == 0)


def test_semigroup_of_constant():
    estimate = estimate_semigroup(u0, constant, 0.1, 8, op, cfg, RngStream(seed))
    assert estimate.mean == pytest.approx(2.5)
    assert estimate.stderr == pytest.approx(0)
    assert estimate.samples == 8
    assert estimate.failures == 0


def test_semigroup_validation():
    with pytest.raises(ValueError):
        estimate_semigroup(u0, constant, 0.12, 8, op, cfg, RngStream(seed))
    with pytest.raises(ValueError):
        estimate_semigroup(u0, constant, 0.1, 1, op, cfg, RngStream(seed))
    with pytest.raises(ValueError):
        estimate_semigroup(u0, constant, -0.1, 8, op, cfg, RngStream(seed))


def test_semigroup_independent_of_workers():
    serial = estimate_semigroup(u0, linear, 0.1, 6, op, cfg, RngStream(seed), workers=1)
    pooled = estimate_semigroup(u0, linear, 0.1, 6, op, cfg, RngStream(seed), workers=2)
    assert serial.mean == pooled.mean
    assert serial.stderr == pooled.stderr


def test_chapman_kolmogorov_of_constant():
    result = chapman_kolmogorov(u0, constant, 0.2, 3, 3, op, cfg, RngStream(seed))
    assert result['direct'] == pytest.approx(2.5)
    assert result['nested'] == pytest.approx(2.5)
    assert result['agree']


def test_common_random_difference():
    direction = random_direction(grid, RngStream(seed, 'direction'))
    table = common_random_difference(u0, direction, [1e-2, 1e-3], constant, 0.1, 4, op, cfg, RngStream(seed))
    assert list(table.columns) == ['delta', 'quotient', 'stderr']
    assert np.allclose(table['quotient'], 0.)
    table, lipschitz = feller_lipschitz(u0, direction, [1e-2, 1e-3], linear, 0.1, 4, op, cfg, RngStream(seed))
    assert 'difference' in table
    assert np.isfinite(lipschitz)
    with pytest.raises(ValueError):
        common_random_difference(u0, direction, [1e-2], linear, 0., 4, op, cfg, RngStream(seed))


def test_running_averages_of_constant():
    result = krylov_bogoliubov(u0, [constant, linear], 0.4, 0.05, RngStream(seed), op, cfg, trajectories=3,
                               checkpoints=[0.2, 0.4])
    assert np.allclose(result.checkpoints, [0.2, 0.4])
    assert result.averages.shape == (3, 2, 2)
    assert np.allclose(result.averages[:, :, 0], 2.5)
    table = result.table()
    assert list(table['t']) == pytest.approx([0.2, 0.4])
    assert np.allclose(table[f"{constant.name}_mean"], 2.5)
    uniqueness = uniqueness_check(result, result)
    assert uniqueness['agree'].all()
    with pytest.raises(ValueError):
        krylov_bogoliubov(u0, [constant], 0., 0.05, RngStream(seed), op, cfg)


def test_coupling_identical_data():
    report = synchronous_couple(u0, u0, 0.2, op, cfg, RngStream(seed))
    assert np.all(report.distance_l2 == 0)
    assert report.rate is None
    assert not report.accepted
    assert len(report.to_frame()) == cfg.steps + 1


def test_coupling_contracts_without_noise():
    report = synchronous_couple(u0, u0 + 0.1*grid.mode(1, 0), 0.5, op, cfg, RngStream(seed), noise=False)
    assert report.distance_l2[-1] < report.distance_l2[0]
    assert report.rate > 0
    assert report.to_dict()['initial_distance'] == pytest.approx(report.distance_l2[0])


def test_mixing_distance():
    table = mixing_distance(u0, u0 + grid.mode(1, 0), 0., [linear], 100, op, cfg, RngStream(seed))
    assert table['statistic'][0] == 1
    assert list(table.columns) == ['observable', 'statistic', 'pvalue']
    table = mixing_distance(u0, u0, 0.05, [linear], 100, op, cfg, RngStream(seed))
    assert 0 <= table['statistic'][0] < 1
    with pytest.raises(ValueError):
        mixing_distance(u0, u0, 0.05, [linear], 99, op, cfg, RngStream(seed))


def test_ks_decreasing_over_every_time():
    table = pd.DataFrame({'t': [1., 3., 10., 1., 3., 10.], 'observable': ['a', 'a', 'a', 'b', 'b', 'b'],
                          'statistic': [0.9, 0.4, 0.2, 0.8, 0.3, 0.5]})
    assert ks_decreasing(table) == {'a': True, 'b': False}
    assert ks_decreasing(table.iloc[::-1]) == {'b': False, 'a': True}
    flat = table.assign(statistic=[0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
    assert all(ks_decreasing(flat).values())


def test_relaxation_immediate_hit():
    result = relaxation_probe(u0, 1e6, 1., 3, op, cfg, RngStream(seed), noise=False)
    assert result.success
    assert result.T_hit == 0
    assert result.reason is None


def test_relaxation_without_noise():
    result = relaxation_probe(u0, 0.5*grid.lp_norm(u0), 1., 3, op, cfg, RngStream(seed), horizon=3., norm='l2',
                              noise=False)
    assert result.success
    assert 0 < result.T_hit <= 3.
    missed = relaxation_probe(u0, 1e-12, 1., 3, op, cfg, RngStream(seed), horizon=0.2, norm='l2', noise=False)
    assert not missed.success
    assert missed.reason == 'horizon_exceeded'


def test_relaxation_conditioning():
    result = relaxation_probe(u0, 1e6, 1e6, 3, op, cfg, RngStream(seed))
    assert result.tries == 1
    assert result.success
    exhausted = relaxation_probe(u0, 1e-3, 1e-12, 3, op, cfg, RngStream(seed), max_tries=2)
    assert exhausted.reason == 'conditioning_exhausted'


def test_relaxation_validation():
    with pytest.raises(ValueError):
        relaxation_probe(u0, 0., 1., 3, op, cfg, RngStream(seed))
    with pytest.raises(ValueError):
        relaxation_probe(u0, 1., 1., 3, op, cfg, RngStream(seed), norm='sup', noise=False)


def test_relaxation_scaling_table():
    targets = [0.8*grid.lp_norm(u0), 0.4*grid.lp_norm(u0), 0.2*grid.lp_norm(u0)]
    table, fit = relaxation_scaling(u0, targets, 1., 3, op, cfg, RngStream(seed), horizon=5., norm='l2', noise=False)
    assert table['success'].all()
    assert np.all(np.diff(table['T_hit'].astype(float)) >= 0)
    assert fit.slope > 0


@pytest.mark.parametrize('p', [2, 4])
def test_feynman_kac_derivative(p):
    rng = np.random.default_rng(1)
    u, eta = rng.standard_normal((2,) + grid.shape)
    delta = 1e-6
    difference = (feynman_kac_potential(u + delta*eta, 0.2, grid, p=p)
                  - feynman_kac_potential(u - delta*eta, 0.2, grid, p=p))/(2*delta)
    assert feynman_kac_derivative(u, 0.2, eta, grid, p=p) == pytest.approx(difference, rel=1e-5)


def test_bel_of_linear_dynamics():
    direction = grid.mode(1, 0)/grid.lp_norm(grid.mode(1, 0))
    t = 0.2
    report = bel_derivative(grid.zeros(), direction, linear, t, 400, op, cfg, RngStream(seed), nonlinear=False)
    exact = grid.inner(linear.test_function, op.heat_apply(t, direction))
    assert report.fd_reference == pytest.approx(exact, rel=1e-6)
    assert abs(report.value - exact) <= 5*report.plain_vs_fd_stderr + 0.1*abs(exact)
    assert report.samples == 400
    assert set(report.to_dict()) >= {'value', 'stderr', 'fd_reference', 'low_power', 'agrees_with_fd'}


def test_bel_validation():
    direction = grid.mode(1, 0)
    with pytest.raises(ValueError):
        bel_derivative(u0, direction, linear, 0.1, 4, op, cfg.replace(N=3), RngStream(seed))
    with pytest.raises(ValueError):
        bel_derivative(u0, direction, linear, 0.1, 4, op, cfg.replace(scheme='split'), RngStream(seed))
    with pytest.raises(ValueError):
        bel_derivative(u0, direction, linear, 0., 4, op, cfg, RngStream(seed))


def test_coming_down_sweep():
    table, ratios = coming_down_sweep([1., 4.], 0.2, [5], op, cfg, grid.mode(1, 0))
    assert list(table.columns) == ['seed', 'scale', 'statistic', 'K_tilde_T', 'bound_holds']
    assert len(table) == 2
    assert ratios[5] >= 1
    _, single = coming_down_sweep([1.], 0.2, [5], op, cfg, grid.mode(1, 0))
    assert single[5] == pytest.approx(1)
    with pytest.raises(ValueError):
        coming_down_sweep([], 0.2, [5], op, cfg, grid.mode(1, 0))


def test_moment_profiles():
    table, fit = moment_growth_fit([1., 2.], grid.mode(1, 0), op, cfg, RngStream(seed), samples=2)
    assert len(table) == 2
    assert np.isfinite(fit.slope)
    frame, increase = uniform_moment_profile(u0, 0.2, 2, op, cfg, RngStream(seed))
    assert len(frame) == 5
    assert np.all(np.diff(frame['running_max']) >= 0)
    assert increase >= 0
    table, fit = shifted_energy_sweep([0.5, 1.], grid.mode(1, 0), op, cfg, RngStream(seed))
    assert list(table['scale']) == [0.5, 1.]


def test_ergodicity_report():
    report = ergodicity_report(u0, -u0, [linear, constant], 0.2, [0.1], 100, 3, op, cfg, RngStream(seed))
    payload = report.to_dict()
    assert payload['observables'] == [linear.name, constant.name]
    assert set(payload['final_averages']) == {'first', 'second'}
    assert len(report.ks) == 2
    assert report.uniqueness['agree'][1]


if __name__ == '__main__':
    pass
