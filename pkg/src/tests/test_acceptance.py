#!/usr/bin/env python
import pytest

from ..Anderson_phi42.Noise import RngStream
from ..Anderson_phi42.Acceptance import harmonic_exactness, run_acceptance, PROFILE_SETTINGS
from ..Anderson_phi42.constants import PROFILES


def test_harmonic_exactness():
    errors = harmonic_exactness((4, 8), 2, RngStream(7, 'exactness'))
    assert set(errors) == {'lp_reconstruction', 'bony_decomposition', 'gamma_phi_inverse', 'binomial_wick',
                           'binomial_wick_variance'}
    for value in errors.values():
        assert value <= 1e-10


def test_profiles():
    assert set(PROFILE_SETTINGS) == set(PROFILES)
    with pytest.raises(ValueError):
        run_acceptance('out', 'enormous')


if __name__ == '__main__':
    pass
