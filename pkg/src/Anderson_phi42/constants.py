#!/usr/bin/env python
"""
Package parameters
"""
import math
from dataclasses import dataclass

from .utils import Singleton

__all__ = ['NAME', 'CLI_NAME', 'WORKERS_ENV_VAR', 'SNAPSHOT_MAGIC', 'SNAPSHOT_VERSION', 'SNAPSHOT_HEADER_FORMAT',
           'DEFAULT_SIDE_LENGTH', 'DEFAULT_MASS_FLOOR', 'SPECTRAL_ZERO_TOL', 'DEFAULT_EPS', 'DEFAULT_SIGMA',
           'DEFAULT_Q', 'DEFAULT_P',
           'DEFAULT_KTILDE_A', 'DEFAULT_KTILDE_B', 'DEFAULT_POTENTIAL', 'INIT_STATIONARY', 'INIT_ZERO',
           'SUBCOMMANDS', 'PROFILES', 'WICK_STATS', 'OBSERVABLE_KINDS', 'PARAPRODUCT_MODES',
           'SCHEME_EXPONENTIAL_EULER', 'SCHEME_SPLIT', 'SCHEMES',
           'CTAGS', 'DEFAULT_CONFIG', 'MANIFEST_FILE', 'DIAGNOSTICS_FILE', 'TRAJECTORY_FILE', 'SNAPSHOT_TEMPLATE',
           'EXIT_OK', 'EXIT_CHECK_FAILED', 'EXIT_CONFIG', 'EXIT_NUMERICAL']

NAME = 'Anderson_phi42'
CLI_NAME = 'anderson-phi42'
WORKERS_ENV_VAR = 'ANDERSON_PHI42_WORKERS'

SNAPSHOT_MAGIC = b'APHI'
SNAPSHOT_VERSION = 1
SNAPSHOT_HEADER_FORMAT = '<4sIIdd4x'  # magic, version, M, L, time, reserved: 32 bytes

DEFAULT_SIDE_LENGTH = 2*math.pi
DEFAULT_MASS_FLOOR = 1.0
SPECTRAL_ZERO_TOL = 1e-10
DEFAULT_EPS = 0.25
DEFAULT_SIGMA = 0.3
DEFAULT_Q = 8.0
DEFAULT_P = 2
DEFAULT_KTILDE_A = 0.5
DEFAULT_KTILDE_B = 1.0
DEFAULT_POTENTIAL = {'c_tilde': 1.0, 'p': 2, 'eps': 0.25}

INIT_STATIONARY = 'stationary'
INIT_ZERO = 'zero'

SUBCOMMANDS = ('spectrum', 'wick', 'simulate', 'couple', 'ergodicity', 'bel', 'relax', 'sweep', 'accept')
PROFILES = ('smoke', 'quick', 'full')
WICK_STATS = ('cancel', 'covariance', 'logdiv', 'cauchy')
OBSERVABLE_KINDS = ('fourier_char', 'linear', 'low_norm', 'lp_norm', 'constant')
PARAPRODUCT_MODES = ('lower', 'leq', 'resonant', 'upper')
SCHEME_EXPONENTIAL_EULER = 'exponential_euler'
SCHEME_SPLIT = 'split'
SCHEMES = (SCHEME_EXPONENTIAL_EULER, SCHEME_SPLIT)

MANIFEST_FILE = 'manifest.json'
DIAGNOSTICS_FILE = 'diagnostics.csv'
TRAJECTORY_FILE = 'trajectory.h5'
SNAPSHOT_TEMPLATE = 'snapshot_{index:05d}.aphi'

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


@dataclass(frozen=True)
class ConfigTags(metaclass=Singleton):
    grid: str            = 'grid'
    M: str               = 'M'
    L: str               = 'L'
    hamiltonian: str     = 'hamiltonian'
    mass_floor: str      = 'mass_floor'
    renorm: str          = 'renorm'
    solver: str          = 'solver'
    dt: str              = 'dt'
    T: str               = 'T'
    N: str               = 'N'
    n: str               = 'n'
    eps: str             = 'eps'
    sigma: str           = 'sigma'
    p: str               = 'p'
    q: str               = 'q'
    a: str               = 'a'
    b: str               = 'b'
    experiment: str      = 'experiment'
    samples: str         = 'samples'
    t: str               = 't'
    times: str           = 'times'
    scales: str          = 'scales'
    seeds: str           = 'seeds'
    observables: str     = 'observables'
    eps_box: str         = 'eps_box'
    N_cond: str          = 'N_cond'
    eps_targets: str     = 'eps_targets'
    max_tries: str       = 'max_tries'
    scheme: str          = 'scheme'
    horizon: str         = 'horizon'
    kappa: str           = 'kappa'
    nonlinear: str       = 'nonlinear'
    initial_norm: str    = 'initial_norm'
    fd_delta: str        = 'fd_delta'
    use_feynman_kac: str = 'use_feynman_kac'
    potential: str       = 'potential'
    checkpoints: str     = 'checkpoints'
    trajectories: str    = 'trajectories'
    modes: str           = 'modes'
    stat: str            = 'stat'
    snapshot_times: str  = 'snapshot_times'
    seed: str            = 'seed'
    output: str          = 'output'

    @property
    def blocks(self):
        return [self.grid, self.hamiltonian, self.solver, self.experiment]

CTAGS = ConfigTags()

DEFAULT_CONFIG = {
    CTAGS.grid: {CTAGS.M: 16, CTAGS.L: DEFAULT_SIDE_LENGTH},
    CTAGS.hamiltonian: {CTAGS.mass_floor: DEFAULT_MASS_FLOOR, CTAGS.renorm: 'auto'},
    CTAGS.solver: {
        CTAGS.dt: 1e-2,
        CTAGS.T: 1.0,
        CTAGS.N: None,  # None means every mode, M²-1
        CTAGS.n: 1,
        CTAGS.scheme: SCHEME_EXPONENTIAL_EULER,
        CTAGS.eps: DEFAULT_EPS,
        CTAGS.sigma: DEFAULT_SIGMA,
        CTAGS.p: DEFAULT_P,
        CTAGS.q: DEFAULT_Q,
        CTAGS.a: DEFAULT_KTILDE_A,
        CTAGS.b: DEFAULT_KTILDE_B},
    CTAGS.experiment: {},
    CTAGS.seed: 7,
    CTAGS.output: 'out'}
