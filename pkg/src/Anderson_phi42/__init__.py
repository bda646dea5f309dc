#!/usr/bin/env python
"""
Anderson_phi42
==============

Provides lattice and spectral-Galerkin simulations of the dynamical Φ⁴
model on the two-dimensional torus driven through the Anderson Hamiltonian
H = −Δ + ξ − c, with the tools to probe its Markov semigroup: Wick
renormalization, the Da Prato–Debussche remainder equation, coming down
from infinity, couplings, Bismut–Elworthy–Li derivatives and ergodicity.

How to use
----------

Build an operator from an ExperimentConfig, then integrate with simulate or
estimate semigroup quantities with the functions of the Ergodicity module;
the command-line entry point anderson-phi42 runs the packaged experiments
and the acceptance suite. Please refer to each function's documentation
for further help.
"""
import logging

from .__metadata__ import *
from .constants import *
from .utils import *
from .lattice import *
from .Noise import *
from .Snapshot import *
from .Hamiltonian import *
from .Wick import *
from .Solver import *
from .Ergodicity import *
from .Input import *
from .Output import *
from .Experiment import *
from .Acceptance import *
from .cli import run

logging.getLogger(__name__).addHandler(logging.NullHandler())


if __name__ == '__main__':
    pass
