#!/usr/bin/env python
import pytest

from .. import Anderson_phi42
from ..Anderson_phi42.constants import PROFILES, SUBCOMMANDS
from ..Anderson_phi42.Ergodicity import bel_derivative, DEFAULT_POTENTIAL
from ..Anderson_phi42.Experiment import run_wick
from ..Anderson_phi42.Acceptance import run_acceptance
from ..Anderson_phi42.Output import RunOutput
from ..Anderson_phi42.Input import ExperimentConfig
from ..Anderson_phi42.__metadata__ import __author__, __maintainer__


def test_package_exports():
    for name in ['TorusGrid', 'AndersonOperator', 'simulate', 'bel_derivative', 'ExperimentConfig', 'run']:
        assert hasattr(Anderson_phi42, name)


def test_bel_derivative_docstring_keeps_subscripts():
    assert 'η_{s_i}' in bel_derivative.__doc__
    assert 'H^{−ε}' in bel_derivative.__doc__
    assert str(DEFAULT_POTENTIAL) in bel_derivative.__doc__


@pytest.mark.parametrize('doc,fragment', [(run_acceptance.__doc__, str(PROFILES)),
                                          (RunOutput.__init__.__doc__, str(SUBCOMMANDS)),
                                          (run_wick.__doc__, 'Wick statistics ('),
                                          (ExperimentConfig.__init__.__doc__, 'grid.M')])
def test_formatted_docstrings(doc, fragment):
    assert fragment in doc


def test_metadata_names_this_project():
    assert __author__ == __maintainer__ == "The Anderson-phi42 developers"


if __name__ == '__main__':
    pass
