#!/usr/bin/env python
"""
Contains the Anderson_phi42 module metadata.
"""
__all__ = ['__author__', '__copyright__', '__credits__', '__license__', '__version__', '__maintainer__', '__email__', '__url__', '__status__']

__author__ = "The Anderson-phi42 developers"
__copyright__ = None
__credits__ = ["The Anderson-phi42 developers"]
__license__ = "License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)"
__version__ = "0.1.0.b1"
__maintainer__ = "The Anderson-phi42 developers"
__email__ = None
__url__ = None
__status__ = "Development Status :: 3 - Alpha"
