#!/usr/bin/env python
import runpy
import pathlib

from setuptools import setup, find_packages

ROOT_DIR = pathlib.Path(__file__).parent
SRC_DIR = 'src'
NAME = 'Anderson_phi42'

metadata = runpy.run_path(str(ROOT_DIR / SRC_DIR / NAME / '__metadata__.py'))

long_description = (ROOT_DIR / 'README.md').read_text()


setup(name=NAME,
      version=metadata['__version__'],
      author=metadata['__author__'],
      author_email=metadata['__email__'],
      maintainer=metadata['__maintainer__'],
      maintainer_email=metadata['__email__'],
      url=metadata['__url__'],
      description="Lattice simulations of the dynamical Phi^4_2 model driven by the Anderson Hamiltonian",
      long_description=long_description,
      long_description_content_type="text/markdown",
      classifiers=[
          metadata['__status__'],
          "Environment :: Console",
          "Intended Audience :: Science/Research",
          metadata['__license__'],
          "Natural Language :: English",
          "Operating System :: Unix",
          "Programming Language :: Python :: 3",
          "Topic :: Scientific/Engineering :: Mathematics",
          "Topic :: Scientific/Engineering :: Physics"
      ],
      python_requires='>=3.8',
      packages=find_packages(where=SRC_DIR, exclude=['tests']),
      package_dir={'': SRC_DIR},
      install_requires=['numpy', 'scipy', 'pandas>=1.5', 'astropy', 'h5py'],
      extras_require={'test': ['pytest']},
      entry_points={'console_scripts': [f"anderson-phi42={NAME}.cli:main"]},
      )
