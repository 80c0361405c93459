#!/usr/bin/env python

from setuptools import setup

setup(name = "btclass",
      version = "0.1",
      description = "Two-stage classifier for short banking transaction descriptions.",
      packages = ['btclass'],
      package_data = {'btclass': ['data/*.txt']},
      python_requires = ">=3.7",
      install_requires = [
            "numpy>=1.17",
            "scipy>=1.3.1",
            "numba>=0.45.0",
            "psutil>=5.6",
            "pandas>=1.5",
            "scikit-learn>=1.0",
            "regex>=2020.1.8",
            "PyYAML>=5.1",
      ],
      entry_points = {
            'console_scripts': ['btclass = btclass.cli:main'],
      },
      )
