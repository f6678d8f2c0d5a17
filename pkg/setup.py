#!/usr/bin/env python
# coding: utf8

""" Distribution script. """

from os.path import abspath, dirname, join
from io import open
from setuptools import setup, find_packages

import foobar_lab

here = dirname(abspath(__file__))
with open(join(here, 'README.md'), 'r', encoding='utf-8') as stream:
    readme = stream.read()

setup(
    name='foobar-lab',
    version=foobar_lab.__version__,
    description=foobar_lab.__doc__,
    long_description=readme,
    long_description_content_type='text/markdown',
    license='Apache License 2.0',
    keywords=['fault injection', 'backdoor', 'neural network', 'simplex'],
    classifiers=[
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Security'
    ],
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    python_requires='>=3.6',
    install_requires=[
        'numpy',
        'tqdm',
    ],
    extras_require={
        'viewer': ['pygame'],
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'foobar-lab = foobar_lab.cli:main',
        ],
    },
    setup_requires=[
        'setuptools>=41.0.1',
        'wheel>=0.33.4'
    ],
)
