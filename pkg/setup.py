#!/usr/bin/env python

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name='icus',
    version='0.1.0',
    author='',
    author_email='',
    description='Incomplete U-statistics under a computational budget: estimators, Berry-Esseen bounds, checks',
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=['icus_tests', 'icus_tests.*']),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.21',
        'scipy>=1.7',
        'pandas>=1.3',
        'scikit-learn>=1.0',
        'omegaconf',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['icus=icus.cli:main'],
    },
)
