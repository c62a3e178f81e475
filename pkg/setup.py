#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
from setuptools import setup

with open("README.md") as f:
    readme = f.read()

setup(
    name='pdnet',
    packages=['pdnet'],
    install_requires=["numpy>=1.17", "PyYAML>=5.1"],
    extras_require={"plots": ["matplotlib>=1.5.3"]},
    entry_points={"console_scripts": ["pdnet=pdnet.cli:main"]},
    python_requires=">=3.6",
    version='1.0',
    description='Polysemy-aware verb classification for human-object interaction detection',
    long_description=readme,
    long_description_content_type="text/markdown",
    author='pdnet contributors',
    license="ISC",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: ISC License (ISCL)",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.6",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
