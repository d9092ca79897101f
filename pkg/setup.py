#!/usr/bin/env python
from setuptools import setup
from gfnpath.version import VERSION

setup(
    name="gfnpath",
    version=VERSION.lstrip("v"),
    author="The gfnpath developers",
    description=("Ray path sampling with generative flow networks and an "
                 "exhaustive image-method tracer."),
    license="Apache 2.0",
    keywords="ray tracing radio propagation GFlowNet image method",
    packages=['gfnpath', 'gfnpath.modules', 'gfnpath.module_utils'],
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.17',
        'PyYAML>=5.1',
        'packaging>=20.0',
    ],
    extras_require={
        'test': ['pytest>=7.0', 'scipy>=1.4'],
    },
    entry_points={
        'console_scripts': ['gfnpath=gfnpath.cli:main'],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.12',
        'Topic :: Scientific/Engineering :: Physics',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
)
