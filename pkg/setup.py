#!/usr/bin/env python
from setuptools import setup
from mdiqkd.version import get_version

setup(
    name="mdiqkd",
    version=get_version(),
    description="Simulates qudit measurement-device-independent QKD protocols.",
    long_description=open("README.rst").read(),
    packages=["mdiqkd", "mdiqkd.protocols"],
    scripts=["bin/mdiqkd"],
    python_requires=">=3.8",
    install_requires=["numpy>=1.20", "scipy>=1.7"],
    extras_require={"test": ["hypothesis"]},
    license="MIT",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Education",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Physics",
        "Topic :: Security :: Cryptography",
    ],
)
