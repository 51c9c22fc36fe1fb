#!/usr/bin/env python
from pathlib import Path
from setuptools import setup, find_packages

version_file = Path(__file__).parent.joinpath("spdckit", "VERSION.txt")
version = version_file.read_text(encoding="UTF-8").strip()

with open("requirements.txt") as reqs_file:
    install_requires = reqs_file.read().splitlines()

with open("requirements_dev.txt") as reqs_dev_file:
    dev_requires = reqs_dev_file.read().splitlines()

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="spdckit",
    version=version,
    author="spdckit contributors",
    packages=find_packages(exclude=["tests", "tests.*"]),
    keywords=[
        "SPDC",
        "quantum optics",
        "nonlinear crystals",
        "phase matching",
        "group velocity matching",
        "spectral purity",
        "Hong-Ou-Mandel",
    ],
    install_requires=install_requires,
    extras_require={
        'dev': dev_requires
    },
    entry_points={"console_scripts": ["spdckit=spdckit.__main__:_main"]},
    license="Apache 2.0",
    description="spdckit: group-velocity-matched photon sources across a registry of nonlinear crystals",
    long_description=long_description,
    long_description_content_type="text/markdown",
    include_package_data=True,
    package_data={"spdckit": ["VERSION.txt", "data/*.yaml"]},
    zip_safe=False,
)
