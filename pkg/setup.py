# setup.py

import pathlib
from setuptools import find_packages, setup

# The directory containing this file
HERE = pathlib.Path(__file__).parent

# The text of the README file
README = (HERE / "README.md").read_text()

setup(
    name="hsketch",
    version="1.0.0",
    packages=find_packages(exclude=("unit_test",)),
    author="RedLegJed",
    author_email="rlj_github@nym.hush.com",
    license="Apache",
    python_requires=">=3.9",
    install_requires=["numpy>=1.24", "scipy", "pandas", "xarray", "xlsxwriter"],
    description="Cascade sign sketches: bit packed point set compression with squared distance recovery.",
    long_description=README,
    long_description_content_type="text/markdown",
    entry_points={"console_scripts": ["hsketch=hsketch.hsk_cli:main"]},
)
