from setuptools import find_packages, setup

setup(
    name="ibcsim",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.10.0",
    entry_points={
        "console_scripts": [
            "ibc-sim=ibcsim.server.cli:cli",
        ],
    },
    description="Simulator and verification library for Schrödinger dynamics on multi-sector configuration spaces coupled through interior-boundary conditions (IBCs), with probability-balance diagnostics and a sphere cut-off particle-creation model.",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "License :: OSI Approved :: BSD License",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    include_package_data=True,
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.12",
        "pydantic>=2.5",
        "python-dotenv==1.0.0",
        "wasabi==1.1.2",
        "click==8.1.7",
        "tqdm>=4.66",
    ],
    extras_require={
        "dev": [
            "pytest",
            "hypothesis>=6.90",
            "wheel",
            "twine",
            "black>=23.7.0",
            "setuptools",
        ],
    },
)
