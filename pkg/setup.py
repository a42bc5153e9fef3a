from setuptools import find_packages, setup

setup(
    name="relcull",
    version="0.1.0",
    description="Scene-graph predicate curation: visual discriminator filtering, baselines and recall metrics",
    packages=find_packages(include=["src", "src.*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pandas>=2.0",
        "pydantic>=2.5",
        "pydantic-settings>=2.1",
        "python-dotenv>=1.0",
    ],
    extras_require={
        "test": [
            "pytest>=7.4",
            "hypothesis>=6.90",
        ],
    },
    entry_points={
        "console_scripts": [
            "relcull=src.relcull.cli.main:main",
        ],
    },
)
