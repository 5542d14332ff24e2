from setuptools import setup, find_packages

setup(
    name="mo-pbt",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples*"]),
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "matplotlib",
        "pydantic>=2",
        "pydantic-settings",
        "structlog",
    ],
    entry_points={
        "console_scripts": [
            "mopbt=src.main:main",
        ],
    },
    python_requires=">=3.10",
)
