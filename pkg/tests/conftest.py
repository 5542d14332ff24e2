"""Shared fixtures for the test suite."""

import pytest

from src.tasks import ToyQuadraticTask


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical acceptance runs (deselect with -m 'not slow')")


@pytest.fixture
def toy_task():
    """Two-objective toy quadratic task with default noise."""
    return ToyQuadraticTask()


@pytest.fixture
def quiet_toy_task():
    """Noise-free toy quadratic task."""
    return ToyQuadraticTask(noise_std=0.0)
