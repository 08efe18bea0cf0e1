"""
Pytest configuration and global fixtures.

Fixtures from tests/fixtures are re-exported here so every test module sees
them without imports.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from tests.fixtures import *  # noqa: E402,F401,F403
from udpx.core.logger import setup_logging  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    """Training loops log every epoch; keep the test output to warnings."""
    setup_logging(level="WARNING")
    yield


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for reproducible test data."""
    return np.random.default_rng(1234)


def pytest_collection_modifyitems(config, items):
    """Mark tests by directory: unit/ as unit, integration/ as integration and slow."""
    for item in items:
        path = str(item.fspath)
        if "unit/" in path:
            item.add_marker(pytest.mark.unit)
        if "integration/" in path:
            item.add_marker(pytest.mark.integration)
            item.add_marker(pytest.mark.slow)


def pytest_ignore_collect(collection_path, config):
    """tests/utils holds helpers, not tests."""
    if "__pycache__" in str(collection_path):
        return True
    return collection_path.parent.name == "utils" and collection_path.parent.parent.name == "tests"
