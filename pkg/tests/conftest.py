"""Shared fixtures for overlap_ec tests."""

import sys
from pathlib import Path

import pytest

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from overlap_ec.core import make_instance
from overlap_ec.data import EcInstance


@pytest.fixture
def single_clause() -> EcInstance:
    """Return the instance {1, 2, 3} over three variables."""
    return make_instance(3, 3, [(1, 2, 3)])


@pytest.fixture
def all_triples() -> EcInstance:
    """Return every 3-subset of four variables, an unsatisfiable instance."""
    return make_instance(4, 3, [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)])


@pytest.fixture
def permissive_limit():
    """Return a component limit no tiny instance can reach."""
    return lambda n: 100.0
