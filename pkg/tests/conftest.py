"""
Pytest configuration and fixtures for the QuasiLab tests.
"""
import pytest
import sys
import os

# Add project root to path for relative imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core.config import LabConfig

# Import all fixtures from fixtures module
from tests.fixtures.lab_fixtures import *
from tests.helpers.test_helpers import *


@pytest.fixture(autouse=True)
def restore_settings():
    """Undo LabConfig overrides made by a test."""
    yield
    LabConfig.reset()
