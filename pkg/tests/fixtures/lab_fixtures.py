"""
Operator and rotor specifications shared across the test suite.
"""
import pytest

from src.core.arithmetic import GOLDEN
from src.core.models import (
    FourierPotential, FrequencyVector, KickedRotorSpec, OperatorSpec, OrbitGenerator,
)


@pytest.fixture
def free_spec():
    """The free Laplacian (lambda = 0) on the line."""
    return OperatorSpec.almost_mathieu(0.0, "golden", 0.0)


@pytest.fixture
def amo_subcritical():
    """Almost Mathieu operator at lambda = 1 (extended regime)."""
    return OperatorSpec.almost_mathieu(1.0, "golden", 0.2)


@pytest.fixture
def amo_critical():
    return OperatorSpec.almost_mathieu(2.0, "golden", 0.2)


@pytest.fixture
def amo_supercritical():
    """Almost Mathieu operator at lambda = 4 (localized regime)."""
    return OperatorSpec.almost_mathieu(4.0, "golden", 0.2)


@pytest.fixture
def diagonal_spec():
    """The lambda^{-1} = 0 limit: no hopping."""
    return OperatorSpec.almost_mathieu(1.0, "golden", 0.2, diagonal=True)


@pytest.fixture
def strip_spec():
    """Two-row strip with cosine potentials on both rows."""
    cosine = FourierPotential.cosine()
    return OperatorSpec("strip", 1.0, (cosine, cosine), FrequencyVector.of("golden"), (0.0,))


@pytest.fixture
def box_spec():
    """2D box with V = lambda (cos 2 pi x + cos 2 pi y)."""
    f = FourierPotential((((1, 0), 0.5), ((-1, 0), 0.5), ((0, 1), 0.5), ((0, -1), 0.5)), dimension=2)
    return OperatorSpec("box", 3.0, (f,), FrequencyVector.of("golden", "silver"), (0.1, 0.3))


@pytest.fixture
def skew_orbit():
    return OrbitGenerator.skew(0.1)


@pytest.fixture
def rotor_spec():
    """Kicked rotor in the localized regime."""
    return KickedRotorSpec(0.5, GOLDEN / 2.0, 0.3)


@pytest.fixture
def resonant_rotor():
    """a = b = 0: the free phase is identically 1."""
    return KickedRotorSpec(1.0, 0.0, 0.0)
