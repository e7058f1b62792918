"""
Tests for potential evaluation along shift, skew-shift and monomial orbits.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DomainError, SpecError
from src.core.models import FourierPotential, FrequencyVector, OperatorSpec, OrbitGenerator
from src.core.orbits import (
    box_potential, eval_potential, evaluate_complex, orbit_phase, orbit_phases,
    potential_sequence, theta_grid,
)
from tests.helpers.test_helpers import circular_distance


class TestEvalPotential:
    """Test cases for eval_potential."""

    def test_cosine_values(self):
        """Test cos(2 pi theta) at 0 and 1/4."""
        f = FourierPotential.cosine()

        assert eval_potential(f, 0.0) == pytest.approx(1.0)
        assert eval_potential(f, 0.25) == pytest.approx(0.0, abs=1e-15)

    def test_two_harmonics(self):
        """Test cos(2 pi theta) + 0.5 cos(4 pi theta) at theta = 1/2."""
        f = FourierPotential.from_cos_sin([1.0, 0.5])

        assert eval_potential(f, 0.5) == pytest.approx(-0.5)

    def test_sine_harmonic(self):
        f = FourierPotential.from_cos_sin([], [1.0])

        assert eval_potential(f, 0.25) == pytest.approx(1.0)

    def test_batch_shape(self):
        f = FourierPotential.cosine()
        values = eval_potential(f, np.linspace(0, 1, 12).reshape(3, 4))

        assert values.shape == (3, 4)

    def test_two_dimensional(self, box_spec):
        """Test a b = 2 potential takes points with a last axis of 2."""
        value = eval_potential(box_spec.potential, np.array([0.0, 0.5]))

        assert value == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(min_value=-50.0, max_value=50.0, allow_nan=False))
    @settings(max_examples=50)
    def test_imaginary_residue_vanishes(self, theta):
        """Test the complex evaluation of a conjugate-symmetric series is real."""
        f = FourierPotential.from_cos_sin([1.0, 0.3, 0.2], [0.5, 0.1])

        assert abs(evaluate_complex(f, np.mod(theta, 1.0)).imag) < 1e-14

    @given(st.floats(min_value=0.0, max_value=1.0, exclude_max=True))
    @settings(max_examples=50)
    def test_period_one(self, theta):
        f = FourierPotential.from_cos_sin([1.0, 0.5], [0.2])

        assert eval_potential(f, theta + 3.0) == pytest.approx(eval_potential(f, theta), abs=1e-12)


class TestOrbitPhase:
    """Test cases for orbit_phase and orbit_phases."""

    def test_shift(self):
        """Test 6 steps of omega = 1/4 from 0 land on 1/2."""
        assert orbit_phase(OrbitGenerator.shift(0.25), [0.0], 6)[0] == pytest.approx(0.5)

    def test_shift_negative_sites(self):
        assert orbit_phase(OrbitGenerator.shift(0.25), [0.0], -1)[0] == pytest.approx(0.75)

    def test_skew_closed_form(self, skew_orbit):
        """Test the second coordinate 0 + 0 + 3*2*0.1/2 = 0.3."""
        point = orbit_phase(skew_orbit, [0.0, 0.0], 3)

        assert point[0] == pytest.approx(0.3)
        assert point[1] == pytest.approx(0.3)

    def test_monomial(self):
        """Test frac(4^1.5 * 0.3 + 0.1) = 0.5."""
        point = orbit_phase(OrbitGenerator.monomial(1.5, 0.3), [0.1], 4)

        assert point[0] == pytest.approx(0.5)

    def test_monomial_negative_site_refused(self):
        with pytest.raises(DomainError):
            orbit_phase(OrbitGenerator.monomial(1.5, 0.3), [0.1], -1)

    def test_non_integer_site_refused(self):
        with pytest.raises(DomainError):
            orbit_phases(OrbitGenerator.shift(0.25), [0.0], np.array([0.5]))

    def test_wrong_point_dimension(self, skew_orbit):
        with pytest.raises(DomainError):
            orbit_phase(skew_orbit, [0.0], 1)

    @given(st.integers(-10_000, 10_000), st.integers(-10_000, 10_000),
           st.floats(0.0, 1.0, exclude_max=True))
    @settings(max_examples=100)
    def test_shift_additivity(self, n, m, theta):
        """Test T^{n+m} theta = T^n (T^m theta) up to round-off."""
        g = OrbitGenerator.shift(0.6180339887498949)
        direct = orbit_phase(g, [theta], n + m)
        composed = orbit_phase(g, orbit_phase(g, [theta], m), n)

        assert circular_distance(direct, composed)[0] < 1e-11

    def test_skew_matches_iterated_map(self):
        """Test the closed form against 1000 applications of T(x1, x2) = (x1 + w, x2 + x1)."""
        omega = 0.6180339887498949
        g = OrbitGenerator.skew(omega)
        start = np.array([0.123, 0.456])
        x1, x2 = start
        sites = np.arange(1, 1001)
        iterated = np.empty((sites.size, 2))
        for i in range(sites.size):
            x1, x2 = math.fmod(x1 + omega, 1.0), math.fmod(x2 + x1, 1.0)
            iterated[i] = (x1, x2)
        closed = orbit_phases(g, start, sites)

        assert np.max(circular_distance(closed, iterated)) < 1e-9

    def test_batch_broadcast(self):
        """Test many starting points against many sites."""
        g = OrbitGenerator.shift(0.3)
        phases = orbit_phases(g, np.zeros((5, 1, 1)), np.arange(7))

        assert phases.shape == (5, 7, 1)


class TestPotentialSequence:
    """Test cases for potential_sequence and box_potential."""

    def test_zero_coupling(self):
        spec = OperatorSpec.almost_mathieu(0.0, 0.3)

        assert np.all(potential_sequence(spec, range(-5, 6)) == 0.0)

    def test_half_frequency_alternates(self):
        """Test lambda = 2, omega = 1/2 gives +2, -2, +2, ..."""
        spec = OperatorSpec.almost_mathieu(2.0, 0.5, 0.0)
        values = potential_sequence(spec, range(6))

        assert values == pytest.approx([2.0, -2.0, 2.0, -2.0, 2.0, -2.0])

    def test_golden_first_site(self):
        spec = OperatorSpec.almost_mathieu(1.0, "golden", 0.0)

        assert potential_sequence(spec, [1])[0] == pytest.approx(-0.7373688, abs=1e-6)

    def test_rational_period(self):
        """Test omega = 3/7 makes the sequence exactly 7-periodic."""
        spec = OperatorSpec.almost_mathieu(1.3, 3 / 7, 0.17)
        values = potential_sequence(spec, range(-21, 22))

        assert values[7:] == pytest.approx(values[:-7], abs=1e-12)

    def test_strip_rows(self, strip_spec):
        """Test a strip gives m values per site."""
        assert potential_sequence(strip_spec, range(4)).shape == (4, 2)

    def test_box_refused(self, box_spec):
        with pytest.raises(SpecError):
            potential_sequence(box_spec, range(3))

    def test_box_potential(self, box_spec):
        """Test V(n1, n2) = lambda f(n1 w1 + t1, n2 w2 + t2) on [-N, N]^2."""
        grid = box_potential(box_spec, 3)
        w1, w2 = box_spec.frequency.components
        t1, t2 = box_spec.phase
        expected = 3.0 * (math.cos(2 * math.pi * (2 * w1 + t1)) + math.cos(2 * math.pi * (-1 * w2 + t2)))

        assert grid.shape == (7, 7)
        assert grid[2 + 3, -1 + 3] == pytest.approx(expected)

    def test_multifrequency_line(self):
        """Test a b = 2 shift potential on the line."""
        f = FourierPotential((((1, 0), 0.5), ((0, 1), 0.5)), dimension=2)
        spec = OperatorSpec("line", 1.0, (f,), FrequencyVector.of(0.1, 0.2), (0.0, 0.0))
        values = potential_sequence(spec, [1])

        assert values[0] == pytest.approx(math.cos(0.2 * math.pi) + math.cos(0.4 * math.pi))


class TestThetaGrid:
    """Test cases for theta_grid."""

    def test_offset_equispaced(self):
        grid = theta_grid(4)[:, 0]

        assert np.diff(grid) == pytest.approx([0.25, 0.25, 0.25])
        assert grid[0] == pytest.approx(0.125 + 0.6180339887498949e-3)

    def test_multidimensional_shape(self):
        assert theta_grid(16, 3).shape == (16, 3)

    def test_jitter_shifts_grid(self):
        shifted = theta_grid(8, jitter=0.01)
        assert circular_distance(shifted[:, 0], theta_grid(8)[:, 0] + 0.01) == pytest.approx(np.zeros(8), abs=1e-14)

    def test_empty_refused(self):
        with pytest.raises(DomainError):
            theta_grid(0)
