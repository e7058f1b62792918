"""
Tests for the core models: potentials, frequencies, orbit generators and operator specs.
"""
import json

import pytest

from src.core.arithmetic import GOLDEN, SILVER
from src.core.errors import SpecError
from src.core.models import (
    FourierPotential, FrequencyVector, KickedRotorSpec, OperatorSpec, OrbitGenerator,
    dump_spec, load_spec, spec_from_dict,
)


class TestFourierPotential:
    """Test cases for the FourierPotential class."""

    def test_cosine_harmonics(self):
        """Test the almost Mathieu potential stores c_1 = c_{-1} = 1/2."""
        f = FourierPotential.cosine()

        assert dict(f.harmonics) == {(-1,): 0.5 + 0j, (1,): 0.5 + 0j}
        assert f.order == 1
        assert f.sup_bound == pytest.approx(1.0)

    def test_conjugate_completed(self):
        """Test a one-sided harmonic gets its conjugate partner."""
        f = FourierPotential((((2,), 0.25 - 0.5j),))

        assert dict(f.harmonics)[(-2,)] == pytest.approx(0.25 + 0.5j)

    def test_non_conjugate_rejected(self):
        """Test inconsistent mirror amplitudes are refused."""
        with pytest.raises(SpecError):
            FourierPotential((((1,), 1.0), ((-1,), 2.0)))

    def test_constant_potential_rejected(self):
        """Test a potential with no nonconstant harmonic is refused."""
        with pytest.raises(SpecError):
            FourierPotential((((0,), 1.0),))

    def test_wrong_index_dimension(self):
        """Test multi-indices must match the torus dimension."""
        with pytest.raises(SpecError):
            FourierPotential((((1, 0), 0.5),), dimension=1)

    def test_from_cos_sin_round_trip(self):
        """Test the cos/sin document form survives to_dict/from_dict."""
        f = FourierPotential.from_cos_sin([1.0, 0.5], [0.0, 0.25], constant=0.1)
        g = FourierPotential.from_dict(f.to_dict())

        assert g == f

    def test_multidimensional_dict(self):
        """Test the harmonics document form for b = 2."""
        f = FourierPotential((((1, 1), 0.5),), dimension=2)
        g = FourierPotential.from_dict(f.to_dict())

        assert g == f
        assert g.dimension == 2


class TestFrequencyVector:
    """Test cases for the FrequencyVector class."""

    def test_named_frequencies(self):
        """Test 'golden' and 'silver' resolve to their values."""
        omega = FrequencyVector.of("golden", "silver")

        assert omega.components == pytest.approx((GOLDEN, SILVER))
        assert omega.dimension == 2

    def test_components_reduced(self):
        """Test components are reduced mod 1."""
        assert FrequencyVector.of(1.25, -0.25).components == pytest.approx((0.25, 0.75))

    def test_continued_fraction_needs_one_component(self):
        """Test continued fractions are refused for b > 1."""
        with pytest.raises(ValueError):
            FrequencyVector.of(0.3, 0.4).continued_fraction(5)

    def test_convergent_error_bound(self):
        """Test |omega - p_k/q_k| < 1/(q_k q_{k+1})."""
        cf = FrequencyVector.of("silver").continued_fraction(12)

        for current, following in zip(cf.convergents, cf.convergents[1:]):
            assert abs(SILVER - float(current)) < 1.0 / (current.denominator * following.denominator)


class TestOrbitGenerator:
    """Test cases for the OrbitGenerator class."""

    def test_phase_dimensions(self):
        """Test the torus dimension carried by each orbit kind."""
        assert OrbitGenerator.shift(0.1, 0.2).phase_dimension == 2
        assert OrbitGenerator.skew(0.1).phase_dimension == 2
        assert OrbitGenerator.monomial(1.5, 0.3).phase_dimension == 1

    def test_unknown_kind(self):
        with pytest.raises(SpecError):
            OrbitGenerator("rotation", (0.1,))

    def test_monomial_needs_sigma_above_one(self):
        """Test sigma <= 1 is refused for the monomial phase."""
        with pytest.raises(SpecError):
            OrbitGenerator.monomial(1.0, 0.3)


class TestOperatorSpec:
    """Test cases for the OperatorSpec class."""

    def test_almost_mathieu_defaults(self):
        """Test the almost Mathieu constructor builds a shift orbit on the line."""
        spec = OperatorSpec.almost_mathieu(2.0)

        assert spec.geometry == "line"
        assert spec.orbit.kind == "shift"
        assert spec.orbit.omega == pytest.approx((GOLDEN,))
        assert spec.phase == (0.0,)

    def test_negative_coupling_rejected(self):
        with pytest.raises(SpecError):
            OperatorSpec.almost_mathieu(-1.0)

    def test_line_takes_one_potential(self):
        """Test only strips carry a family of potentials."""
        cosine = FourierPotential.cosine()
        with pytest.raises(SpecError):
            OperatorSpec("line", 1.0, (cosine, cosine), FrequencyVector.of(0.3), (0.0,))

    def test_strip_width(self, strip_spec):
        """Test the strip width equals the number of row potentials."""
        assert strip_spec.width == 2

    def test_box_requires_two_frequencies(self):
        """Test 2D boxes need b = 2."""
        f = FourierPotential((((1, 0), 0.5),), dimension=2)
        with pytest.raises(SpecError):
            OperatorSpec("box", 1.0, (f,), FrequencyVector.of(0.3), (0.0,))

    def test_phase_length_checked(self):
        """Test the phase must match the orbit's torus dimension."""
        with pytest.raises(SpecError):
            OperatorSpec("line", 1.0, (FourierPotential.cosine(),), FrequencyVector.of(0.3), (0.0, 0.1))

    def test_shift_orbit_must_match_frequency(self):
        with pytest.raises(SpecError):
            OperatorSpec("line", 1.0, (FourierPotential.cosine(),), FrequencyVector.of(0.3), (0.0,),
                         orbit=OrbitGenerator.shift(0.4))

    def test_with_frequency_moves_shift_orbit(self):
        """Test changing the frequency keeps the shift orbit consistent."""
        spec = OperatorSpec.almost_mathieu(1.0).with_frequency(0.25)

        assert spec.orbit.omega == (0.25,)
        assert spec.frequency.components == (0.25,)

    def test_dict_round_trip(self, strip_spec):
        """Test to_dict/from_dict reproduce the spec."""
        assert OperatorSpec.from_dict(strip_spec.to_dict()) == strip_spec

    def test_skew_spec_round_trip(self):
        spec = OperatorSpec("line", 1.5, (FourierPotential.cosine(),), FrequencyVector.of(0.1), (0.2, 0.3),
                            orbit=OrbitGenerator.skew(0.1))

        assert OperatorSpec.from_dict(spec.to_dict()) == spec

    def test_missing_field_reported(self):
        """Test a document without a coupling raises SpecError naming the field."""
        with pytest.raises(SpecError, match="coupling"):
            OperatorSpec.from_dict({"frequency": 0.3})

    def test_frequency_name_in_document(self):
        spec = OperatorSpec.from_dict({"coupling": 2.0, "frequency": "golden"})

        assert spec.frequency.components == pytest.approx((GOLDEN,))


class TestSpecDocuments:
    """Test cases for loading and dumping spec documents."""

    def test_rotor_detected_by_kappa(self):
        spec = spec_from_dict({"kappa": 0.5, "a": 0.3, "b": 0.1})

        assert spec == KickedRotorSpec(0.5, 0.3, 0.1)

    def test_negative_kappa_rejected(self):
        with pytest.raises(SpecError):
            KickedRotorSpec(-0.1, 0.3)

    def test_load_spec_accepts_run_document(self, tmp_path, amo_supercritical):
        """Test load_spec reads both bare specs and documents with a 'spec' key."""
        bare = tmp_path / "bare.json"
        bare.write_text(dump_spec(amo_supercritical))
        wrapped = tmp_path / "wrapped.json"
        wrapped.write_text(json.dumps({"spec": amo_supercritical.to_dict(), "settings": {}}))

        assert load_spec(bare) == amo_supercritical
        assert load_spec(wrapped) == amo_supercritical

    def test_load_spec_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")

        with pytest.raises(SpecError):
            load_spec(path)

    def test_load_spec_missing_file(self, tmp_path):
        with pytest.raises(SpecError):
            load_spec(tmp_path / "absent.json")
