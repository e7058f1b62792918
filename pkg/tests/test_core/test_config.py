"""
Tests for the LabConfig settings class.
"""
import pytest

from src.core.config import LabConfig
from src.core.errors import ConfigError


class TestLabConfig:
    """Test cases for LabConfig."""

    def test_defaults(self):
        """Test the documented default thresholds."""
        assert LabConfig.get("dimension_cap") == 8192
        assert LabConfig.get("MAX_BAND_DENOMINATOR") == 200
        assert LabConfig.get("LOCALIZATION_THRESHOLD") == 0.05
        assert LabConfig.get("BOUNDARY_MASS_LIMIT") == 1e-6

    def test_app_title(self):
        assert LabConfig.get_app_title() == "QuasiLab"

    def test_title_changed_through_set(self):
        """Test the title is an ordinary setting with no dedicated setter."""
        LabConfig.set("APP_TITLE", "Lab")

        assert LabConfig.get_app_title() == "Lab"
        assert not hasattr(LabConfig, "set_app_title")
        LabConfig.reset()
        assert LabConfig.get_app_title() == "QuasiLab"

    def test_set_coerces_type(self):
        """Test values from JSON are coerced to the setting's type."""
        LabConfig.set("DIMENSION_CAP", "2048")

        assert LabConfig.DIMENSION_CAP == 2048
        assert isinstance(LabConfig.DIMENSION_CAP, int)

    def test_set_rejects_bad_value(self):
        with pytest.raises(ConfigError):
            LabConfig.set("DIMENSION_CAP", "many")

    def test_unknown_setting(self):
        """Test unknown names raise ConfigError for both get and set."""
        with pytest.raises(ConfigError):
            LabConfig.get("NOT_A_SETTING")
        with pytest.raises(ConfigError):
            LabConfig.set("NOT_A_SETTING", 1)

    def test_update_and_reset(self):
        """Test reset restores every overridden value."""
        LabConfig.update({"workers": 4, "PHASE_SPREAD_LIMIT": 0.5})

        assert LabConfig.WORKERS == 4
        assert LabConfig.PHASE_SPREAD_LIMIT == 0.5

        LabConfig.reset()

        assert LabConfig.WORKERS == 1
        assert LabConfig.PHASE_SPREAD_LIMIT == 0.25

    def test_snapshot_lists_public_settings(self):
        snapshot = LabConfig.snapshot()

        assert "SWEEP_BUDGET" in snapshot
        assert "_DEFAULTS" not in snapshot
        assert snapshot == {name: LabConfig.get(name) for name in LabConfig.names()}
