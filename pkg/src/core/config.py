from typing import Any, Dict, Mapping

from src.core.errors import ConfigError


class LabConfig:
    """Process-wide numeric settings.

    Values are class attributes so every module sees the same settings
    without passing a config object around. Use ``set``/``update`` to
    override and ``reset`` to restore the defaults.
    """

    APP_TITLE = "QuasiLab"

    # Eigensolver and spectra
    DIMENSION_CAP = 8192
    MAX_BAND_DENOMINATOR = 200
    BUTTERFLY_Q_MAX = 60
    BISECTION_TOL = 1e-12

    # Continued fractions: a partial quotient above this ends the expansion
    NEAR_RATIONAL_GUARD = 1e8

    # Localization diagnostics
    LOCALIZATION_THRESHOLD = 0.05
    LOCALIZATION_MIN_R2 = 0.8
    LOCALIZATION_EDGE_DISTANCE = 100
    AMPLITUDE_FLOOR = 1e-13
    PHASE_SPREAD_LIMIT = 0.25

    # Dynamics
    BOUNDARY_FRACTION = 0.05
    BOUNDARY_MASS_LIMIT = 1e-6
    TIME_GRID_POINTS = 200

    # Kicked rotor
    ROTOR_BOUNDARY_MASS_LIMIT = 1e-8
    KICK_CUTOFF = 1e-14

    # Harness
    SWEEP_BUDGET = 100_000
    WORKERS = 1

    _DEFAULTS: Dict[str, Any] = {}

    @classmethod
    def get_app_title(cls):
        return cls.APP_TITLE

    @classmethod
    def names(cls):
        return sorted(name for name in vars(cls) if name.isupper() and not name.startswith("_"))

    @classmethod
    def get(cls, name: str) -> Any:
        key = name.upper()
        if key not in cls.names():
            raise ConfigError(f"unknown setting: {name}")
        return getattr(cls, key)

    @classmethod
    def set(cls, name: str, value: Any) -> None:
        key = name.upper()
        if key not in cls.names():
            raise ConfigError(f"unknown setting: {name}")
        current = getattr(cls, key)
        if isinstance(current, (int, float)) and not isinstance(current, bool):
            try:
                value = type(current)(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"setting {key} expects {type(current).__name__}, got {value!r}") from exc
        setattr(cls, key, value)

    @classmethod
    def update(cls, settings: Mapping[str, Any]) -> None:
        for name, value in settings.items():
            cls.set(name, value)

    @classmethod
    def reset(cls) -> None:
        for name, value in cls._DEFAULTS.items():
            setattr(cls, name, value)

    @classmethod
    def snapshot(cls) -> Dict[str, Any]:
        """Current settings as a plain dict (used for the config echo)."""
        return {name: getattr(cls, name) for name in cls.names()}


LabConfig._DEFAULTS = LabConfig.snapshot()
