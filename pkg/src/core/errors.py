"""
Exception hierarchy shared by every layer.

Conditions that only degrade a result (boundary mass, near-rational
frequencies, band touching) are reported through flags on the result
objects instead.
"""


class LabError(Exception):
    """Base class for all QuasiLab errors."""


class SpecError(LabError, ValueError):
    """Malformed operator specification or unsupported geometry."""


class DomainError(LabError, ValueError):
    """Argument outside the domain of an operation."""


class SizeLimitError(LabError):
    """Problem size exceeds a configured limit."""


class UnsupportedSpectrumError(LabError, TypeError):
    """Operation needs a point spectrum but got band intervals (or vice versa)."""


class FitRefusedError(LabError):
    """Not enough data points for a fit."""


class InvalidRunError(LabError):
    """A flagged evolution run was passed to an operation that needs a valid one."""


class ConfigError(LabError, ValueError):
    """Invalid sweep or command-line configuration."""


class EmitError(LabError, OSError):
    """Writing an output table failed."""
