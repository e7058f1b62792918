"""
Quantum kicked rotor in the momentum representation.

One period of the Floquet operator W = S D acts on amplitudes phi(n),
n in [-N, N]:

    D: phi(n) -> exp(-i (a n^2 + b n)) phi(n)      free evolution
    S: phi -> S * phi, S(n) the Fourier coefficients of exp(-i kappa cos 2 pi theta)

The kick is applied on an angle grid of L = next power of two
>= max(4(2N + 1), 2N + 1 + 2 n_max) points, n_max the reach of S, so the
Toeplitz convolution costs two FFTs and nothing wraps around the grid.

The quadratic phase is the skew shift in disguise: with
omega = -a / pi, x1 = -(a + b) / (2 pi) and x2 = 0,

    exp(2 pi i (T^n x)_2) = exp(-i (a n^2 + b n)),

see ``skew_shift_parameters``.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import fft

from src.core.config import LabConfig
from src.core.errors import DomainError
from src.core.models import KickedRotorSpec

logger = logging.getLogger(__name__)


def _next_power_of_two(value: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(value, 1))))


@dataclass(frozen=True)
class KickSequence:
    """S(n) for n = -n_max .. n_max."""
    kappa: float
    values: np.ndarray

    @property
    def n_max(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.n_max:
            return 0j
        return complex(self.values[n + self.n_max])

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def toeplitz(self, half_width: int) -> np.ndarray:
        """Explicit (2N+1) x (2N+1) matrix S(n - m)."""
        n = np.arange(-half_width, half_width + 1)
        diff = n[:, None] - n[None, :]
        matrix = np.zeros(diff.shape, dtype=complex)
        inside = np.abs(diff) <= self.n_max
        matrix[inside] = self.values[diff[inside] + self.n_max]
        return matrix


def kick_coefficients(kappa: float, cutoff: Optional[float] = None, resolution: Optional[int] = None) -> KickSequence:
    """Fourier coefficients of the unit-modulus symbol exp(-i kappa cos 2 pi theta).

    Computed by trapezoid quadrature (an FFT) on ``resolution`` points,
    which is spectrally accurate for this entire symbol; coefficients are
    kept out to the last |n| with |S(n)| >= ``cutoff``.
    """
    if kappa < 0:
        raise DomainError(f"kick strength must be >= 0, got {kappa}")
    cutoff = LabConfig.KICK_CUTOFF if cutoff is None else cutoff
    if not cutoff > 0:
        raise DomainError(f"cutoff must be positive, got {cutoff}")
    size = resolution or _next_power_of_two(max(256, 4 * (int(math.ceil(kappa)) + 64)))
    theta = np.arange(size) / size
    coefficients = fft.fft(np.exp(-1j * kappa * np.cos(2.0 * np.pi * theta))) / size
    n = np.fft.fftfreq(size, 1.0 / size).astype(int)
    significant = np.abs(n[np.abs(coefficients) >= cutoff])
    n_max = int(significant.max()) if significant.size else 0
    wanted = np.arange(-n_max, n_max + 1)
    return KickSequence(float(kappa), coefficients[np.mod(wanted, size)])


@dataclass(frozen=True)
class RotorState:
    amplitudes: np.ndarray
    period: int = 0
    boundary_mass: float = 0.0
    flagged: bool = False

    @property
    def half_width(self) -> int:
        return (self.amplitudes.size - 1) // 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def delta(cls, half_width: int, site: int = 0) -> "RotorState":
        amplitudes = np.zeros(2 * half_width + 1, dtype=complex)
        amplitudes[site + half_width] = 1.0
        return cls(amplitudes)


def _boundary_mass(amplitudes: np.ndarray) -> float:
    half = (amplitudes.size - 1) // 2
    margin = max(1, math.ceil(LabConfig.BOUNDARY_FRACTION * half))
    weights = np.abs(amplitudes) ** 2
    return float(weights[:margin].sum() + weights[amplitudes.size - margin:].sum())


class FloquetOperator:
    """One kicked-rotor period on the momentum box [-N, N]."""

    def __init__(self, spec: KickedRotorSpec, half_width: int):
        if half_width < 1:
            raise DomainError(f"momentum box half-width must be >= 1, got {half_width}")
        self.spec = spec
        self.half_width = half_width
        n = np.arange(-half_width, half_width + 1)
        self.free_phase = np.exp(-1j * (spec.a * n.astype(float) ** 2 + spec.b * n))
        self.kick_reach = kick_coefficients(spec.kappa).n_max
        needed = 2 * half_width + 1 + 2 * self.kick_reach
        self.grid_size = _next_power_of_two(max(4 * (2 * half_width + 1), needed))
        if needed > 4 * (2 * half_width + 1):
            logger.info("kick reach %d at kappa=%g outgrows the default angle grid for N=%d; using %d points",
                        self.kick_reach, spec.kappa, half_width, self.grid_size)
        theta = np.arange(self.grid_size) / self.grid_size
        self.kick = np.exp(-1j * spec.kappa * np.cos(2.0 * np.pi * theta))
        self.slots = np.mod(n, self.grid_size)

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        embedded = np.zeros(self.grid_size, dtype=complex)
        embedded[self.slots] = self.free_phase * amplitudes
        angle = fft.ifft(embedded) * self.grid_size
        return (fft.fft(angle * self.kick) / self.grid_size)[self.slots]


@lru_cache(maxsize=16)
def floquet_operator(spec: KickedRotorSpec, half_width: int) -> FloquetOperator:
    return FloquetOperator(spec, half_width)


def floquet_step(state: RotorState, spec: KickedRotorSpec) -> RotorState:
    """Apply W once; a boundary mass above ``ROTOR_BOUNDARY_MASS_LIMIT`` flags the state (and every later one).

    Flagged states have leaked norm through the box edge and are not
    checked for normalization.
    """
    if not state.flagged and abs(state.norm - 1.0) > 1e-6:
        raise DomainError(f"rotor state must be normalized, got norm {state.norm!r}")
    amplitudes = floquet_operator(spec, state.half_width).apply(state.amplitudes)
    boundary = _boundary_mass(amplitudes)
    flagged = state.flagged or boundary > LabConfig.ROTOR_BOUNDARY_MASS_LIMIT
    return RotorState(amplitudes, state.period + 1, boundary, flagged)


def _saturation(average: np.ndarray, t: int) -> float:
    start = t // 10
    base = float(average[start])
    peak = float(np.max(average[start:t + 1]))
    # round-off growth on a frozen series counts as constant
    if peak - base <= 1e-12 * max(base, 1.0):
        return 1.0
    if base == 0.0:
        return float("inf")
    return peak / base


@dataclass(frozen=True)
class RotorRun:
    spec: KickedRotorSpec
    N: int
    times: np.ndarray
    n2: np.ndarray
    n2_avg: np.ndarray
    running_metric: np.ndarray
    norm_drift: float
    valid_until: Optional[int]

    @property
    def periods(self) -> int:
        return int(self.times[-1])

    @property
    def saturation_metric(self) -> float:
        """max of the running-average <n^2> over the last decade divided by its value at the decade start."""
        return float(self.running_metric[-1])

    @property
    def flagged(self) -> bool:
        return self.valid_until is not None

    def rows(self) -> List[Dict[str, float]]:
        return [{"t": int(t), "n2": float(a), "n2_avg": float(b), "saturation": float(s)}
                for t, a, b, s in zip(self.times, self.n2, self.n2_avg, self.running_metric)]

    def summary(self) -> Dict[str, object]:
        return {**self.spec.to_dict(), "N": self.N, "periods": self.periods,
                "saturation_metric": self.saturation_metric, "norm_drift": self.norm_drift,
                "valid_until": self.valid_until, "final_n2": float(self.n2[-1])}


def rotor_run(spec: KickedRotorSpec, N: int, periods: int, initial: Optional[RotorState] = None) -> RotorRun:
    """<n^2> after every period from delta_0 (or ``initial``).

    ``valid_until`` is the last period before the state was flagged, or
    None when the whole series is valid.
    """
    if periods < 1:
        raise DomainError(f"periods must be >= 1, got {periods}")
    state = initial or RotorState.delta(N)
    if state.half_width != N:
        raise DomainError(f"initial state has half-width {state.half_width}, expected {N}")
    n2_weights = np.arange(-N, N + 1, dtype=float) ** 2
    n2 = np.empty(periods + 1)
    n2[0] = float(np.abs(state.amplitudes) ** 2 @ n2_weights)
    start_norm = state.norm
    drift = 0.0
    valid_until = None
    for t in range(1, periods + 1):
        state = floquet_step(state, spec)
        n2[t] = float(np.abs(state.amplitudes) ** 2 @ n2_weights)
        drift = max(drift, abs(state.norm - start_norm))
        if state.flagged and valid_until is None:
            valid_until = t - 1
            logger.warning("rotor boundary mass %.3g at period %d (N=%d)", state.boundary_mass, t, N)

    times = np.arange(periods + 1)
    average = np.cumsum(n2) / (times + 1)
    running = np.array([_saturation(average, t) for t in times])
    logger.info("kicked rotor kappa=%g a=%g b=%g: <n^2>=%.4g after %d periods, saturation %.3f",
                spec.kappa, spec.a, spec.b, n2[-1], periods, running[-1])
    return RotorRun(spec, N, times, n2, average, running, drift, valid_until)


def skew_shift_parameters(a: float, b: float) -> Tuple[float, float, float]:
    """(x1, x2, omega) with exp(2 pi i (T^n x)_2) = exp(-i (a n^2 + b n)) for the skew shift T."""
    omega = (-a / math.pi) % 1.0
    x1 = (-(a + b) / (2.0 * math.pi)) % 1.0
    return x1, 0.0, omega
