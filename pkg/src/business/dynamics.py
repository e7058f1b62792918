"""
Wave-packet evolution on finite boxes and transport moments.

Evolution is exact: Psi_t = sum_j exp(-i t E_j) <phi_j, Psi_0> phi_j over
the full eigenbasis of the finite Hamiltonian (sign convention e^{-itH};
moments do not depend on it). There is no time step, so unitarity holds
to eigensolver precision at every output time.
"""
import logging
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from src.business.spectra import FiniteHamiltonian, build_finite, eigs
from src.core.config import LabConfig
from src.core.errors import DomainError, FitRefusedError, InvalidRunError
from src.core.models import OperatorSpec
from src.core.orbits import theta_grid
from src.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

# Output times propagated per matrix product
_TIME_BLOCK = 64


class Propagator:
    """Spectral propagator of one finite Hamiltonian."""

    def __init__(self, hamiltonian: FiniteHamiltonian):
        spectrum, vectors = eigs(hamiltonian)
        self.hamiltonian = hamiltonian
        self.energies = spectrum.eigenvalues
        self.vectors = vectors

    def coefficients(self, psi0: np.ndarray) -> np.ndarray:
        return self.vectors.T @ np.asarray(psi0)

    def states(self, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
        """Psi_t for every t in ``times`` as rows of a (len(times), dimension) array."""
        c = self.coefficients(psi0)
        t = np.asarray(times, dtype=float)
        rhs = c[:, None] * np.exp(-1j * np.outer(self.energies, t))
        # two real products avoid a complex copy of the eigenbasis
        return (self.vectors @ rhs.real + 1j * (self.vectors @ rhs.imag)).T

    def propagate(self, psi0: np.ndarray, t: float) -> np.ndarray:
        return self.states(psi0, [t])[0]

    def energy(self, psi: np.ndarray) -> float:
        """<psi, H psi>."""
        return float(np.real(np.vdot(psi, self.hamiltonian.to_sparse() @ psi)))


@dataclass(frozen=True)
class EvolutionRun:
    spec: OperatorSpec
    N: int
    times: np.ndarray
    densities: np.ndarray
    positions: np.ndarray
    initial_norm: float
    boundary_mass_max: float
    valid: bool
    states: Optional[np.ndarray] = None

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self.densities.sum(axis=1))

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.initial_norm)))


@dataclass(frozen=True)
class MomentSeries:
    times: np.ndarray
    x2_instant: np.ndarray
    x2_avg: np.ndarray
    order: int = 2

    def rows(self) -> List[Dict[str, float]]:
        return [{"t": float(t), "x2_instant": float(a), "x2_avg": float(b)}
                for t, a, b in zip(self.times, self.x2_instant, self.x2_avg)]


@dataclass(frozen=True)
class TransportFit:
    beta: float
    stderr: float
    ci_low: float
    ci_high: float
    points: int
    window: Tuple[float, float]

    def to_dict(self) -> Dict[str, float]:
        return {"beta": self.beta, "stderr": self.stderr, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "points": self.points, "window": list(self.window)}


def time_grid(t_max: float, points: Optional[int] = None) -> np.ndarray:
    """t = 0 followed by ``points - 1`` log-spaced times in [1, t_max]."""
    points = LabConfig.TIME_GRID_POINTS if points is None else points
    if points < 2:
        raise DomainError(f"time grid needs at least 2 points, got {points}")
    if not t_max > 0:
        raise DomainError(f"t_max must be positive, got {t_max}")
    if t_max <= 1.0:
        return np.linspace(0.0, t_max, points)
    return np.r_[0.0, np.logspace(0.0, np.log10(t_max), points - 1)]


def origin_state(hamiltonian: FiniteHamiltonian) -> np.ndarray:
    """delta_0 (the site n = 0, rung 0 on a strip)."""
    psi = np.zeros(hamiltonian.dimension)
    psi[int(np.argmax(np.all(hamiltonian.positions == 0, axis=1)))] = 1.0
    return psi


def evolve(spec: OperatorSpec, N: int, psi0: Optional[np.ndarray] = None, times: Sequence[float] = (),
           keep_states: bool = False) -> EvolutionRun:
    """Evolve ``psi0`` (default delta_0) on the Dirichlet box and record |Psi_t|^2.

    t = 0 is prepended when missing. A run whose boundary mass exceeds
    ``LabConfig.BOUNDARY_MASS_LIMIT`` completes but is marked invalid.
    """
    grid = np.asarray(times, dtype=float).ravel()
    if grid.size == 0:
        raise DomainError("time grid is empty")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise DomainError("times must be finite and >= 0")
    if np.any(np.diff(grid) < 0):
        raise DomainError("times must be sorted")
    if grid[0] != 0.0:
        grid = np.r_[0.0, grid]

    hamiltonian = build_finite(spec, N)
    psi = origin_state(hamiltonian) if psi0 is None else np.asarray(psi0)
    if psi.shape != (hamiltonian.dimension,):
        raise DomainError(f"initial state must have length {hamiltonian.dimension}, got {psi.shape}")
    propagator = Propagator(hamiltonian)

    densities = np.empty((grid.size, hamiltonian.dimension))
    kept = np.empty((grid.size, hamiltonian.dimension), dtype=complex) if keep_states else None
    for start in range(0, grid.size, _TIME_BLOCK):
        block = slice(start, start + _TIME_BLOCK)
        states = propagator.states(psi, grid[block])
        if grid[block][0] == 0.0:
            states[0] = psi
        densities[block] = np.abs(states) ** 2
        if kept is not None:
            kept[block] = states

    boundary = float(np.max(densities[:, hamiltonian.boundary_mask()].sum(axis=1)))
    valid = boundary < LabConfig.BOUNDARY_MASS_LIMIT
    if not valid:
        logger.warning("boundary mass %.3g exceeds %.1g at N=%d, t_max=%g; the box is too small",
                       boundary, LabConfig.BOUNDARY_MASS_LIMIT, N, grid[-1])
    return EvolutionRun(spec, N, grid, densities, hamiltonian.positions, float(np.linalg.norm(psi)),
                        boundary, valid, kept)


def _instant(run: EvolutionRun, order: int) -> np.ndarray:
    radius = np.linalg.norm(run.positions, axis=1)
    return run.densities @ radius ** order


def moments(run: EvolutionRun, order: int = 2) -> MomentSeries:
    """Instantaneous sum |Psi_t(n)|^2 |n|^order and its running time average.

    The average at t = 0 is the instantaneous value; later values are the
    trapezoid integral over [0, T] divided by T.
    """
    if not run.valid:
        raise InvalidRunError(f"run at N={run.N} lost {run.boundary_mass_max:.3g} of its mass to the boundary; "
                              "repeat with a larger N")
    if order < 1:
        raise DomainError(f"moment order must be >= 1, got {order}")
    instant = _instant(run, order)
    average = np.empty_like(instant)
    integral = cumulative_trapezoid(instant, run.times, initial=0.0)
    positive = run.times > 0
    average[positive] = integral[positive] / run.times[positive]
    average[~positive] = instant[~positive]
    return MomentSeries(run.times, instant, average, order)


def transport_exponent(series: MomentSeries, window: Tuple[float, float], which: str = "avg",
                       confidence: float = 0.95) -> TransportFit:
    """Slope of ln x2 against ln T over ``window`` with a t-distribution confidence band."""
    lo, hi = (float(x) for x in window)
    if which not in ("avg", "instant"):
        raise DomainError(f"unknown moment series {which!r}")
    values = series.x2_avg if which == "avg" else series.x2_instant
    mask = (series.times >= lo) & (series.times <= hi) & (series.times > 0) & (values > 0)
    count = int(np.count_nonzero(mask))
    if count < 8:
        raise FitRefusedError(f"only {count} points in [{lo}, {hi}]; at least 8 are needed")
    fit = stats.linregress(np.log(series.times[mask]), np.log(values[mask]))
    half = float(stats.t.ppf(0.5 + confidence / 2.0, count - 2) * fit.stderr)
    return TransportFit(float(fit.slope), float(fit.stderr), float(fit.slope) - half, float(fit.slope) + half,
                        count, (lo, hi))


@dataclass(frozen=True)
class StrongDLMetric:
    value: float
    per_theta: Tuple[float, ...]
    thetas: Tuple[Tuple[float, ...], ...]
    t_max: float
    valid: bool

    def to_dict(self) -> Dict[str, object]:
        return {"strong_dl": self.value, "t_max": self.t_max, "samples": len(self.thetas), "valid": self.valid}


def _sup_moment(theta: Tuple[float, ...], spec: OperatorSpec, N: int, times: np.ndarray,
                order: int) -> Tuple[float, bool]:
    run = evolve(spec.with_phase(*theta), N, times=times)
    return float(np.max(_instant(run, order))), run.valid


def strong_dl_metric(spec: OperatorSpec, N: int, theta_samples: int, t_max: float,
                     points: Optional[int] = None, workers: Optional[int] = None,
                     order: int = 2) -> StrongDLMetric:
    """Mean over a theta grid of max_t x2_instant on the time grid (a lower bound for sup_t)."""
    if theta_samples < 1:
        raise DomainError(f"theta_samples must be >= 1, got {theta_samples}")
    thetas = sorted(tuple(map(float, t)) for t in theta_grid(theta_samples, len(spec.phase)))
    task = partial(_sup_moment, spec=spec, N=N, times=time_grid(t_max, points), order=order)
    results = parallel_map(task, thetas, workers)
    sups = tuple(r[0] for r in results)
    valid = all(r[1] for r in results)
    if not valid:
        logger.warning("strong DL metric at N=%d includes runs that reached the boundary", N)
    return StrongDLMetric(float(np.mean(sups)), sups, tuple(thetas), float(t_max), valid)
