"""
Transfer-matrix cocycles and Lyapunov exponents.

The k-step transfer matrix is M_k(theta, E) = T_{k-1} ... T_0 with
T_n = [[E - V_n, -1], [1, 0]]. Products are rescaled by their Frobenius
norm after every step and the logarithm of the scale is accumulated, so
no overflow handling is needed. The Frobenius norm is within a factor
sqrt(2) of the operator norm, which shifts (1/k) ln ||M_k|| by at most
ln(sqrt 2)/k and leaves the limit unchanged.

Only line geometry has a 2x2 cocycle; strips and boxes are rejected.
"""
import logging
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DomainError, SpecError
from src.core.models import OperatorSpec
from src.core.orbits import potential_values, theta_grid
from src.utils.parallel import chunked, parallel_map, resolve_workers

logger = logging.getLogger(__name__)

# Energies per vectorized block in lyapunov_curve
_BLOCK = 64


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.entries))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(self.entries @ other.entries)

    def __getitem__(self, index):
        return self.entries[index]


def transfer_step(energy: float, value: float) -> TransferMatrix:
    """One-step matrix [[E - v, -1], [1, 0]] (determinant exactly 1)."""
    return TransferMatrix(np.array([[energy - value, -1.0], [1.0, 0.0]]))


@dataclass(frozen=True)
class CocycleProduct:
    """M_k = exp(log_norm) * normalized, with ||normalized||_F = 1 for k >= 1."""
    normalized: np.ndarray
    log_norm: float
    steps: int

    @property
    def log_norm_total(self) -> float:
        """ln ||M_k||_F reconstructed from the accumulator."""
        return self.log_norm + float(np.log(np.linalg.norm(self.normalized)))

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.normalized) * np.exp(2.0 * self.log_norm))

    def matrix(self) -> np.ndarray:
        """The unscaled product (overflows for large k * gamma)."""
        return self.normalized * np.exp(self.log_norm)


@dataclass(frozen=True)
class LyapunovEstimate:
    energy: float
    gamma_hat: float
    k: int
    theta_samples: int
    stderr: float
    convergence: float = 0.0
    extrapolated: bool = False


def _require_cocycle(spec: OperatorSpec) -> None:
    if spec.geometry != "line":
        raise SpecError(f"transfer matrices exist for line geometry only, not {spec.geometry}")
    if spec.diagonal:
        raise SpecError("the diagonal limit has no transfer matrix")


def _products(spec: OperatorSpec, energies: np.ndarray, thetas: np.ndarray, k: int,
              checkpoints: Sequence[int] = ()) -> Tuple[np.ndarray, np.ndarray, Dict[int, np.ndarray]]:
    """Rescaled products for every (energy, theta) pair.

    Returns the normalized matrices with shape (nE, M, 2, 2), the log-norm
    accumulators (nE, M) and the accumulators at each checkpoint step.
    """
    shape = (energies.size, thetas.shape[0])
    p00, p11 = np.ones(shape), np.ones(shape)
    p01, p10 = np.zeros(shape), np.zeros(shape)
    accumulator = np.zeros(shape)
    recorded: Dict[int, np.ndarray] = {}
    wanted = set(checkpoints)
    e = energies[:, None]

    for n in range(k):
        a = e - potential_values(spec, thetas, n)[:, 0]
        p00, p01, p10, p11 = a * p00 - p10, a * p01 - p11, p00, p01
        scale = np.sqrt(p00 * p00 + p01 * p01 + p10 * p10 + p11 * p11)
        p00, p01, p10, p11 = p00 / scale, p01 / scale, p10 / scale, p11 / scale
        accumulator += np.log(scale)
        if n + 1 in wanted:
            recorded[n + 1] = accumulator.copy()

    matrices = np.stack([np.stack([p00, p01], axis=-1), np.stack([p10, p11], axis=-1)], axis=-2)
    return matrices, accumulator, recorded


def _totals(matrices: np.ndarray, accumulator: np.ndarray) -> np.ndarray:
    return accumulator + np.log(np.linalg.norm(matrices, axis=(-2, -1)))


def cocycle_product(spec: OperatorSpec, energy: float, k: int,
                    theta: Optional[Sequence[float]] = None) -> CocycleProduct:
    """M_k(theta, E) for the phase ``theta`` (default: the spec's phase)."""
    _require_cocycle(spec)
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    start = np.asarray(spec.phase if theta is None else theta, dtype=float).reshape(1, -1)
    matrices, accumulator, _ = _products(spec, np.array([float(energy)]), start, k)
    return CocycleProduct(matrices[0, 0], float(accumulator[0, 0]), k)


def _theta_average(spec: OperatorSpec, energies: np.ndarray, k: int, grid_size: int,
                   jitter: float, extrapolate: bool) -> List[LyapunovEstimate]:
    thetas = theta_grid(grid_size, spec.orbit.phase_dimension, jitter)
    half = max(k // 2, 1)
    matrices, accumulator, recorded = _products(spec, energies, thetas, k, checkpoints=(half,))
    gammas = _totals(matrices, accumulator) / k
    half_gammas = recorded[half] / half if k >= 2 else gammas

    estimates = []
    for i, energy in enumerate(energies):
        gamma_k = float(np.mean(gammas[i]))
        gamma_half = float(np.mean(half_gammas[i]))
        gamma = max(2.0 * gamma_k - gamma_half, 0.0) if extrapolate and k >= 2 else gamma_k
        estimates.append(LyapunovEstimate(
            energy=float(energy),
            gamma_hat=gamma,
            k=k,
            theta_samples=grid_size,
            stderr=float(np.std(gammas[i], ddof=1) / np.sqrt(grid_size)),
            convergence=abs(gamma_k - gamma_half),
            extrapolated=extrapolate and k >= 2,
        ))
    return estimates


def lyapunov_theta_avg(spec: OperatorSpec, energy: float, k: int, grid_size: int,
                       jitter: float = 0.0, extrapolate: bool = False) -> LyapunovEstimate:
    """(1/k) times the theta-average of ln ||M_k(theta, E)|| over an offset equispaced grid.

    ``extrapolate`` applies Richardson extrapolation 2 gamma_k - gamma_{k/2}
    from the same run.
    """
    _require_cocycle(spec)
    if grid_size < 2:
        raise DomainError(f"theta grid needs at least 2 points, got {grid_size}")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    return _theta_average(spec, np.array([float(energy)]), k, grid_size, jitter, extrapolate)[0]


def lyapunov_orbit(spec: OperatorSpec, energy: float, k: int) -> LyapunovEstimate:
    """(1/k) ln ||M_k(theta, E)|| along the single orbit of the spec's phase.

    ``stderr`` is the difference between the k and k/2 estimates.
    """
    _require_cocycle(spec)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    half = max(k // 2, 1)
    start = np.asarray(spec.phase, dtype=float).reshape(1, -1)
    matrices, accumulator, recorded = _products(spec, np.array([float(energy)]), start, k, checkpoints=(half,))
    gamma = float(_totals(matrices, accumulator)[0, 0]) / k
    spread = abs(gamma - float(recorded[half][0, 0]) / half) if k >= 2 else 0.0
    return LyapunovEstimate(float(energy), gamma, k, 1, spread, spread)


def _curve_block(energies: List[float], spec: OperatorSpec, k: int, grid_size: int,
                 jitter: float, extrapolate: bool) -> List[LyapunovEstimate]:
    return _theta_average(spec, np.asarray(energies, dtype=float), k, grid_size, jitter, extrapolate)


def lyapunov_curve(spec: OperatorSpec, energies: Sequence[float], k: int, grid_size: int,
                   workers: Optional[int] = None, jitter: float = 0.0,
                   extrapolate: bool = False) -> List[LyapunovEstimate]:
    """One theta-averaged estimate per energy, in input order."""
    _require_cocycle(spec)
    grid = [float(e) for e in energies]
    if not grid:
        raise DomainError("energy grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("energy grid must be sorted")
    if grid_size < 2:
        raise DomainError(f"theta grid needs at least 2 points, got {grid_size}")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")

    n_jobs = resolve_workers(workers)
    blocks = chunked(grid, max(n_jobs if n_jobs > 0 else 1, -(-len(grid) // _BLOCK)))
    logger.info("lyapunov curve: %d energies, k=%d, M=%d, %d blocks", len(grid), k, grid_size, len(blocks))
    task = partial(_curve_block, spec=spec, k=k, grid_size=grid_size, jitter=jitter, extrapolate=extrapolate)
    results = parallel_map(task, blocks, workers)
    return [estimate for block in results for estimate in block]
