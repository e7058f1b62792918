"""
Potential evaluation along orbits.

Every orbit is evaluated in closed form from the initial point, so
round-off does not accumulate with the site index. Torus points are
arrays whose last axis is the torus dimension, reduced to [0, 1).
"""
from typing import Iterable, Union

import numpy as np

from src.core.arithmetic import GOLDEN
from src.core.errors import DomainError, SpecError
from src.core.models import FourierPotential, OperatorSpec, OrbitGenerator

ArrayLike = Union[float, Iterable[float], np.ndarray]

# Fractional parts of sqrt(2), sqrt(3), sqrt(5), ... drive the extra
# coordinates of multi-dimensional theta grids.
_KRONECKER = np.sqrt(np.array([2.0, 3.0, 5.0, 7.0, 11.0, 13.0])) % 1.0


def _as_points(f: FourierPotential, theta: ArrayLike) -> np.ndarray:
    points = np.asarray(theta, dtype=float)
    if f.dimension == 1:
        return points[..., None]
    if points.shape[-1:] != (f.dimension,):
        raise DomainError(f"points must have last axis {f.dimension}, got shape {points.shape}")
    return points


def evaluate_complex(f: FourierPotential, theta: ArrayLike) -> np.ndarray:
    """sum_k c_k exp(2 pi i k.theta) without discarding the imaginary part."""
    points = _as_points(f, theta)
    phases = 2.0 * np.pi * points @ f.indices.T
    return np.exp(1j * phases) @ f.amplitudes


def eval_potential(f: FourierPotential, theta: ArrayLike) -> Union[float, np.ndarray]:
    """f(theta); a scalar for a single point, an array for a batch."""
    values = evaluate_complex(f, np.mod(theta, 1.0)).real
    if values.ndim == 0:
        return float(values)
    return values


def orbit_phases(g: OrbitGenerator, theta0: ArrayLike, n: ArrayLike) -> np.ndarray:
    """Torus points of the orbit of ``theta0`` at site(s) ``n``.

    ``theta0`` has last axis ``g.phase_dimension``; the result has shape
    broadcast(theta0.shape[:-1], n.shape) + (phase_dimension,).
    """
    start = np.atleast_1d(np.asarray(theta0, dtype=float))
    if start.shape[-1] != g.phase_dimension:
        raise DomainError(f"{g.kind} orbit needs a point of dimension {g.phase_dimension}, "
                          f"got shape {start.shape}")
    sites = np.asarray(n)
    if not np.issubdtype(sites.dtype, np.integer):
        rounded = np.rint(sites)
        if not np.array_equal(rounded, sites):
            raise DomainError("orbit sites must be integers")
        sites = rounded.astype(np.int64)
    sites = sites.astype(np.int64)[..., None]

    if g.kind == "shift":
        omega = np.asarray(g.omega, dtype=float)
        return np.mod(np.mod(sites * omega, 1.0) + start, 1.0)

    if g.kind == "skew":
        omega = g.omega[0]
        x1, x2 = start[..., 0:1], start[..., 1:2]
        triangle = sites * (sites - 1) // 2
        first = np.mod(x1 + np.mod(sites * omega, 1.0), 1.0)
        second = np.mod(x2 + np.mod(sites * x1, 1.0) + np.mod(triangle * omega, 1.0), 1.0)
        return np.concatenate(np.broadcast_arrays(first, second), axis=-1)

    if np.any(sites < 0):
        raise DomainError("monomial phase is defined for n >= 0 only")
    return np.mod(np.power(sites.astype(float), g.sigma) * g.alpha + start, 1.0)


def orbit_phase(g: OrbitGenerator, theta0: ArrayLike, n: int) -> np.ndarray:
    """Single torus point T^n theta0."""
    return orbit_phases(g, theta0, np.int64(n))


def potential_argument(g: OrbitGenerator, phases: np.ndarray) -> np.ndarray:
    """The part of the orbit point the potential reads."""
    if g.kind == "skew":
        return phases[..., 1]
    if g.phase_dimension == 1:
        return phases[..., 0]
    return phases


def potential_values(spec: OperatorSpec, thetas: ArrayLike, n: ArrayLike) -> np.ndarray:
    """lambda f_s(T^n theta) for a batch of initial phases.

    Returns shape broadcast(thetas.shape[:-1], n.shape) + (width,).
    """
    phases = orbit_phases(spec.orbit, thetas, n)
    argument = potential_argument(spec.orbit, phases)
    return np.stack([spec.coupling * np.asarray(eval_potential(f, argument)) for f in spec.potentials], axis=-1)


def potential_sequence(spec: OperatorSpec, n_range: Iterable[int]) -> np.ndarray:
    """V_n for n in ``n_range``: shape (len,) on a line, (len, m) on a strip."""
    if spec.geometry == "box":
        raise SpecError("potential_sequence is defined for line and strip geometries; use box_potential")
    sites = np.asarray(list(n_range), dtype=np.int64)
    values = potential_values(spec, spec.phase, sites)
    if spec.geometry == "line":
        return values[..., 0]
    return values


def box_potential(spec: OperatorSpec, half_width: int) -> np.ndarray:
    """V_(n1,n2) = lambda f(n1 w1 + theta1, n2 w2 + theta2) on [-N, N]^2."""
    if spec.geometry != "box":
        raise SpecError("box_potential needs box geometry")
    sites = np.arange(-half_width, half_width + 1)
    omega = spec.frequency.array
    theta = np.asarray(spec.phase)
    first = np.mod(sites * omega[0] + theta[0], 1.0)
    second = np.mod(sites * omega[1] + theta[1], 1.0)
    grid = np.stack(np.meshgrid(first, second, indexing="ij"), axis=-1)
    return spec.coupling * eval_potential(spec.potential, grid)


def theta_grid(size: int, dimension: int = 1, jitter: float = 0.0) -> np.ndarray:
    """Equispaced phases offset by 1/(2M) + golden * 1e-3, shape (M, dimension).

    Extra coordinates follow a Kronecker sequence so the grid covers the
    torus without lining up with common test frequencies.
    """
    if size < 1:
        raise DomainError(f"theta grid needs at least one point, got {size}")
    j = np.arange(size, dtype=float)
    columns = [np.mod((j + 0.5) / size + GOLDEN * 1e-3 + jitter, 1.0)]
    for i in range(1, dimension):
        columns.append(np.mod(j * _KRONECKER[(i - 1) % len(_KRONECKER)] + 0.5 / size, 1.0))
    return np.stack(columns, axis=-1)
