"""
Closed-form oracles used to check the numerical kernels.
"""
import math
from typing import List, Sequence, Tuple

import numpy as np


def constant_cocycle_exponent(energy: float, value: float = 0.0) -> float:
    """Log spectral radius of [[E - c, -1], [1, 0]]: acosh(|E - c| / 2) outside the band, 0 inside."""
    x = abs(energy - value) / 2.0
    return math.acosh(x) if x > 1.0 else 0.0


def free_dirichlet_eigenvalues(N: int) -> np.ndarray:
    """2 cos(pi j / (L + 1)), j = 1..L, for the free chain of L = 2N + 1 sites, sorted."""
    length = 2 * N + 1
    j = np.arange(1, length + 1)
    return np.sort(2.0 * np.cos(np.pi * j / (length + 1)))


def free_second_moment(t: float) -> float:
    """sum_n n^2 |J_n(2t)|^2 = 2 t^2 on the infinite lattice."""
    return 2.0 * t * t


def bloch_bands_half(coupling: float, thetas: Sequence[float]) -> List[Tuple[float, float]]:
    """Band intervals of the omega = 1/2 almost Mathieu operator for each theta.

    With v = lambda cos 2 pi theta the potential alternates +v, -v and
    E^2 = v^2 + 2 + 2 cos k, so the bands are +-[|v|, sqrt(v^2 + 4)].
    """
    bands = []
    for theta in thetas:
        v = abs(coupling * math.cos(2.0 * math.pi * theta))
        top = math.sqrt(v * v + 4.0)
        bands += [(-top, -v), (v, top)]
    return bands


def merge_intervals(intervals: Sequence[Tuple[float, float]], tol: float = 1e-12) -> np.ndarray:
    ordered = sorted(intervals)
    merged = [list(ordered[0])]
    for lo, hi in ordered[1:]:
        if lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return np.asarray(merged)


def circular_distance(a, b) -> np.ndarray:
    """Distance on the circle R/Z."""
    d = np.mod(np.asarray(a) - np.asarray(b), 1.0)
    return np.minimum(d, 1.0 - d)


def normalized(vector) -> np.ndarray:
    vector = np.asarray(vector, dtype=complex if np.iscomplexobj(vector) else float)
    return vector / np.linalg.norm(vector)
