"""
Finite sections, eigensolution and band spectra.

Finite Hamiltonians are kept in upper banded storage (the layout
``scipy.linalg.eig_banded`` expects) plus a short list of periodic
wrap-around bonds that fall outside the band. Sites are ordered so that
the long lattice direction varies slowest:

    line   index(n)        = n + N
    strip  index(n, s)     = (n + N) m + s           bandwidth m
    box    index(n1, n2)   = (n1 + N)(2N + 1) + n2 + N bandwidth 2N + 1

Periodic boundary conditions wrap the long direction only.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from src.core.arithmetic import continued_fraction, resolve_frequency
from src.core.config import LabConfig
from src.core.errors import DomainError, LabError, SizeLimitError, SpecError, UnsupportedSpectrumError
from src.core.models import FourierPotential, OperatorSpec
from src.core.orbits import box_potential, eval_potential, potential_sequence, theta_grid
from src.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("dirichlet", "periodic")

Wrap = Tuple[int, int, float]


@dataclass(frozen=True)
class FiniteHamiltonian:
    spec: OperatorSpec
    half_width: int
    bc: str
    shape: Tuple[int, ...]
    band: np.ndarray
    wrap: Tuple[Wrap, ...] = ()

    @property
    def dimension(self) -> int:
        return self.band.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    @property
    def diagonal(self) -> np.ndarray:
        return self.band[-1]

    def offdiagonal(self, offset: int) -> np.ndarray:
        """Entries H[i, i + offset] for 1 <= offset <= bandwidth."""
        return self.band[self.bandwidth - offset, offset:]

    @property
    def positions(self) -> np.ndarray:
        """Lattice coordinates of every site, shape (dimension, lattice dimension)."""
        n = np.arange(-self.half_width, self.half_width + 1)
        if self.spec.geometry == "line":
            return n[:, None]
        if self.spec.geometry == "strip":
            return np.repeat(n, self.spec.width)[:, None]
        n1, n2 = np.meshgrid(n, n, indexing="ij")
        return np.stack([n1.ravel(), n2.ravel()], axis=-1)

    def boundary_mask(self, fraction: Optional[float] = None) -> np.ndarray:
        """Sites within the outer ``fraction`` of the box in any lattice direction."""
        fraction = LabConfig.BOUNDARY_FRACTION if fraction is None else fraction
        margin = max(1, math.ceil(fraction * self.half_width))
        return np.any(np.abs(self.positions) > self.half_width - margin, axis=1)

    @property
    def norm_bound(self) -> float:
        """Upper bound on ||H|| from the maximum degree and the potential size."""
        return float(np.max(np.abs(self.diagonal))) + _degree(self.spec)

    def to_sparse(self) -> sp.csr_matrix:
        offsets = [0]
        diagonals = [self.diagonal]
        for d in range(1, self.bandwidth + 1):
            values = self.offdiagonal(d)
            if np.any(values):
                offsets += [d, -d]
                diagonals += [values, values]
        matrix = sp.diags(diagonals, offsets, shape=(self.dimension, self.dimension), format="lil")
        for i, j, value in self.wrap:
            matrix[i, j] += value
            if i != j:
                matrix[j, i] += value
        return matrix.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


@dataclass(frozen=True)
class SpectrumEstimate:
    """Point spectrum of a finite section, or band intervals of a periodic approximant."""
    kind: str
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    bands: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    box_size: Optional[int] = None
    boundary: Optional[str] = None
    thetas: Tuple[Tuple[float, ...], ...] = ()
    dimension: Optional[int] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("points", "bands"):
            raise SpecError(f"unknown spectrum kind {self.kind!r}")
        if self.kind == "points" and np.any(np.diff(self.eigenvalues) < 0):
            raise SpecError("eigenvalues must be sorted")

    @property
    def total_bandwidth(self) -> float:
        return float(np.sum(self.bands[:, 1] - self.bands[:, 0])) if len(self.bands) else 0.0

    @property
    def hull(self) -> Tuple[float, float]:
        if self.kind == "points":
            return float(self.eigenvalues[0]), float(self.eigenvalues[-1])
        return float(self.bands[0, 0]), float(self.bands[-1, 1])


def _degree(spec: OperatorSpec) -> int:
    if spec.diagonal:
        return 0
    if spec.geometry == "box":
        return 4
    if spec.geometry == "strip":
        return 2 + min(spec.width - 1, 2)
    return 2


def build_finite(spec: OperatorSpec, half_width: int, bc: str = "dirichlet") -> FiniteHamiltonian:
    """Finite section of H on [-N, N] in the long direction."""
    if half_width < 1:
        raise DomainError(f"box half-width must be >= 1, got {half_width}")
    if bc not in BOUNDARY_CONDITIONS:
        raise DomainError(f"unknown boundary condition {bc!r}; expected one of {BOUNDARY_CONDITIONS}")
    length = 2 * half_width + 1
    hop = 0.0 if spec.diagonal else 1.0
    sites = range(-half_width, half_width + 1)

    if spec.geometry == "line":
        shape: Tuple[int, ...] = (length,)
        band = np.zeros((2, length))
        band[1] = potential_sequence(spec, sites)
        band[0, 1:] = hop
        wrap = ((0, length - 1, hop),)
    elif spec.geometry == "strip":
        m = spec.width
        shape = (length, m)
        dim = length * m
        band = np.zeros((m + 1, dim))
        band[m] = potential_sequence(spec, sites).ravel()
        rungs = np.tile(np.r_[np.ones(m - 1), 0.0], length)[:-1] * hop
        band[m - 1, 1:] += rungs
        band[0, m:] += hop
        wrap = tuple(((length - 1) * m + s, s, hop) for s in range(m))
    else:
        shape = (length, length)
        dim = length * length
        band = np.zeros((length + 1, dim))
        band[length] = box_potential(spec, half_width).ravel()
        rows = np.tile(np.r_[np.ones(length - 1), 0.0], length)[:-1] * hop
        band[length - 1, 1:] += rows
        band[0, length:] += hop
        wrap = tuple(((length - 1) * length + j, j, hop) for j in range(length))

    if bc == "dirichlet" or spec.diagonal:
        wrap = ()
    return FiniteHamiltonian(spec, half_width, bc, shape, band, wrap)


def eigs(hamiltonian: FiniteHamiltonian,
         eigenvalues_only: bool = False) -> Tuple[SpectrumEstimate, Optional[np.ndarray]]:
    """Full symmetric eigensolution; eigenvectors are the columns of the second result."""
    cap = LabConfig.DIMENSION_CAP
    if hamiltonian.dimension > cap:
        raise SizeLimitError(f"dimension {hamiltonian.dimension} exceeds the cap of {cap}; "
                             "an iterative solver would be needed")
    vectors = None
    if not hamiltonian.wrap and hamiltonian.bandwidth == 1:
        if eigenvalues_only:
            values = la.eigh_tridiagonal(hamiltonian.diagonal, hamiltonian.offdiagonal(1), eigvals_only=True)
        else:
            values, vectors = la.eigh_tridiagonal(hamiltonian.diagonal, hamiltonian.offdiagonal(1))
    elif not hamiltonian.wrap:
        if eigenvalues_only:
            values = la.eig_banded(hamiltonian.band, eigvals_only=True)
        else:
            values, vectors = la.eig_banded(hamiltonian.band)
    elif eigenvalues_only:
        values = la.eigvalsh(hamiltonian.to_dense())
    else:
        values, vectors = la.eigh(hamiltonian.to_dense())

    spectrum = SpectrumEstimate(
        kind="points",
        eigenvalues=np.asarray(values),
        box_size=hamiltonian.half_width,
        boundary=hamiltonian.bc,
        thetas=(hamiltonian.spec.phase,),
        dimension=hamiltonian.dimension,
    )
    return spectrum, vectors


def eigenresiduals(hamiltonian: FiniteHamiltonian, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """||H v_j - E_j v_j|| for every eigenpair."""
    return np.linalg.norm(hamiltonian.to_sparse() @ vectors - vectors * values[None, :], axis=0)


def point_spectrum(spec: OperatorSpec, half_width: int, bc: str = "dirichlet",
                   thetas: Optional[np.ndarray] = None, workers: Optional[int] = None) -> SpectrumEstimate:
    """Union of finite-section eigenvalues over a set of phases."""
    phases = np.asarray([spec.phase] if thetas is None else thetas, dtype=float).reshape(-1, len(spec.phase))
    task = partial(_section_eigenvalues, spec=spec, half_width=half_width, bc=bc)
    values = parallel_map(task, [tuple(p) for p in phases], workers)
    return SpectrumEstimate(
        kind="points",
        eigenvalues=np.sort(np.concatenate(values)),
        box_size=half_width,
        boundary=bc,
        thetas=tuple(tuple(p) for p in phases),
        dimension=len(values[0]),
    )


def _section_eigenvalues(phase: Tuple[float, ...], spec: OperatorSpec, half_width: int, bc: str) -> np.ndarray:
    spectrum, _ = eigs(build_finite(spec.with_phase(*phase), half_width, bc), eigenvalues_only=True)
    return spectrum.eigenvalues


def ids(spectrum: SpectrumEstimate, energy: float) -> float:
    """Integrated density of states: fraction of eigenvalues <= energy."""
    if spectrum.kind != "points":
        raise UnsupportedSpectrumError("the integrated density of states needs a point spectrum")
    values = spectrum.eigenvalues
    if values.size == 0:
        return 0.0
    return float(np.searchsorted(values, energy, side="right")) / values.size


def spacing_ratio(spectrum: SpectrumEstimate) -> float:
    """Mean ratio of consecutive level spacings, min(s_i, s_{i+1}) / max(s_i, s_{i+1})."""
    if spectrum.kind != "points":
        raise UnsupportedSpectrumError("level statistics need a point spectrum")
    spacings = np.diff(spectrum.eigenvalues)
    tol = np.finfo(float).eps * max(1.0, float(np.max(np.abs(spectrum.eigenvalues)))) * 100
    left, right = spacings[:-1], spacings[1:]
    keep = (left > tol) & (right > tol)
    if not np.any(keep):
        return float("nan")
    return float(np.mean(np.minimum(left[keep], right[keep]) / np.maximum(left[keep], right[keep])))


# -- rational approximants -------------------------------------------------

def _trace(energies: np.ndarray, values: np.ndarray) -> np.ndarray:
    """tr M_q(E) for energies of shape (..., K) and one-period potentials of shape (..., q).

    Products are renormalized by powers of two every 16 steps; the
    exponent is restored at the end, so very large traces become +-inf
    rather than nan.
    """
    q = values.shape[-1]
    p00 = np.ones(energies.shape)
    p11 = np.ones(energies.shape)
    p01 = np.zeros(energies.shape)
    p10 = np.zeros(energies.shape)
    exponent = np.zeros(energies.shape, dtype=np.int64)
    for n in range(q):
        a = energies - values[..., n:n + 1]
        p00, p01, p10, p11 = a * p00 - p10, a * p01 - p11, p00, p01
        if n % 16 == 15:
            largest = np.maximum(np.maximum(np.abs(p00), np.abs(p01)), np.maximum(np.abs(p10), np.abs(p11)))
            _, shift = np.frexp(largest)
            p00, p01, p10, p11 = (np.ldexp(x, -shift) for x in (p00, p01, p10, p11))
            exponent += shift
    with np.errstate(over="ignore"):
        return np.ldexp(p00 + p11, exponent)


def _chebyshev_mesh(lo: float, hi: float, points: int) -> np.ndarray:
    nodes = np.cos(np.pi * np.arange(points) / (points - 1))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes


def _bracket_roots(mesh: np.ndarray, traces: np.ndarray, level: float):
    g = traces - level
    crossing = (g[:, :-1] * g[:, 1:] < 0) | (g[:, :-1] == 0)
    rows, cols = np.nonzero(crossing)
    return rows, mesh[cols], mesh[cols + 1]


def _bisect(values: np.ndarray, rows: np.ndarray, lo: np.ndarray, hi: np.ndarray, level: float,
            tol: float) -> np.ndarray:
    if rows.size == 0:
        return lo
    width = float(np.max(hi - lo))
    iterations = max(1, int(math.ceil(math.log2(max(width, tol) / tol))) + 1)
    v = values[rows]
    g_lo = _trace(lo[:, None], v)[:, 0] - level
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        g_mid = _trace(mid[:, None], v)[:, 0] - level
        left = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(left, mid, lo)
        g_lo = np.where(left, g_mid, g_lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _merge(intervals: List[Tuple[float, float]], tol: float = 1e-12) -> np.ndarray:
    if not intervals:
        return np.empty((0, 2))
    ordered = sorted(intervals)
    merged = [list(ordered[0])]
    for lo, hi in ordered[1:]:
        if lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return np.asarray(merged, dtype=float)


def rational_band_spectrum(coupling: float, f: FourierPotential, p: int, q: int,
                           thetas: Sequence[float]) -> SpectrumEstimate:
    """Bands {E : |tr M_q(theta, E)| <= 2} of the q-periodic operator, united over ``thetas``.

    Band edges are the roots of tr M_q = +-2, bracketed on a Chebyshev
    mesh over the norm-bound interval (refined until 2q roots are found
    or the refinement budget runs out) and then bisected.
    """
    if f.dimension != 1:
        raise SpecError("band spectra need a one-dimensional potential")
    if q < 1 or math.gcd(p, q) != 1:
        raise DomainError(f"{p}/{q} is not a reduced fraction")
    if q > LabConfig.MAX_BAND_DENOMINATOR:
        raise SizeLimitError(f"denominator {q} exceeds {LabConfig.MAX_BAND_DENOMINATOR}")
    phases = np.mod(np.asarray(thetas, dtype=float).ravel(), 1.0)
    if phases.size < 1:
        raise DomainError("theta grid must not be empty")

    n = np.arange(q)
    values = coupling * np.asarray(eval_potential(f, np.mod(phases[:, None] + n[None, :] * p / q, 1.0)))
    values = values.reshape(phases.size, q)
    reach = 2.0 + coupling * f.sup_bound + 0.5
    tol = LabConfig.BISECTION_TOL

    points = 4 * q + 1
    for _ in range(5):
        mesh = _chebyshev_mesh(-reach, reach, points)
        traces = _trace(np.broadcast_to(mesh, (phases.size, points)), values)
        upper = _bracket_roots(mesh, traces, 2.0)
        lower = _bracket_roots(mesh, traces, -2.0)
        found = np.bincount(np.r_[upper[0], lower[0]], minlength=phases.size)
        if np.all(found >= 2 * q):
            break
        points = 2 * points - 1

    roots = [_bisect(values, *upper, 2.0, tol), _bisect(values, *lower, -2.0, tol)]
    owners = np.r_[upper[0], lower[0]]
    every_root = np.r_[roots[0], roots[1]]

    intervals: List[Tuple[float, float]] = []
    flags: List[str] = []
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    for row in range(phases.size):
        edges = np.sort(every_root[owners == row])
        if edges.size < 2:
            continue
        probes = edges[:-1] + golden * np.diff(edges)
        inside = np.abs(_trace(probes[None, :], values[row:row + 1])[0]) <= 2.0 + 1e-9
        pieces = _merge([(edges[i], edges[i + 1]) for i in np.nonzero(inside)[0]])
        if len(pieces) < q:
            flags.append(f"touching:theta={phases[row]:.6g}:bands={len(pieces)}")
        intervals.extend((float(lo), float(hi)) for lo, hi in pieces)

    return SpectrumEstimate(
        kind="bands",
        bands=_merge(intervals),
        thetas=tuple((float(t),) for t in phases),
        flags=tuple(flags),
    )


@dataclass(frozen=True)
class ButterflyRow:
    p: int
    q: int
    bands: np.ndarray
    flags: Tuple[str, ...] = ()
    error: Optional[str] = None

    @property
    def omega(self) -> Fraction:
        return Fraction(self.p, self.q)


def _butterfly_row(fraction: Tuple[int, int], coupling: float, f: FourierPotential,
                   thetas: Tuple[float, ...]) -> ButterflyRow:
    p, q = fraction
    try:
        spectrum = rational_band_spectrum(coupling, f, p, q, thetas)
    except LabError as exc:
        logger.warning("band spectrum for %d/%d failed: %s", p, q, exc)
        return ButterflyRow(p, q, np.empty((0, 2)), error=str(exc))
    return ButterflyRow(p, q, spectrum.bands, spectrum.flags)


def rationals(q_max: int) -> List[Tuple[int, int]]:
    """All reduced p/q in [0, 1] with q <= q_max, ordered by q then p."""
    return [(p, q) for q in range(1, q_max + 1) for p in range(q + 1) if math.gcd(p, q) == 1]


def butterfly(coupling: float, f: FourierPotential, q_max: Optional[int] = None,
              thetas: Sequence[float] = (0.0,), workers: Optional[int] = None) -> List[ButterflyRow]:
    """Band spectra for every reduced p/q with q <= q_max; failures are recorded per row."""
    q_max = LabConfig.BUTTERFLY_Q_MAX if q_max is None else q_max
    if q_max < 1:
        raise DomainError(f"q_max must be >= 1, got {q_max}")
    task = partial(_butterfly_row, coupling=coupling, f=f, thetas=tuple(float(t) for t in thetas))
    return parallel_map(task, rationals(q_max), workers)


def butterfly_rows(table: Sequence[ButterflyRow]) -> List[Dict[str, float]]:
    """Flatten a butterfly table into (p, q, band_lo, band_hi) records."""
    return [{"p": row.p, "q": row.q, "band_lo": float(lo), "band_hi": float(hi)}
            for row in table for lo, hi in row.bands]


# -- duality ---------------------------------------------------------------

@dataclass(frozen=True)
class DualityReport:
    coupling: float
    dual_coupling: float
    scale: float
    scaled_distance: float
    best_fit_scale: float
    validation_distance: float
    validated: bool
    N: int
    samples: int
    boundary: str
    period: Optional[int] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "lambda": self.coupling,
            "dual_lambda": self.dual_coupling,
            "scale": self.scale,
            "scaled_distance": self.scaled_distance,
            "best_fit_scale": self.best_fit_scale,
            "validation_distance": self.validation_distance,
            "validated": self.validated,
            "N": self.N,
            "samples": self.samples,
            "boundary": self.boundary,
            "period": self.period,
        }


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point sets on the line."""
    a = np.asarray(a, dtype=float).reshape(-1, 1)
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))


def _cell_eigenvalues(theta: float, coupling: float, p: int, q: int) -> np.ndarray:
    """Eigenvalues of the q-periodic cell at quasimomentum 0 and pi (the band edges)."""
    values = coupling * np.cos(2.0 * np.pi * (theta + np.arange(q) * p / q))
    spectra = []
    for sign in (1.0, -1.0):
        cell = np.diag(values)
        idx = np.arange(q - 1)
        cell[idx, idx + 1] += 1.0
        cell[idx + 1, idx] += 1.0
        cell[q - 1, 0] += sign
        cell[0, q - 1] += sign
        spectra.append(la.eigvalsh(cell))
    return np.concatenate(spectra)


def _duality_cloud(coupling: float, omega: float, half_width: int, thetas: np.ndarray, boundary: str,
                   workers: Optional[int]) -> Tuple[np.ndarray, Optional[int]]:
    if boundary == "approximant":
        if not 0.0 < omega < 1.0:
            raise DomainError(f"omega must lie in (0, 1), got {omega}")
        approximant = continued_fraction(omega, 60).best_denominator(2 * half_width + 1)
        p, q = approximant.numerator, approximant.denominator
        task = partial(_cell_eigenvalues, coupling=coupling, p=p, q=q)
        clouds = parallel_map(task, [float(t) for t in thetas], workers)
        return np.sort(np.concatenate(clouds)), q
    if boundary == "both":
        spec = OperatorSpec.almost_mathieu(coupling, omega)
        phases = thetas.reshape(-1, 1)
        clouds = [point_spectrum(spec, half_width, bc, phases, workers).eigenvalues for bc in BOUNDARY_CONDITIONS]
        return np.sort(np.concatenate(clouds)), None
    raise DomainError(f"unknown duality boundary mode {boundary!r}")


def _best_scale(reference: np.ndarray, dual: np.ndarray, guess: float) -> float:
    scales = guess * np.geomspace(0.25, 4.0, 161)
    distances = np.array([hausdorff(reference, s * dual) for s in scales])
    i = int(np.argmin(distances))
    lo, hi = scales[max(i - 1, 0)], scales[min(i + 1, len(scales) - 1)]
    if hi <= lo:
        return float(scales[i])
    result = minimize_scalar(lambda s: hausdorff(reference, s * dual), bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-6 * guess})
    return float(result.x) if result.fun <= distances[i] else float(scales[i])


def duality_check(coupling: float, omega: float, half_width: int, theta_samples: int,
                  boundary: str = "approximant", validation_size: int = 200,
                  workers: Optional[int] = None) -> DualityReport:
    """Hausdorff distance between sigma(H_lambda) and (lambda/2) sigma(H_{4/lambda}).

    The energy scale lambda/2 is first checked by a brute-force scan of
    scale factors at ``validation_size``; the best-fit factor is reported.

    ``boundary="approximant"`` compares band edges of the periodic
    approximant cells and is the mode the check is meant to pass in.
    ``boundary="both"`` unites Dirichlet and periodic finite sections; its
    Dirichlet edge states sit inside the spectral gaps, so it is a
    diagnostic of that pollution and normally comes back unvalidated away
    from lambda = 2.
    """
    if not coupling > 0:
        raise DomainError("duality needs lambda > 0 (the dual coupling 4/lambda is infinite)")
    if theta_samples < 1:
        raise DomainError("at least one theta sample is required")
    omega = resolve_frequency(omega)
    dual = 4.0 / coupling
    scale = coupling / 2.0
    thetas = theta_grid(theta_samples)[:, 0]

    probe = theta_grid(min(theta_samples, 8))[:, 0]
    reference, _ = _duality_cloud(coupling, omega, validation_size, probe, boundary, workers)
    partner, _ = _duality_cloud(dual, omega, validation_size, probe, boundary, workers)
    best = _best_scale(reference, partner, scale)
    validation_distance = hausdorff(reference, scale * partner)
    validated = abs(best / scale - 1.0) < 0.02
    if not validated:
        logger.warning("duality scale validation: best fit %.6g differs from lambda/2 = %.6g", best, scale)

    reference, period = _duality_cloud(coupling, omega, half_width, thetas, boundary, workers)
    partner, _ = _duality_cloud(dual, omega, half_width, thetas, boundary, workers)
    distance = hausdorff(reference, scale * partner)
    logger.info("duality lambda=%g: distance %.3g (best-fit scale %.6g)", coupling, distance, best)
    return DualityReport(coupling, dual, scale, distance, best, validation_distance, validated,
                         half_width, theta_samples, boundary, period)
