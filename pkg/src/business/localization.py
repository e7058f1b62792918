"""
Eigenfunction localization diagnostics.

Decay rates are fitted on ln|psi| against the distance from the
localization center, separately on each side, and the two slopes are
averaged. On a strip the amplitude of a slice n is the l2 norm over its
m sites; 2D boxes get inverse participation ratios only.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from src.business.cocycle import lyapunov_curve
from src.business.spectra import build_finite, eigs
from src.core.config import LabConfig
from src.core.errors import DomainError, SpecError
from src.core.models import OperatorSpec
from src.utils.parallel import parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenfunctionProfile:
    energy: float
    center: int
    decay_rate: float
    fit_r2: float
    ipr: float
    flags: Tuple[str, ...] = ()


def _fit_side(distance: np.ndarray, log_amplitude: np.ndarray) -> Optional[Tuple[float, float]]:
    if distance.size < 3:
        return None
    fit = linregress(distance, log_amplitude)
    r2 = float(np.nan_to_num(fit.rvalue) ** 2)
    return -float(fit.slope), r2


def profile(psi: np.ndarray, energy: float, positions: Optional[np.ndarray] = None,
            edge_margin: Optional[int] = None) -> EigenfunctionProfile:
    """Localization diagnostics of one normalized eigenvector.

    ``positions`` gives the long-direction coordinate of every entry of
    ``psi`` (default: a line centred on 0). The fit walks outward from the
    center on each side until the amplitude drops below
    ``LabConfig.AMPLITUDE_FLOOR`` or the edge margin is reached.
    """
    psi = np.asarray(psi)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-10:
        raise DomainError(f"profile needs a normalized vector, got norm {norm!r}")
    if positions is None:
        half = (psi.size - 1) // 2
        positions = np.arange(-half, psi.size - half)
    positions = np.asarray(positions).reshape(psi.size)

    weights = np.abs(psi) ** 2
    ipr = float(np.sum(weights * weights))

    low = int(positions.min())
    slices = np.sqrt(np.bincount(positions - low, weights=weights))
    sites = np.arange(slices.size) + low
    half_width = (slices.size - 1) // 2
    margin = max(5, half_width // 100) if edge_margin is None else edge_margin

    peak = int(np.argmax(slices))
    center = int(sites[peak])
    floor = LabConfig.AMPLITUDE_FLOOR
    usable = (slices > floor) & (np.arange(slices.size) >= margin) & (np.arange(slices.size) < slices.size - margin)

    fits = []
    for step in (1, -1):
        stop = slices.size if step == 1 else -1
        idx = [peak]
        for i in range(peak + step, stop, step):
            if not usable[i]:
                break
            idx.append(i)
        idx = np.asarray(idx)
        fit = _fit_side(np.abs(sites[idx] - center).astype(float), np.log(slices[idx]))
        if fit is not None:
            fits.append(fit)

    if not fits:
        return EigenfunctionProfile(float(energy), center, 0.0, 0.0, ipr, ("no_tail",))
    decay = max(float(np.mean([f[0] for f in fits])), 0.0)
    r2 = float(np.mean([f[1] for f in fits]))
    return EigenfunctionProfile(float(energy), center, decay, r2, ipr)


@dataclass(frozen=True)
class StateRecord:
    index: int
    profile: EigenfunctionProfile
    interior: bool
    localized: bool

    def to_dict(self) -> Dict[str, object]:
        p = self.profile
        return {
            "index": self.index,
            "E": p.energy,
            "center": p.center,
            "decay_rate": p.decay_rate,
            "fit_r2": p.fit_r2,
            "ipr": p.ipr,
            "interior": self.interior,
            "localized": self.localized,
        }


@dataclass(frozen=True)
class LocalizationReport:
    N: int
    window: Tuple[float, float]
    threshold: float
    states: Tuple[StateRecord, ...] = ()
    ipr_only: bool = False
    phase: Tuple[float, ...] = ()

    @property
    def interior_states(self) -> List[StateRecord]:
        return [s for s in self.states if s.interior]

    @property
    def fraction_localized(self) -> Optional[float]:
        """Share of interior states classified localized (None when undefined)."""
        interior = self.interior_states
        if self.ipr_only or not interior:
            return None if self.ipr_only else 0.0
        return sum(s.localized for s in interior) / len(interior)

    @property
    def mean_decay(self) -> Optional[float]:
        interior = self.interior_states
        if self.ipr_only or not interior:
            return None
        return float(np.mean([s.profile.decay_rate for s in interior]))

    @property
    def mean_ipr(self) -> Optional[float]:
        if not self.states:
            return None
        return float(np.mean([s.profile.ipr for s in self.states]))

    def rows(self) -> List[Dict[str, object]]:
        return [s.to_dict() for s in self.states]

    def summary(self) -> Dict[str, object]:
        return {
            "N": self.N,
            "window": list(self.window),
            "threshold": self.threshold,
            "states": len(self.states),
            "interior_states": len(self.interior_states),
            "fraction_localized": self.fraction_localized,
            "mean_decay": self.mean_decay,
            "mean_ipr": self.mean_ipr,
            "ipr_only": self.ipr_only,
        }


def _profile_columns(columns: Tuple[np.ndarray, np.ndarray], positions: np.ndarray,
                     margin: int) -> List[EigenfunctionProfile]:
    energies, vectors = columns
    return [profile(vectors[:, j], energies[j], positions, margin) for j in range(len(energies))]


def _ipr_profiles(energies: np.ndarray, vectors: np.ndarray) -> List[EigenfunctionProfile]:
    # center is the flattened site index on a box
    weights = np.abs(vectors) ** 2
    iprs = np.sum(weights * weights, axis=0)
    peaks = np.argmax(weights, axis=0)
    return [EigenfunctionProfile(float(e), int(p), 0.0, 0.0, float(ipr), ("ipr_only",))
            for e, p, ipr in zip(energies, peaks, iprs)]


def localization_report(spec: OperatorSpec, N: int, energy_window: Optional[Sequence[float]] = None,
                        threshold: Optional[float] = None, edge_distance: Optional[int] = None,
                        min_r2: Optional[float] = None, workers: Optional[int] = None) -> LocalizationReport:
    """Profile every eigenstate of the Dirichlet section with energy in ``energy_window``.

    A state is localized when its decay rate exceeds ``threshold``, its
    fit r^2 exceeds ``min_r2`` and its center lies at least
    ``edge_distance`` sites from the box edge (an interior state).
    """
    threshold = LabConfig.LOCALIZATION_THRESHOLD if threshold is None else threshold
    edge_distance = LabConfig.LOCALIZATION_EDGE_DISTANCE if edge_distance is None else edge_distance
    min_r2 = LabConfig.LOCALIZATION_MIN_R2 if min_r2 is None else min_r2
    if energy_window is not None:
        lo, hi = (float(x) for x in energy_window)
        if hi < lo:
            raise DomainError(f"energy window is reversed: [{lo}, {hi}]")
    else:
        lo, hi = -np.inf, np.inf

    hamiltonian = build_finite(spec, N)
    spectrum, vectors = eigs(hamiltonian)
    chosen = np.nonzero((spectrum.eigenvalues >= lo) & (spectrum.eigenvalues <= hi))[0]
    window = (float(lo), float(hi))
    if chosen.size == 0:
        logger.info("energy window [%g, %g] holds no eigenvalues", lo, hi)
        return LocalizationReport(N, window, threshold, ipr_only=spec.geometry == "box", phase=spec.phase)

    energies = spectrum.eigenvalues[chosen]
    selected = vectors[:, chosen]

    if spec.geometry == "box":
        profiles = _ipr_profiles(energies, selected)
        reach = np.max(np.abs(hamiltonian.positions), axis=1)
        states = tuple(StateRecord(int(i), p, bool(reach[p.center] <= N - edge_distance), False)
                       for i, p in zip(chosen, profiles))
        return LocalizationReport(N, window, threshold, states, ipr_only=True, phase=spec.phase)

    positions = hamiltonian.positions[:, 0]
    margin = max(5, N // 100)
    pieces = np.array_split(np.arange(chosen.size), max(1, min(chosen.size, 16)))
    task = partial(_profile_columns, positions=positions, margin=margin)
    batches = parallel_map(task, [(energies[p], selected[:, p]) for p in pieces], workers, prefer="threads")
    profiles = [item for batch in batches for item in batch]

    states = []
    for i, p in zip(chosen, profiles):
        interior = abs(p.center) <= N - edge_distance
        localized = p.decay_rate > threshold and p.fit_r2 > min_r2 and interior
        states.append(StateRecord(int(i), p, interior, localized))
    report = LocalizationReport(N, window, threshold, tuple(states), phase=spec.phase)
    logger.info("localization N=%d: %d states, %d interior, fraction localized %s",
                N, len(states), len(report.interior_states), report.fraction_localized)
    return report


@dataclass(frozen=True)
class DecayComparison:
    energy: float
    decay_rate: float
    gamma_hat: float

    @property
    def relative_gap(self) -> float:
        return abs(self.decay_rate - self.gamma_hat) / self.gamma_hat if self.gamma_hat > 0 else float("inf")

    def to_dict(self) -> Dict[str, float]:
        return {"E": self.energy, "decay_rate": self.decay_rate, "gamma_hat": self.gamma_hat,
                "relative_gap": self.relative_gap}


def decay_vs_lyapunov(spec: OperatorSpec, N: int, sample_count: int, k: int = 1000, grid_size: int = 64,
                      workers: Optional[int] = None, report: Optional[LocalizationReport] = None
                      ) -> List[DecayComparison]:
    """Fitted decay rates of sampled localized states next to gamma at the same energy."""
    if spec.geometry != "line":
        raise SpecError("decay_vs_lyapunov needs line geometry")
    if sample_count < 1:
        raise DomainError(f"sample_count must be positive, got {sample_count}")
    report = report or localization_report(spec, N, workers=workers)
    localized = [s.profile for s in report.states if s.localized]
    if not localized:
        return []
    picks = np.unique(np.linspace(0, len(localized) - 1, min(sample_count, len(localized))).round().astype(int))
    sampled = [localized[i] for i in picks]
    estimates = lyapunov_curve(spec, [p.energy for p in sampled], k, grid_size, workers)
    return [DecayComparison(p.energy, p.decay_rate, e.gamma_hat) for p, e in zip(sampled, estimates)]


@dataclass(frozen=True)
class PhaseScan:
    thetas: Tuple[Tuple[float, ...], ...]
    reports: Tuple[LocalizationReport, ...]
    spread: float
    flagged: bool
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def rows(self) -> List[Dict[str, object]]:
        return [{"theta": list(t), **r.summary()} for t, r in zip(self.thetas, self.reports)]


def phase_scan(spec: OperatorSpec, N: int, thetas: Sequence[Sequence[float]],
               **options) -> PhaseScan:
    """localization_report for each phase; the relative spread of mean decays is flagged, never averaged away."""
    phases = tuple(tuple(float(x) for x in np.atleast_1d(t)) for t in thetas)
    if not phases:
        raise DomainError("phase_scan needs at least one phase")
    reports = tuple(localization_report(spec.with_phase(*t), N, **options) for t in phases)
    decays = np.array([r.mean_decay for r in reports if r.mean_decay is not None])
    spread = float((decays.max() - decays.min()) / decays.mean()) if decays.size and decays.mean() > 0 else 0.0
    flagged = spread > LabConfig.PHASE_SPREAD_LIMIT
    if flagged:
        logger.warning("mean decay rate varies by %.0f%% across %d phases", 100 * spread, len(phases))
    return PhaseScan(phases, reports, spread, flagged, ("phase_spread",) if flagged else ())
