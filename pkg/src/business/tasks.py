"""
Sweep task registry - maps task names to summary functions without CLI dependencies.

Every task takes a spec and an options mapping and returns a flat
dictionary of summary scalars plus a flag for conditions that should be
reported but not treated as failures.
"""
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np

from src.business.cocycle import lyapunov_curve
from src.business.dynamics import evolve, moments, time_grid, transport_exponent
from src.business.kickedrotor import rotor_run
from src.business.localization import localization_report
from src.business.spectra import ids, point_spectrum, spacing_ratio
from src.core.errors import ConfigError, FitRefusedError
from src.core.models import AnySpec, KickedRotorSpec, OperatorSpec
from src.core.orbits import theta_grid

logger = logging.getLogger(__name__)


@dataclass
class TaskOutcome:
    """Summary scalars of one task run."""
    summary: Dict[str, Any]
    flagged: bool = False


def _grid_jitter(options: Mapping[str, Any], size: int) -> float:
    # jitter is given as a fraction of the theta-grid spacing
    return float(options.get("jitter", 0.0)) / size


def _energies(options: Mapping[str, Any]) -> np.ndarray:
    if "energy" in options:
        return np.array([float(options["energy"])])
    if "energies" in options:
        return np.sort(np.asarray(options["energies"], dtype=float))
    return np.linspace(float(options.get("emin", -3.0)), float(options.get("emax", 3.0)),
                       int(options.get("epoints", 61)))


def lyapunov_task(spec: OperatorSpec, options: Mapping[str, Any]) -> TaskOutcome:
    grid_size = int(options.get("theta_grid", 64))
    estimates = lyapunov_curve(spec, _energies(options), int(options.get("k", 1000)), grid_size,
                               workers=1, jitter=_grid_jitter(options, grid_size),
                               extrapolate=bool(options.get("extrapolate", False)))
    gammas = np.array([e.gamma_hat for e in estimates])
    return TaskOutcome({
        "gamma": float(gammas.mean()),
        "gamma_min": float(gammas.min()),
        "gamma_max": float(gammas.max()),
        "stderr_max": float(max(e.stderr for e in estimates)),
    })


def spectrum_task(spec: OperatorSpec, options: Mapping[str, Any]) -> TaskOutcome:
    samples = int(options.get("theta_samples", 1))
    thetas = None
    if samples > 1:
        thetas = theta_grid(samples, len(spec.phase), _grid_jitter(options, samples))
    spectrum = point_spectrum(spec, int(options.get("N", 200)), options.get("bc", "dirichlet"), thetas, workers=1)
    low, high = spectrum.hull
    return TaskOutcome({
        "e_min": low,
        "e_max": high,
        "levels": int(spectrum.eigenvalues.size),
        "ids_at_zero": ids(spectrum, 0.0),
        "spacing_ratio": spacing_ratio(spectrum),
    })


def localize_task(spec: OperatorSpec, options: Mapping[str, Any]) -> TaskOutcome:
    report = localization_report(spec, int(options.get("N", 500)), options.get("window"),
                                 options.get("threshold"), options.get("edge_distance"), workers=1)
    summary = report.summary()
    return TaskOutcome({key: summary[key] for key in
                        ("fraction_localized", "mean_decay", "mean_ipr", "states", "interior_states")})


def evolve_task(spec: OperatorSpec, options: Mapping[str, Any]) -> TaskOutcome:
    t_max = float(options.get("t_max", 100.0))
    run = evolve(spec, int(options.get("N", 500)), times=time_grid(t_max, options.get("points")))
    summary: Dict[str, Any] = {"boundary_mass": run.boundary_mass_max, "valid": run.valid,
                               "x2_final": None, "x2_avg_final": None, "beta": None}
    if not run.valid:
        return TaskOutcome(summary, flagged=True)
    series = moments(run, int(options.get("order", 2)))
    summary["x2_final"] = float(series.x2_instant[-1])
    summary["x2_avg_final"] = float(series.x2_avg[-1])
    window = options.get("window", (t_max / 10.0, t_max))
    try:
        summary["beta"] = transport_exponent(series, window).beta
    except FitRefusedError as exc:
        logger.debug("transport fit skipped: %s", exc)
    return TaskOutcome(summary)


def kicked_task(spec: KickedRotorSpec, options: Mapping[str, Any]) -> TaskOutcome:
    run = rotor_run(spec, int(options.get("N", 1024)), int(options.get("periods", 100)))
    return TaskOutcome({
        "saturation_metric": run.saturation_metric,
        "final_n2": float(run.n2[-1]),
        "norm_drift": run.norm_drift,
        "valid_until": run.valid_until,
    }, flagged=run.flagged)


class TaskRegistry:
    """Looks up sweep tasks by name and checks the spec type they need."""

    VALID_TASKS = {
        'lyapunov-curve',
        'spectrum',
        'localize',
        'evolve',
        'kicked',
    }

    ROTOR_TASKS = {'kicked'}

    def __init__(self):
        self._runners: Dict[str, Callable[[Any, Mapping[str, Any]], TaskOutcome]] = {
            'lyapunov-curve': lyapunov_task,
            'spectrum': spectrum_task,
            'localize': localize_task,
            'evolve': evolve_task,
            'kicked': kicked_task,
        }

    def can_run(self, task: str) -> bool:
        """Check if a task name is registered."""
        return task in self.VALID_TASKS

    def check(self, task: str, spec: AnySpec) -> None:
        """Raise ConfigError unless ``task`` exists and accepts ``spec``."""
        if not self.can_run(task):
            raise ConfigError(f"unknown task {task!r}; expected one of {sorted(self.VALID_TASKS)}")
        wants_rotor = task in self.ROTOR_TASKS
        if wants_rotor != isinstance(spec, KickedRotorSpec):
            needed = "a kicked rotor spec" if wants_rotor else "an operator spec"
            raise ConfigError(f"task {task!r} needs {needed}")

    def run(self, task: str, spec: AnySpec, options: Optional[Mapping[str, Any]] = None) -> TaskOutcome:
        self.check(task, spec)
        return self._runners[task](spec, options or {})
