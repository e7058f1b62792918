"""
Parameter sweep workflow - runs a task over a grid of spec and option values.
"""
import itertools
import logging
import time
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.business.tasks import TaskRegistry
from src.core.config import LabConfig
from src.core.errors import ConfigError, LabError
from src.core.models import AnySpec, KickedRotorSpec, OperatorSpec, spec_from_dict
from src.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

MAX_AXES = 3

# Axis names accepted per spec type; aliases map to the canonical name
OPERATOR_AXES = {"coupling": "coupling", "lambda": "coupling",
                 "frequency": "frequency", "omega": "frequency",
                 "phase": "phase", "theta": "phase",
                 "energy": "energy", "E": "energy"}
ROTOR_AXES = {"kappa": "kappa", "a": "a", "b": "b"}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    lo: float
    hi: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.points < 1:
            raise ConfigError(f"axis {self.name!r} needs at least one point")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.name!r}: scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and not (self.lo > 0 and self.hi > 0):
            raise ConfigError(f"axis {self.name!r}: log scale needs positive bounds")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.lo], dtype=float)
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "lo": self.lo, "hi": self.hi, "points": self.points, "scale": self.scale}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SweepAxis":
        try:
            return cls(str(data["name"]), float(data["lo"]), float(data.get("hi", data["lo"])),
                       int(data.get("points", 1)), str(data.get("scale", "linear")))
        except KeyError as exc:
            raise ConfigError(f"sweep axis is missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed sweep axis {dict(data)!r}: {exc}") from exc


@dataclass(frozen=True)
class SweepConfig:
    """A base spec, up to three axes, a task name and task options."""
    spec: AnySpec
    axes: Tuple[SweepAxis, ...]
    task: str
    options: Mapping[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    budget: Optional[int] = None

    def __post_init__(self):
        TaskRegistry().check(self.task, self.spec)
        if len(self.axes) > MAX_AXES:
            raise ConfigError(f"at most {MAX_AXES} sweep axes are supported, got {len(self.axes)}")
        allowed = ROTOR_AXES if isinstance(self.spec, KickedRotorSpec) else OPERATOR_AXES
        canonical = []
        for axis in self.axes:
            if axis.name not in allowed:
                raise ConfigError(f"axis {axis.name!r} is not a field of this spec; expected one of "
                                  f"{sorted(allowed)}")
            canonical.append(allowed[axis.name])
        if len(set(canonical)) != len(canonical):
            raise ConfigError("sweep axes must be distinct")
        limit = LabConfig.SWEEP_BUDGET if self.budget is None else self.budget
        if self.task_count > limit:
            raise ConfigError(f"sweep has {self.task_count} tasks, over the budget of {limit}")

    @property
    def task_count(self) -> int:
        return int(np.prod([axis.points for axis in self.axes], dtype=np.int64)) if self.axes else 1

    @property
    def axis_names(self) -> List[str]:
        return [axis.name for axis in self.axes]

    def grid(self) -> List[Tuple[float, ...]]:
        """Parameter tuples in row-major order (the last axis varies fastest)."""
        return [tuple(float(v) for v in point) for point in itertools.product(*(a.values() for a in self.axes))]

    def jitter(self) -> float:
        """theta-grid jitter in units of the grid spacing; 0 without a seed."""
        if self.seed is None:
            return 0.0
        return float(np.random.default_rng(self.seed).random())

    def resolved(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "axes": [axis.to_dict() for axis in self.axes],
            "task": self.task,
            "options": dict(self.options),
            "seed": self.seed,
            "jitter": self.jitter(),
            "budget": LabConfig.SWEEP_BUDGET if self.budget is None else self.budget,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SweepConfig":
        for key in ("spec", "task"):
            if key not in data:
                raise ConfigError(f"sweep config is missing {key!r}")
        try:
            spec = spec_from_dict(data["spec"])
        except LabError as exc:
            raise ConfigError(f"sweep spec: {exc}") from exc
        axes = tuple(SweepAxis.from_dict(a) for a in data.get("axes", ()))
        seed = data.get("seed")
        budget = data.get("budget")
        return cls(spec, axes, str(data["task"]), dict(data.get("options", {})),
                   None if seed is None else int(seed), None if budget is None else int(budget))


@dataclass
class SweepRecord:
    """Result of one grid point."""
    parameters: Dict[str, float]
    summary: Dict[str, Any]
    status: str
    wall_time: float
    error: Optional[str] = None

    def to_row(self) -> Dict[str, Any]:
        return {**self.parameters, **self.summary, "status": self.status, "wall_time": self.wall_time,
                "error": self.error}


@dataclass
class SweepResult:
    config: SweepConfig
    records: List[SweepRecord]

    @property
    def failures(self) -> int:
        return sum(record.status == "error" for record in self.records)

    @property
    def flagged(self) -> int:
        return sum(record.status == "flagged" for record in self.records)

    def rows(self) -> List[Dict[str, Any]]:
        """Records as flat rows; every row carries the union of summary fields."""
        fields: List[str] = []
        for record in self.records:
            fields.extend(k for k in record.summary if k not in fields)
        return [{**record.parameters, **{k: record.summary.get(k) for k in fields},
                 "status": record.status, "wall_time": record.wall_time, "error": record.error}
                for record in self.records]

    def columns(self) -> List[str]:
        if self.records:
            return list(self.rows()[0])
        return self.config.axis_names + ["status", "wall_time", "error"]


def apply_point(config: SweepConfig, point: Sequence[float]) -> Tuple[AnySpec, Dict[str, Any]]:
    """The spec and task options at one grid point."""
    spec = config.spec
    options = dict(config.options)
    options.setdefault("jitter", config.jitter())
    if isinstance(spec, KickedRotorSpec):
        values = {ROTOR_AXES[a.name]: v for a, v in zip(config.axes, point)}
        return KickedRotorSpec(**{**spec.to_dict(), **values}), options
    for axis, value in zip(config.axes, point):
        name = OPERATOR_AXES[axis.name]
        if name == "coupling":
            spec = spec.with_coupling(value)
        elif name == "frequency":
            spec = spec.with_frequency(value, *spec.frequency.components[1:])
        elif name == "phase":
            spec = spec.with_phase(value, *spec.phase[1:])
        else:
            options["energy"] = value
    return spec, options


def _run_point(point: Tuple[float, ...], config: SweepConfig) -> SweepRecord:
    parameters = dict(zip(config.axis_names, point))
    start = time.perf_counter()
    try:
        spec, options = apply_point(config, point)
        outcome = TaskRegistry().run(config.task, spec, options)
    except Exception as exc:  # a failing point becomes one error record
        logger.warning("sweep point %s failed: %s", parameters, exc)
        return SweepRecord(parameters, {}, "error", time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
    status = "flagged" if outcome.flagged else "ok"
    return SweepRecord(parameters, outcome.summary, status, time.perf_counter() - start)


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    """Run the task at every grid point; records come back in row-major grid order."""
    grid = config.grid()
    logger.info("sweep %s: %d points over axes %s", config.task, len(grid), config.axis_names or "(none)")
    records = parallel_map(partial(_run_point, config=config), grid, workers)
    result = SweepResult(config, records)
    if result.failures:
        logger.warning("sweep finished with %d failed points", result.failures)
    return result
