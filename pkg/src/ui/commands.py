"""
Command-line subcommands. Each command declares its flags, turns them
into calls on the business layer and hands the resulting table to
``emit``.
"""
import argparse
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from src.business.cocycle import lyapunov_curve
from src.business.dynamics import evolve, moments, strong_dl_metric, time_grid, transport_exponent
from src.business.kickedrotor import rotor_run
from src.business.localization import localization_report
from src.business.spectra import butterfly, butterfly_rows, duality_check, point_spectrum
from src.business.workflows import SweepConfig, run_sweep
from src.core.config import LabConfig
from src.core.errors import ConfigError, FitRefusedError, LabError, SpecError
from src.core.models import AnySpec, KickedRotorSpec, OperatorSpec, spec_from_dict
from src.core.orbits import theta_grid
from src.ui.emit import emit, emit_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TASK_FAILURES = 3


def load_document(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON config; ``settings`` entries are applied to LabConfig."""
    if not path:
        return {}
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    LabConfig.update(document.get("settings", {}))
    return document


@dataclass
class RunContext:
    """Everything a command needs besides its own flags."""
    args: argparse.Namespace
    document: Dict[str, Any] = field(default_factory=dict)

    @property
    def workers(self) -> Optional[int]:
        return self.args.workers

    def jitter(self) -> float:
        """theta-grid jitter in units of the grid spacing, drawn from --seed."""
        if self.args.seed is None:
            return 0.0
        return float(np.random.default_rng(self.args.seed).random())

    def spec_document(self) -> Optional[Mapping[str, Any]]:
        if not self.document:
            return None
        return self.document.get("spec", self.document)

    def echo(self, spec: Optional[AnySpec] = None) -> Dict[str, Any]:
        arguments = {k: v for k, v in vars(self.args).items() if k != "command_object"}
        return {
            "command": self.args.command,
            "arguments": arguments,
            "spec": spec.to_dict() if spec is not None else None,
            "settings": LabConfig.snapshot(),
            "seed": self.args.seed,
            "jitter": self.jitter(),
        }


class Command:
    """Base class: subclasses set ``name``/``help`` and implement ``add_arguments`` and ``execute``."""
    name = ""
    help = ""
    default_format = "csv"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    def execute(self, context: RunContext) -> int:
        raise NotImplementedError

    def output_format(self, context: RunContext) -> str:
        return context.args.format or self.default_format

    def write(self, context: RunContext, rows: List[Mapping[str, Any]], spec: Optional[AnySpec],
              columns: Optional[List[str]] = None) -> None:
        emit(rows, self.output_format(context), context.args.out, context.echo(spec), columns)

    def write_summary(self, context: RunContext, summary: Mapping[str, Any]) -> None:
        """Summary JSON next to the table (``<out>.summary.json``) or in the log."""
        out = context.args.out
        if out and out != "-":
            emit_document(summary, f"{out}.summary.json")
        else:
            logger.info("summary: %s", json.dumps(summary, default=str))


class OperatorCommand(Command):
    """Commands that work on an OperatorSpec (from --config or the AMO flags)."""

    def add_arguments(self, parser):
        parser.add_argument("--coupling", "--lambda", dest="coupling", type=float,
                            help="coupling lambda (overrides the config)")
        parser.add_argument("--omega", help="frequency: a number or 'golden'/'silver'")
        parser.add_argument("--theta", type=float, help="phase theta")

    def operator_spec(self, context: RunContext) -> OperatorSpec:
        args = context.args
        data = context.spec_document()
        if data is not None:
            spec = spec_from_dict(data)
            if not isinstance(spec, OperatorSpec):
                raise SpecError(f"{self.name} needs an operator spec, got a kicked rotor spec")
        else:
            spec = OperatorSpec.almost_mathieu(1.0)
        if args.coupling is not None:
            spec = spec.with_coupling(args.coupling)
        if args.omega is not None:
            spec = spec.with_frequency(_frequency(args.omega), *spec.frequency.components[1:])
        if args.theta is not None:
            spec = spec.with_phase(args.theta, *spec.phase[1:])
        return spec


def _frequency(text: str):
    try:
        return float(text)
    except ValueError:
        return text


class LyapunovCommand(OperatorCommand):
    name = "lyapunov"
    help = "theta-averaged Lyapunov exponent over an energy grid"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--emin", type=float, default=-3.0)
        parser.add_argument("--emax", type=float, default=3.0)
        parser.add_argument("--epoints", type=int, default=61)
        parser.add_argument("--k", type=int, default=1000)
        parser.add_argument("--theta-grid", type=int, default=64)
        parser.add_argument("--extrapolate", action="store_true", help="Richardson 2 gamma_k - gamma_{k/2}")

    def execute(self, context):
        args = context.args
        spec = self.operator_spec(context)
        energies = np.linspace(args.emin, args.emax, args.epoints)
        estimates = lyapunov_curve(spec, energies, args.k, args.theta_grid, context.workers,
                                   context.jitter() / args.theta_grid, args.extrapolate)
        rows = [{"E": e.energy, "gamma": e.gamma_hat, "stderr": e.stderr, "k": e.k} for e in estimates]
        self.write(context, rows, spec, ["E", "gamma", "stderr", "k"])
        return EXIT_OK


class SpectrumCommand(OperatorCommand):
    name = "spectrum"
    help = "finite-section eigenvalues"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--n", type=int, default=200, help="box half-width N")
        parser.add_argument("--bc", choices=("dirichlet", "periodic"), default="dirichlet")
        parser.add_argument("--theta-samples", type=int, default=1, help="unite spectra over this many phases")

    def execute(self, context):
        args = context.args
        spec = self.operator_spec(context)
        thetas = None
        if args.theta_samples > 1:
            thetas = theta_grid(args.theta_samples, len(spec.phase), context.jitter() / args.theta_samples)
        spectrum = point_spectrum(spec, args.n, args.bc, thetas, context.workers)
        rows = [{"index": i, "E": float(e)} for i, e in enumerate(spectrum.eigenvalues)]
        self.write(context, rows, spec, ["index", "E"])
        return EXIT_OK


class ButterflyCommand(OperatorCommand):
    name = "butterfly"
    help = "band spectra of the rational approximants p/q, q <= q-max"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--q-max", type=int, default=None)
        parser.add_argument("--theta-samples", type=int, default=1)

    def execute(self, context):
        args = context.args
        spec = self.operator_spec(context)
        if spec.geometry != "line" or spec.potential.dimension != 1:
            raise SpecError("butterfly needs a line operator with a one-dimensional potential")
        thetas = theta_grid(args.theta_samples)[:, 0] if args.theta_samples > 1 else [spec.phase[0]]
        table = butterfly(spec.coupling, spec.potential, args.q_max, thetas, context.workers)
        self.write(context, butterfly_rows(table), spec, ["p", "q", "band_lo", "band_hi"])
        failed = [row for row in table if row.error]
        return EXIT_TASK_FAILURES if failed else EXIT_OK


class LocalizeCommand(OperatorCommand):
    name = "localize"
    help = "eigenfunction decay fits and inverse participation ratios"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--n", type=int, default=500)
        parser.add_argument("--e-window", type=float, nargs=2, metavar=("LO", "HI"))
        parser.add_argument("--threshold", type=float)
        parser.add_argument("--edge-distance", type=int)

    def execute(self, context):
        args = context.args
        spec = self.operator_spec(context)
        report = localization_report(spec, args.n, args.e_window, args.threshold, args.edge_distance,
                                     workers=context.workers)
        columns = ["index", "E", "center", "decay_rate", "fit_r2", "ipr", "interior", "localized"]
        self.write(context, report.rows(), spec, columns)
        self.write_summary(context, report.summary())
        return EXIT_OK


class EvolveCommand(OperatorCommand):
    name = "evolve"
    help = "wave-packet spreading from delta_0 and transport exponents"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--n", type=int, default=500)
        parser.add_argument("--tmax", type=float, default=100.0)
        parser.add_argument("--tpoints", type=int, default=None)
        parser.add_argument("--theta-samples", type=int, default=1, help="phases for the strong-DL metric")
        parser.add_argument("--moment-order", type=int, default=2)
        parser.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"),
                            help="fit window for the transport exponent (default: last decade)")

    def execute(self, context):
        args = context.args
        spec = self.operator_spec(context)
        run = evolve(spec, args.n, times=time_grid(args.tmax, args.tpoints))
        series = moments(run, args.moment_order)
        self.write(context, series.rows(), spec, ["t", "x2_instant", "x2_avg"])

        window = tuple(args.window) if args.window else (args.tmax / 10.0, args.tmax)
        summary: Dict[str, Any] = {"N": args.n, "t_max": args.tmax, "order": args.moment_order,
                                   "boundary_mass_max": run.boundary_mass_max, "norm_drift": run.norm_drift}
        for which in ("avg", "instant"):
            try:
                summary[f"beta_{which}"] = transport_exponent(series, window, which).to_dict()
            except FitRefusedError as exc:
                summary[f"beta_{which}"] = None
                logger.warning("transport fit refused: %s", exc)
        if args.theta_samples > 1:
            metric = strong_dl_metric(spec, args.n, args.theta_samples, args.tmax, args.tpoints,
                                      context.workers, args.moment_order)
            summary.update(metric.to_dict())
        else:
            summary.update({"strong_dl": float(np.max(series.x2_instant)), "samples": 1, "valid": run.valid})
        self.write_summary(context, summary)
        return EXIT_OK


class DualityCommand(Command):
    name = "duality"
    help = "Hausdorff distance between sigma(H_lambda) and (lambda/2) sigma(H_{4/lambda})"
    default_format = "json"

    def add_arguments(self, parser):
        parser.add_argument("--coupling", "--lambda", dest="coupling", type=float, required=True)
        parser.add_argument("--omega", default="golden")
        parser.add_argument("--n", type=int, default=1000)
        parser.add_argument("--theta-samples", type=int, default=32)
        parser.add_argument("--boundary", choices=("approximant", "both"), default="approximant",
                            help="'both' adds Dirichlet sections (edge-state diagnostic)")
        parser.add_argument("--validation-n", type=int, default=200)

    def execute(self, context):
        args = context.args
        report = duality_check(args.coupling, _frequency(args.omega), args.n, args.theta_samples,
                               args.boundary, args.validation_n, context.workers)
        self.write(context, [report.to_dict()], OperatorSpec.almost_mathieu(args.coupling, _frequency(args.omega)))
        return EXIT_OK


class KickedCommand(Command):
    name = "kicked"
    help = "kicked-rotor momentum spreading"

    def add_arguments(self, parser):
        parser.add_argument("--kappa", type=float)
        parser.add_argument("--a", type=float)
        parser.add_argument("--b", type=float)
        parser.add_argument("--n", type=int, default=1024, help="momentum box half-width")
        parser.add_argument("--periods", type=int, default=1000)

    def rotor_spec(self, context: RunContext) -> KickedRotorSpec:
        args = context.args
        data = context.spec_document()
        base = spec_from_dict(data) if data is not None else KickedRotorSpec(0.5, 0.0)
        if not isinstance(base, KickedRotorSpec):
            raise SpecError("kicked needs a kicked rotor spec (kappa, a, b)")
        values = base.to_dict()
        for key in ("kappa", "a", "b"):
            if getattr(args, key) is not None:
                values[key] = getattr(args, key)
        return KickedRotorSpec(**values)

    def execute(self, context):
        args = context.args
        spec = self.rotor_spec(context)
        run = rotor_run(spec, args.n, args.periods)
        self.write(context, run.rows(), spec, ["t", "n2", "n2_avg", "saturation"])
        self.write_summary(context, run.summary())
        return EXIT_OK


class SweepCommand(Command):
    name = "sweep"
    help = "run a task over a parameter grid described by --config"

    def execute(self, context):
        if not context.document:
            raise ConfigError("sweep needs --config with 'spec', 'task' and 'axes'")
        config = SweepConfig.from_dict(context.document)
        result = run_sweep(config, context.workers)
        echo = {**context.echo(config.spec), "sweep": config.resolved()}
        emit(result.rows(), self.output_format(context), context.args.out, echo, result.columns())
        return EXIT_TASK_FAILURES if result.failures else EXIT_OK


def default_commands() -> List[Command]:
    return [
        LyapunovCommand(),
        SpectrumCommand(),
        ButterflyCommand(),
        LocalizeCommand(),
        EvolveCommand(),
        DualityCommand(),
        KickedCommand(),
        SweepCommand(),
    ]


def exit_code_for(error: LabError) -> int:
    """Configuration and spec problems exit with 2, failed computations with 3."""
    return EXIT_CONFIG if isinstance(error, (ConfigError, SpecError)) else EXIT_TASK_FAILURES
