"""
Tests for parameter sweeps.
"""
import pytest

from src.business.tasks import TaskRegistry
from src.business.workflows import SweepAxis, SweepConfig, SweepResult, apply_point, run_sweep
from src.core.errors import ConfigError


class TestSweepAxis:
    """Test cases for SweepAxis."""

    def test_linear_values(self):
        assert SweepAxis("lambda", 1.0, 3.0, 3).values() == pytest.approx([1.0, 2.0, 3.0])

    def test_log_values(self):
        assert SweepAxis("kappa", 0.1, 10.0, 3, "log").values() == pytest.approx([0.1, 1.0, 10.0])

    def test_single_point_uses_lo(self):
        assert SweepAxis("lambda", 2.5, 9.0, 1).values().tolist() == [2.5]

    @pytest.mark.parametrize("kwargs", [
        {"points": 0},
        {"scale": "cubic"},
        {"scale": "log", "lo": 0.0},
    ])
    def test_invalid_axis(self, kwargs):
        """Test malformed axes are rejected with ConfigError."""
        arguments = {"name": "lambda", "lo": 1.0, "hi": 2.0, "points": 3, **kwargs}
        with pytest.raises(ConfigError):
            SweepAxis(**arguments)

    def test_from_dict_defaults(self):
        axis = SweepAxis.from_dict({"name": "lambda", "lo": 2.0})

        assert axis == SweepAxis("lambda", 2.0, 2.0, 1, "linear")

    def test_from_dict_missing_field(self):
        with pytest.raises(ConfigError, match="lo"):
            SweepAxis.from_dict({"name": "lambda", "hi": 2.0})


class TestSweepConfig:
    """Test cases for SweepConfig validation and grids."""

    def test_row_major_grid(self, amo_subcritical):
        """Test the last axis varies fastest."""
        config = SweepConfig(amo_subcritical, (SweepAxis("lambda", 1.0, 2.0, 2), SweepAxis("theta", 0.0, 0.2, 3)),
                             "spectrum")

        assert config.grid() == [(1.0, 0.0), (1.0, 0.1), (1.0, 0.2), (2.0, 0.0), (2.0, 0.1), (2.0, 0.2)]
        assert config.task_count == 6

    def test_no_axes_single_point(self, amo_subcritical):
        config = SweepConfig(amo_subcritical, (), "spectrum")

        assert config.grid() == [()]
        assert config.task_count == 1

    def test_too_many_axes(self, amo_subcritical):
        axes = tuple(SweepAxis(name, 0.1, 0.2, 2) for name in ("lambda", "omega", "theta", "E"))
        with pytest.raises(ConfigError, match="at most 3"):
            SweepConfig(amo_subcritical, axes, "lyapunov-curve")

    def test_unknown_axis(self, amo_subcritical):
        with pytest.raises(ConfigError, match="not a field"):
            SweepConfig(amo_subcritical, (SweepAxis("kappa", 0.1, 1.0, 2),), "spectrum")

    def test_aliases_must_be_distinct(self, amo_subcritical):
        """Test 'lambda' and 'coupling' name the same axis."""
        axes = (SweepAxis("lambda", 1.0, 2.0, 2), SweepAxis("coupling", 1.0, 2.0, 2))
        with pytest.raises(ConfigError, match="distinct"):
            SweepConfig(amo_subcritical, axes, "spectrum")

    def test_budget(self, amo_subcritical):
        axes = (SweepAxis("lambda", 1.0, 2.0, 10), SweepAxis("theta", 0.0, 1.0, 10))
        with pytest.raises(ConfigError, match="budget"):
            SweepConfig(amo_subcritical, axes, "spectrum", budget=50)

    def test_task_must_match_spec(self, rotor_spec):
        with pytest.raises(ConfigError):
            SweepConfig(rotor_spec, (SweepAxis("kappa", 0.1, 1.0, 2),), "spectrum")

    def test_jitter(self, amo_subcritical):
        """Test the jitter is zero without a seed and reproducible with one."""
        assert SweepConfig(amo_subcritical, (), "spectrum").jitter() == 0.0
        seeded = SweepConfig(amo_subcritical, (), "spectrum", seed=5)
        assert 0.0 <= seeded.jitter() < 1.0
        assert seeded.jitter() == SweepConfig(amo_subcritical, (), "spectrum", seed=5).jitter()

    def test_resolved(self, amo_subcritical):
        resolved = SweepConfig(amo_subcritical, (SweepAxis("lambda", 1.0, 2.0, 2),), "spectrum",
                               {"N": 10}).resolved()

        assert resolved["task"] == "spectrum"
        assert resolved["axes"][0]["points"] == 2
        assert resolved["jitter"] == 0.0
        assert resolved["budget"] == 100000

    def test_from_dict(self):
        config = SweepConfig.from_dict({
            "spec": {"kappa": 1.0, "a": 0.3, "b": 0.0},
            "axes": [{"name": "kappa", "lo": 0.5, "hi": 1.5, "points": 3}],
            "task": "kicked",
            "options": {"N": 32, "periods": 5},
            "seed": 1,
        })

        assert config.task_count == 3
        assert config.seed == 1

    def test_from_dict_missing_task(self):
        with pytest.raises(ConfigError, match="task"):
            SweepConfig.from_dict({"spec": {"kappa": 1.0, "a": 0.3}})

    def test_from_dict_bad_spec(self):
        with pytest.raises(ConfigError, match="sweep spec"):
            SweepConfig.from_dict({"spec": {"geometry": "line"}, "task": "spectrum"})


class TestApplyPoint:
    """Test cases for apply_point."""

    def test_operator_axes(self, amo_subcritical):
        axes = (SweepAxis("lambda", 3.0, 3.0, 1), SweepAxis("theta", 0.4, 0.4, 1), SweepAxis("E", 0.5, 0.5, 1))
        config = SweepConfig(amo_subcritical, axes, "lyapunov-curve")
        spec, options = apply_point(config, (3.0, 0.4, 0.5))

        assert spec.coupling == 3.0
        assert spec.phase == (0.4,)
        assert options == {"jitter": 0.0, "energy": 0.5}

    def test_rotor_axes(self, rotor_spec):
        config = SweepConfig(rotor_spec, (SweepAxis("kappa", 2.0, 2.0, 1),), "kicked")
        spec, _ = apply_point(config, (2.0,))

        assert spec.kappa == 2.0
        assert spec.a == rotor_spec.a


class TestRunSweep:
    """Test cases for run_sweep."""

    def test_single_point_matches_task(self, amo_subcritical):
        """Test a one-point sweep reproduces a direct task call."""
        config = SweepConfig(amo_subcritical, (SweepAxis("lambda", 4.0, 4.0, 1),), "spectrum", {"N": 10})
        result = run_sweep(config, workers=1)
        direct = TaskRegistry().run("spectrum", amo_subcritical.with_coupling(4.0), {"N": 10, "jitter": 0.0})

        assert len(result.records) == 1
        assert result.records[0].summary == direct.summary
        assert result.records[0].parameters == {"lambda": 4.0}

    def test_failing_point_isolated(self, amo_subcritical):
        """Test a failing grid point becomes an error record and the rest still run."""
        config = SweepConfig(amo_subcritical, (SweepAxis("lambda", -1.0, 1.0, 2),), "spectrum", {"N": 5})
        result = run_sweep(config, workers=1)

        assert [r.status for r in result.records] == ["error", "ok"]
        assert result.failures == 1
        assert "SpecError" in result.records[0].error
        rows = result.rows()
        assert rows[0]["e_min"] is None
        assert rows[1]["levels"] == 11

    def test_flagged_points_counted(self, free_spec):
        config = SweepConfig(free_spec, (SweepAxis("lambda", 0.0, 0.0, 1),), "evolve",
                             {"N": 10, "t_max": 20.0, "points": 10})
        result = run_sweep(config, workers=1)

        assert result.flagged == 1
        assert result.records[0].status == "flagged"

    def test_workers_do_not_change_results(self, amo_subcritical):
        config = SweepConfig(amo_subcritical, (SweepAxis("lambda", 1.0, 4.0, 2),), "spectrum", {"N": 10})
        serial = run_sweep(config, workers=1)
        parallel = run_sweep(config, workers=2)

        assert [r.summary for r in serial.records] == [r.summary for r in parallel.records]

    def test_localization_grows_with_coupling(self, amo_subcritical):
        """Test the lambda = 4 point is more localized than lambda = 1."""
        config = SweepConfig(amo_subcritical, (SweepAxis("lambda", 1.0, 4.0, 2),), "localize",
                             {"N": 80, "edge_distance": 10})
        rows = run_sweep(config, workers=1).rows()

        assert rows[0]["fraction_localized"] < rows[1]["fraction_localized"]

    def test_rotor_sweep(self, rotor_spec):
        config = SweepConfig(rotor_spec, (SweepAxis("kappa", 0.2, 0.6, 2),), "kicked", {"N": 32, "periods": 5})
        result = run_sweep(config, workers=1)

        assert [r.status for r in result.records] == ["ok", "ok"]
        assert result.columns()[0] == "kappa"

    def test_empty_result_columns(self, amo_subcritical):
        config = SweepConfig(amo_subcritical, (SweepAxis("lambda", 1.0, 2.0, 2),), "spectrum")

        assert SweepResult(config, []).columns() == ["lambda", "status", "wall_time", "error"]
