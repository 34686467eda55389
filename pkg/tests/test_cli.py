"""
Tests for the command-line interface.
"""

import csv
import io
from pathlib import Path

import pytest

from uav_coverage.cli import EXIT_EVALUATION, EXIT_OK, EXIT_USAGE, build_parser, main
from uav_coverage.figures import SHIPPED_RECTENNA_CSV

from .conftest import BASE_DOCUMENT

SWEEP_SPEC = """\
axis1.key=stations.t_ch_s
axis1.values=600, 1800
outputs=p_e, p_cov
"""


def read_csv(text: str):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


@pytest.fixture
def scenario_file(tmp_path) -> Path:
    path = tmp_path / "scenario.cfg"
    path.write_text(BASE_DOCUMENT, encoding="utf-8")
    return path


class TestParser:
    """Tests for argument parsing."""

    def test_subcommands(self):
        """Test subcommand parsing."""
        args = build_parser().parse_args(["eval", "link", "--d", "40", "--link", "nlos"])
        assert args.target == "link"
        assert args.d == 40.0
        assert args.link == "nlos"

    def test_bad_argument_exits_with_usage_status(self):
        """Test argparse errors use the usage status."""
        with pytest.raises(SystemExit) as exc:
            main(["eval", "coverage", "--mode", "exact"])
        assert exc.value.code == EXIT_USAGE

    def test_missing_command(self):
        """Test a command is required."""
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_global_options_after_subcommand(self):
        """Test --config, --verbose and --strict-fcc are accepted after the subcommand."""
        args = build_parser().parse_args([
            "eval", "service", "--config", "a.cfg", "--strict-fcc", "-v",
        ])
        assert args.config == "a.cfg"
        assert args.strict_fcc is True
        assert args.verbose is True

    def test_global_options_before_subcommand_kept(self):
        """Test options given before the subcommand survive subcommand parsing."""
        args = build_parser().parse_args(["--config", "a.cfg", "--verbose", "simulate"])
        assert args.config == "a.cfg"
        assert args.verbose is True
        assert args.strict_fcc is False

    def test_global_option_defaults(self):
        """Test defaults when no global option is given."""
        args = build_parser().parse_args(["reproduce", "--figure", "fig2"])
        assert args.config is None
        assert args.verbose is False
        assert args.strict_fcc is False

    def test_subcommand_value_wins(self):
        """Test an option after the subcommand overrides the one before it."""
        args = build_parser().parse_args(["-c", "a.cfg", "sweep", "--spec", "s", "-c", "b.cfg"])
        assert args.config == "b.cfg"

    def test_propulsion_velocity_distinct_from_verbose(self):
        """Test eval propulsion --v is the velocity, not --verbose."""
        args = build_parser().parse_args(["eval", "propulsion", "--v", "12"])
        assert args.v == 12.0
        assert args.verbose is False


class TestEval:
    """Tests for the eval subcommands."""

    def test_coverage_csv(self, scenario_file, capsys):
        """Test the default coverage row."""
        status = main(["--config", str(scenario_file), "eval", "coverage"])
        assert status == EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        assert len(rows) == 1
        assert list(rows[0]) == ["lambda_ch", "t_ch", "b_max_wh", "v", "p_e", "p_los", "p_cov_s", "p_cov"]
        assert 0.0 <= float(rows[0]["p_cov"]) <= 1.0

    def test_coverage_modes(self, scenario_file, capsys):
        """Test the nonlinear mode lowers sensor coverage."""
        main(["--config", str(scenario_file), "eval", "coverage"])
        paper = read_csv(capsys.readouterr().out)[0]
        main(["--config", str(scenario_file), "eval", "coverage", "--mode", "nonlinear"])
        nonlinear = read_csv(capsys.readouterr().out)[0]
        assert float(nonlinear["p_cov_s"]) < float(paper["p_cov_s"])
        assert nonlinear["p_e"] == paper["p_e"]

    def test_service_csv(self, scenario_file, capsys):
        """Test service analytics as CSV."""
        status = main(["--config", str(scenario_file), "eval", "service", "--format", "csv"])
        assert status == EXIT_OK
        row = read_csv(capsys.readouterr().out)[0]
        assert float(row["zeta"]) == pytest.approx(14_358_882, rel=1e-4)
        assert float(row["r_max"]) == pytest.approx(56_721.8, rel=1e-4)

    def test_propulsion_csv(self, scenario_file, capsys):
        """Test propulsion power as CSV."""
        status = main([
            "--config", str(scenario_file), "eval", "propulsion", "--v", "10.36", "--format", "csv",
        ])
        assert status == EXIT_OK
        row = read_csv(capsys.readouterr().out)[0]
        assert float(row["p_j"]) == pytest.approx(126.395, abs=0.01)
        assert float(row["p_h"]) == pytest.approx(168.4842, abs=0.01)
        assert row["e_j"] == ""

    def test_link_text(self, scenario_file, capsys):
        """Test the text report of the link terms."""
        status = main(["--config", str(scenario_file), "eval", "link", "--d", "20"])
        assert status == EXIT_OK
        out = capsys.readouterr().out
        assert "path loss" in out
        assert "Sensor coverage vs. distance" in out

    def test_link_csv(self, scenario_file, capsys):
        """Test the link terms as CSV."""
        main(["--config", str(scenario_file), "eval", "link", "--d", "20", "--format", "csv"])
        row = read_csv(capsys.readouterr().out)[0]
        assert row["link"] == "los"
        assert float(row["pl_db"]) == pytest.approx(58.842, abs=1e-2)

    def test_config_after_subcommand(self, scenario_file, capsys):
        """Test --config placed after the eval target."""
        status = main(["eval", "service", "--config", str(scenario_file), "--format", "csv"])
        assert status == EXIT_OK
        after = read_csv(capsys.readouterr().out)
        main(["--config", str(scenario_file), "eval", "service", "--format", "csv"])
        before = read_csv(capsys.readouterr().out)
        assert after == before
        assert float(after[0]["zeta"]) == pytest.approx(14_358_882, rel=1e-4)

    def test_default_calibration(self, capsys):
        """Test the bundled calibration is used without --config."""
        assert main(["eval", "service", "--format", "csv"]) == EXIT_OK
        assert read_csv(capsys.readouterr().out)


class TestConfigErrors:
    """Tests for configuration failures."""

    def test_missing_file(self, tmp_path):
        """Test an unreadable scenario."""
        assert main(["--config", str(tmp_path / "absent.cfg"), "eval", "coverage"]) == EXIT_USAGE

    def test_unknown_key(self, tmp_path):
        """Test an unknown scenario key."""
        path = tmp_path / "bad.cfg"
        path.write_text(BASE_DOCUMENT + "uav.wingspan=2\n", encoding="utf-8")
        assert main(["--config", str(path), "eval", "coverage"]) == EXIT_USAGE

    def test_strict_fcc(self, tmp_path):
        """Test FCC violations are warnings unless --strict-fcc is given."""
        path = tmp_path / "loud.cfg"
        path.write_text(BASE_DOCUMENT + "link.p_t_dbm=33\n", encoding="utf-8")
        assert main(["--config", str(path), "eval", "service", "--format", "csv"]) == EXIT_OK
        assert main(["--strict-fcc", "--config", str(path), "eval", "service"]) == EXIT_USAGE

    def test_strict_fcc_after_subcommand(self, tmp_path):
        """Test --strict-fcc and --config after the eval target."""
        path = tmp_path / "loud.cfg"
        path.write_text(BASE_DOCUMENT + "link.p_t_dbm=33\n", encoding="utf-8")
        status = main(["eval", "service", "--config", str(path), "--strict-fcc"])
        assert status == EXIT_USAGE

    def test_missing_file_after_subcommand(self, tmp_path):
        """Test an unreadable scenario named after the subcommand."""
        status = main(["simulate", "--config", str(tmp_path / "absent.cfg"), "--trials", "100"])
        assert status == EXIT_USAGE


class TestSweep:
    """Tests for the sweep subcommand."""

    def test_sweep_to_file(self, scenario_file, tmp_path):
        """Test sweep output is written and repeatable."""
        spec = tmp_path / "charge.sweep"
        spec.write_text(SWEEP_SPEC, encoding="utf-8")
        first = tmp_path / "first.csv"
        second = tmp_path / "second.csv"
        for output in (first, second):
            status = main([
                "--config", str(scenario_file), "sweep", "--spec", str(spec),
                "-o", str(output), "--no-banner",
            ])
            assert status == EXIT_OK
        assert first.read_text() == second.read_text()
        rows = read_csv(first.read_text())
        assert [row["stations.t_ch_s"] for row in rows] == ["600.0", "1800.0"]
        assert all(row["status"] == "ok" for row in rows)

    def test_banner(self, scenario_file, tmp_path, capsys):
        """Test the timestamp line on stdout output."""
        spec = tmp_path / "charge.sweep"
        spec.write_text(SWEEP_SPEC, encoding="utf-8")
        main(["--config", str(scenario_file), "sweep", "--spec", str(spec)])
        assert capsys.readouterr().out.startswith("# uav-coverage ")

    def test_bad_spec(self, scenario_file, tmp_path):
        """Test malformed sweep specs."""
        spec = tmp_path / "bad.sweep"
        spec.write_text("axis1.key=uav.wingspan\naxis1.values=1\n", encoding="utf-8")
        assert main(["--config", str(scenario_file), "sweep", "--spec", str(spec)]) == EXIT_USAGE

    def test_montecarlo_output_without_estimator(self, scenario_file, tmp_path):
        """Test a montecarlo sweep asking for p_los is a usage error."""
        spec = tmp_path / "mc.sweep"
        spec.write_text(
            "axis1.key=stations.t_ch_s\naxis1.values=600\nengine=montecarlo\noutputs=p_los\n",
            encoding="utf-8",
        )
        assert main(["sweep", "--spec", str(spec), "--config", str(scenario_file)]) == EXIT_USAGE

    def test_bad_workers(self, scenario_file, tmp_path):
        """Test a worker count below one."""
        spec = tmp_path / "charge.sweep"
        spec.write_text(SWEEP_SPEC, encoding="utf-8")
        status = main([
            "--config", str(scenario_file), "sweep", "--spec", str(spec), "--workers", "0",
        ])
        assert status == EXIT_USAGE


class TestSimulate:
    """Tests for the simulate subcommand."""

    def test_estimates(self, scenario_file, capsys):
        """Test the estimator rows."""
        status = main([
            "--config", str(scenario_file), "simulate", "--trials", "2000", "--seed", "5",
        ])
        assert status == EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        names = {row["estimator"] for row in rows}
        assert {"service", "sensor_coverage", "coverage"} <= names
        assert all(row["seed"] == "5" for row in rows)

    def test_config_after_subcommand(self, scenario_file, capsys):
        """Test --config placed after simulate."""
        status = main([
            "simulate", "--config", str(scenario_file), "--trials", "200", "--seed", "3",
        ])
        assert status == EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        assert all(row["seed"] == "3" for row in rows)

    def test_invalid_trials(self, scenario_file):
        """Test a non-positive trial count."""
        status = main(["--config", str(scenario_file), "simulate", "--trials", "0"])
        assert status == EXIT_USAGE


class TestFitRectenna:
    """Tests for the fit-rectenna subcommand."""

    def test_shipped_samples(self, capsys):
        """Test fitting the shipped samples yields a scenario block."""
        status = main(["fit-rectenna", "--csv", str(SHIPPED_RECTENNA_CSV)])
        assert status == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("# fitted from rectenna_868mhz.csv, degree 3")
        assert "rectenna.coeffs=" in out
        assert "rectenna.eta_fixed=0.5" in out

    def test_missing_csv(self, tmp_path):
        """Test an unreadable sample file."""
        assert main(["fit-rectenna", "--csv", str(tmp_path / "absent.csv")]) == EXIT_USAGE


class TestReproduce:
    """Tests for the reproduce subcommand."""

    def test_propulsion_figure(self, tmp_path):
        """Test the data grid is written and the checks pass."""
        output = tmp_path / "fig2a.csv"
        status = main(["reproduce", "--figure", "fig2a", "--output", str(output), "--no-banner"])
        assert status == EXIT_OK
        rows = read_csv(output.read_text())
        assert len(rows) == 59
        assert rows[0]["v"] == "1.0"

    def test_default_output_dir(self, tmp_path, monkeypatch):
        """Test the output directory comes from the environment."""
        monkeypatch.setenv("UAV_COVERAGE_OUTPUT_DIR", str(tmp_path / "figs"))
        assert main(["reproduce", "--figure", "fig2b", "--no-banner"]) == EXIT_OK
        assert (tmp_path / "figs" / "fig2b.csv").is_file()

    def test_unknown_figure(self):
        """Test an unknown figure id."""
        assert main(["reproduce", "--figure", "fig9"]) == EXIT_USAGE

    def test_missing_calibration(self, tmp_path):
        """Test a missing calibration document fails the evaluation."""
        status = main([
            "reproduce", "--figure", "fig2a",
            "--calibration", str(tmp_path / "absent.paper-figs"),
            "--output", str(tmp_path / "out.csv"),
        ])
        assert status == EXIT_EVALUATION
