"""
Command-line interface for the UAV coverage analyzer.
"""

import argparse
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config import (
    ConfigurationError,
    apply_overrides,
    calibration_path,
    get_settings,
    load_config,
)
from .coverage import coverage_sensor, coverage_total, sensor_coverage_curve
from .figures import FigureId, FigureResult, reproduce_figure
from .link_budget import LinkType, intercepted_power, link_budget
from .model import CoverageMode, ModelError, ScenarioConfig
from .monte_carlo import SimConfig, simulate
from .propulsion import max_range_velocity, optimal_trip_velocity, trip_energy, trip_power
from .rectenna import RectennaError, fit_rectenna, fit_rmse, load_rectenna_csv, rectenna_block
from .service import QuadratureError, service_analytics, service_probability
from .sweep import (
    BASE_COLUMNS,
    DEFAULT_OUTPUTS,
    SweepError,
    SweepResult,
    analytic_row,
    load_sweep_spec,
    run_sweep,
    write_csv,
)
from .units import joules_to_wh, linear_to_db, watts_to_dbm

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_EVALUATION = 2

# Diagnostics and tables go to stderr so stdout carries CSV only.
console = Console(stderr=True)
stdout_console = Console()

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Raised for bad arguments or configuration; exits with status 1."""

    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage status on bad arguments."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(verbose: bool = False) -> None:
    """Route library logging through rich."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=verbose, rich_tracebacks=True)],
        force=True,
    )


def print_banner():
    """Print the application banner."""
    console.print()
    console.print(
        Panel(
            "[bold]UAV COVERAGE ANALYZER[/bold]\n"
            "[dim]Coverage probability of UAV-powered battery-less sensors[/dim]",
            border_style="cyan",
            padding=(1, 4),
        )
    )
    console.print()


def banner_line(command: str) -> str:
    """Timestamped comment line written above CSV output."""
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"uav-coverage {__version__} {command} {stamp}"


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def print_key_values(title: str, rows: Sequence[tuple]) -> None:
    """Print (name, value, unit) rows as a rich table on stdout."""
    table = Table(title=title, show_header=False, box=None, padding=(0, 2))
    table.add_column("Quantity", style="blue")
    table.add_column("Value", style="bold", justify="right")
    table.add_column("Unit", style="dim")
    for name, value, unit in rows:
        table.add_row(name, value if isinstance(value, str) else _fmt(value), unit)
    stdout_console.print(table)


def write_rows(columns: List[str], rows: List[Dict[str, Any]], stream: TextIO) -> None:
    write_csv(SweepResult(columns=columns, rows=rows), stream)


def load_scenario(args: argparse.Namespace) -> ScenarioConfig:
    """
    Load the scenario named by --config and apply --mode.

    Raises:
        UsageError: On unreadable or invalid documents, and on FCC
            violations under --strict-fcc.
    """
    path = Path(args.config) if args.config else calibration_path()
    try:
        cfg = load_config(path)
        mode = getattr(args, "mode", None)
        if mode:
            cfg = apply_overrides(cfg, {"coverage.mode": mode})
    except (ConfigurationError, ModelError) as e:
        raise UsageError(f"{path}: {e}") from e
    logger.debug("Loaded scenario from %s", path)

    report = cfg.compliance()
    for problem in report.violations():
        if args.strict_fcc:
            raise UsageError(f"FCC limit violated: {problem}")
        logger.warning("FCC limit violated: %s", problem)
    return cfg


def cmd_eval_propulsion(args: argparse.Namespace) -> int:
    cfg = load_scenario(args)
    model = cfg.propulsion
    v = cfg.v if args.v is None else args.v
    p_j = trip_power(model, v)
    e_j = None if args.r is None else trip_energy(model, args.r, cfg.h_l, v)
    rows = [
        ("velocity", v, "m/s"),
        ("P_J", p_j, "W"),
        ("P_h", model.hover_power, "W"),
        ("energy per metre", p_j / v, "J/m"),
    ]
    if e_j is not None:
        rows.append((f"E_J (r = {args.r:g} m)", e_j, "J"))
        rows.append(("E_J", joules_to_wh(e_j), "Wh"))
    rows.append(("min-power speed", optimal_trip_velocity(model), "m/s"))
    rows.append(("max-range speed", max_range_velocity(model), "m/s"))

    if args.format == "csv":
        write_rows(
            ["v", "p_j", "p_h", "e_j"],
            [{
                "v": v,
                "p_j": p_j,
                "p_h": model.hover_power,
                "e_j": e_j,
            }],
            sys.stdout,
        )
    else:
        print_key_values("Propulsion", rows)
    return EXIT_OK


def cmd_eval_link(args: argparse.Namespace) -> int:
    cfg = load_scenario(args)
    link = LinkType.from_string(args.link)
    budget = link_budget(cfg, args.d)
    pl_db = budget.pl_los_db if link is LinkType.LOS else budget.pl_nlos_db
    p_i = intercepted_power(budget.eirp, budget.g_r, 1.0, budget.pl(link))
    sensor = coverage_sensor(cfg, args.d)

    if args.format == "csv":
        write_rows(
            ["d", "link", "pl_db", "p_los", "p_i_w", "p_cov_s"],
            [{
                "d": budget.d_3d,
                "link": link.key,
                "pl_db": pl_db,
                "p_los": budget.p_los,
                "p_i_w": p_i,
                "p_cov_s": sensor.p_cov_s,
            }],
            sys.stdout,
        )
        return EXIT_OK

    report = cfg.compliance()
    print_key_values(
        f"Link ({link.key})",
        [
            ("distance", budget.d_3d, "m"),
            ("path loss", pl_db, "dB"),
            ("P_LoS", budget.p_los, ""),
            ("P_I at g_h = 1", watts_to_dbm(p_i), "dBm"),
            ("EIRP", report.eirp_dbm, "dBm"),
            ("G_T", linear_to_db(cfg.g_t), "dBi"),
            ("P_cov,s", sensor.p_cov_s, ""),
        ],
    )

    distances = [budget.d_3d * f for f in (0.5, 1.0, 2.0, 5.0, 10.0)]
    curve = sensor_coverage_curve(cfg, distances)
    table = Table(title="Sensor coverage vs. distance", box=None, padding=(0, 2))
    table.add_column("d [m]", justify="right")
    table.add_column("P_cov,s", justify="right", style="bold")
    for d, p in zip(distances, curve):
        table.add_row(_fmt(d), _fmt(p))
    stdout_console.print(table)
    return EXIT_OK


def cmd_eval_service(args: argparse.Namespace) -> int:
    cfg = load_scenario(args)
    an = service_analytics(cfg)
    p_e = service_probability(cfg, an)
    values = {
        "zeta": an.zeta,
        "r_max": an.r_max,
        "r_cutoff": an.r_cutoff,
        "x0": an.x0,
        "x_max": an.x_max,
        "p_e": p_e,
    }
    if args.format == "csv":
        write_rows(list(values), [values], sys.stdout)
    else:
        print_key_values(
            "Service",
            [
                ("zeta", an.zeta, "J m/s"),
                ("r_max", an.r_max, "m"),
                ("r_cutoff", an.r_cutoff, "m"),
                ("x0", an.x0, ""),
                ("x_max", an.x_max, ""),
                ("P_e", p_e, ""),
            ],
        )
    return EXIT_OK


def cmd_eval_coverage(args: argparse.Namespace) -> int:
    cfg = load_scenario(args)
    row = analytic_row(cfg, DEFAULT_OUTPUTS)
    if args.format == "csv":
        write_rows(list(BASE_COLUMNS) + list(DEFAULT_OUTPUTS), [row], sys.stdout)
    else:
        result = coverage_total(cfg)
        print_key_values(
            f"Coverage ({cfg.coverage_mode.key})",
            [
                ("P_e", result.p_e, ""),
                ("P_LoS", result.p_los, ""),
                ("P_cov,s", result.p_cov_s, ""),
                ("P_cov", result.p_cov, ""),
            ],
        )
        for message in result.diagnostics:
            console.print(f"[yellow]Note:[/yellow] {message}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_scenario(args)
    try:
        spec = load_sweep_spec(args.spec)
    except (SweepError, ConfigurationError) as e:
        raise UsageError(str(e)) from e
    if args.workers is not None:
        try:
            spec = replace(spec, workers=args.workers)
        except (SweepError, ConfigurationError) as e:
            raise UsageError(str(e)) from e

    result = run_sweep(cfg, spec)
    banner = None if args.no_banner else banner_line("sweep")
    if args.output:
        output = Path(args.output)
        output.parent.mkdir(parents=True, exist_ok=True)
        with output.open("w", encoding="utf-8", newline="") as f:
            write_csv(result, f, banner)
        console.print(f"[green]Sweep complete![/green] Output saved to: [bold]{output}[/bold]")
    else:
        write_csv(result, sys.stdout, banner)

    failed = [row for row in result.rows if row.get("status") != "ok"]
    if failed:
        console.print(f"[yellow]{len(failed)} of {len(result.rows)} points failed[/yellow]")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_scenario(args)
    try:
        sim = SimConfig(trials=args.trials, seed=args.seed, workers=args.workers)
    except ModelError as e:
        raise UsageError(str(e)) from e

    estimates = simulate(cfg, sim)
    rows = [
        {
            "estimator": name,
            "mean": estimate.mean,
            "std_error": estimate.std_error,
            "trials": estimate.trials,
            "seed": args.seed,
        }
        for name, estimate in estimates.items()
    ]
    write_rows(["estimator", "mean", "std_error", "trials", "seed"], rows, sys.stdout)
    return EXIT_OK


def cmd_fit_rectenna(args: argparse.Namespace) -> int:
    try:
        samples = load_rectenna_csv(args.csv)
    except OSError as e:
        raise UsageError(f"Cannot read {args.csv}: {e}") from e
    except RectennaError as e:
        raise UsageError(str(e)) from e
    model = fit_rectenna(samples, args.degree, eta_fixed=args.eta_fixed)
    rmse = fit_rmse(model, samples)
    comment = f"fitted from {Path(args.csv).name}, degree {args.degree}, rmse {rmse:.3e}"
    sys.stdout.write(rectenna_block(model, comment))
    console.print(f"[dim]{len(samples)} samples, rmse {rmse:.3e}[/dim]")
    return EXIT_OK


def print_checks(result: FigureResult) -> None:
    """Print the check summary of a reproduced figure."""
    table = Table(title=f"{result.figure.key}: {result.figure.description}", padding=(0, 1))
    table.add_column("Check", style="blue")
    table.add_column("Status", justify="center")
    table.add_column("Detail", style="dim")
    styles = {"pass": "green", "FAIL": "bold red", "info": "cyan"}
    for check in result.checks:
        table.add_row(check.name, f"[{styles[check.status]}]{check.status}[/]", check.detail)
    console.print(table)


def cmd_reproduce(args: argparse.Namespace) -> int:
    figure = FigureId.from_string(args.figure)
    if figure is None:
        raise UsageError(
            f"unknown figure {args.figure!r}; choose from {', '.join(FigureId.all_keys())}"
        )
    try:
        settings = get_settings()
    except ConfigurationError as e:
        raise UsageError(str(e)) from e

    result = reproduce_figure(figure, calibration=args.calibration, workers=args.workers)

    output = Path(args.output) if args.output else Path(settings.output_dir) / f"{figure.key}.csv"
    output.parent.mkdir(parents=True, exist_ok=True)
    banner = None if args.no_banner else banner_line(f"reproduce {figure.key}")
    with output.open("w", encoding="utf-8", newline="") as f:
        write_csv(result.table, f, banner)

    print_checks(result)
    console.print(f"Data grid saved to: [bold]{output}[/bold]")
    if not result.passed:
        console.print("[red]One or more checks failed.[/red]")
        return EXIT_EVALUATION
    return EXIT_OK


def add_common_options(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    """Add --config, --verbose and --strict-fcc to a parser."""
    unset = argparse.SUPPRESS if suppress else None
    off = argparse.SUPPRESS if suppress else False
    parser.add_argument(
        "--config", "-c",
        default=unset,
        help="Scenario document (default: bundled calibration)",
    )
    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        default=off,
        help="Debug logging",
    )
    parser.add_argument(
        "--strict-fcc",
        action="store_true",
        default=off,
        help="Treat FCC power and EIRP violations as errors",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with all subcommands."""
    parser = _Parser(
        prog="uav-coverage",
        description="Coverage probability of UAV-powered battery-less sensors.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s eval coverage                          # Calibrated scenario, paper mode
  %(prog)s eval coverage --mode nonlinear         # Fitted rectenna curve
  %(prog)s --config my.cfg eval link --d 40       # Link terms at 40 m
  %(prog)s sweep --spec density.sweep -o out.csv  # Parameter sweep to CSV
  %(prog)s simulate --trials 100000 --seed 7      # Monte Carlo estimates
  %(prog)s fit-rectenna --csv samples.csv         # Fit efficiency polynomial
  %(prog)s reproduce --figure fig3c               # Figure data and checks
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    add_common_options(parser)

    # Accepted after the subcommand as well; only set when given there.
    common = _Parser(add_help=False)
    add_common_options(common, suppress=True)

    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    modes = CoverageMode.all_keys()

    evaluate = commands.add_parser("eval", parents=[common], help="Evaluate one part of the model")
    targets = evaluate.add_subparsers(dest="target", metavar="TARGET")
    targets.required = True

    propulsion = targets.add_parser(
        "propulsion", parents=[common], help="Propulsion power at a velocity"
    )
    propulsion.add_argument("--v", type=float, help="Velocity in m/s (default: uav.v_mps)")
    propulsion.add_argument("--r", type=float, help="Station distance in m for E_J")
    propulsion.set_defaults(handler=cmd_eval_propulsion)

    link = targets.add_parser(
        "link", parents=[common], help="Path loss, LoS probability and intercepted power"
    )
    link.add_argument("--d", type=float, help="Link distance in m (default: hover altitude)")
    link.add_argument("--link", choices=LinkType.all_keys(), default="los")
    link.set_defaults(handler=cmd_eval_link)

    service = targets.add_parser("service", parents=[common], help="Service analytics and P_e")
    service.set_defaults(handler=cmd_eval_service)

    coverage = targets.add_parser("coverage", parents=[common], help="Coverage probability row")
    coverage.add_argument("--mode", choices=modes)
    coverage.set_defaults(handler=cmd_eval_coverage)

    formats = ((propulsion, "text"), (link, "text"), (service, "text"), (coverage, "csv"))
    for sub, default in formats:
        sub.add_argument(
            "--format", choices=("text", "csv"), default=default,
            help=f"Output format (default: {default})",
        )

    sweep = commands.add_parser("sweep", parents=[common], help="Run a parameter sweep")
    sweep.add_argument("--spec", required=True, help="Sweep spec document")
    sweep.add_argument("--output", "-o", help="CSV file (default: stdout)")
    sweep.add_argument("--workers", type=int, help="Process count (overrides the spec)")
    sweep.add_argument("--no-banner", action="store_true", help="Omit the timestamp line")
    sweep.set_defaults(handler=cmd_sweep)

    sim = commands.add_parser("simulate", parents=[common], help="Monte Carlo estimates")
    sim.add_argument("--trials", type=int, default=100_000)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--mode", choices=modes)
    sim.add_argument("--workers", type=int, default=1, help="Thread count")
    sim.set_defaults(handler=cmd_simulate)

    fit = commands.add_parser(
        "fit-rectenna", parents=[common], help="Fit a rectenna efficiency polynomial"
    )
    fit.add_argument("--csv", required=True, help="CSV with header power_dbm,efficiency")
    fit.add_argument("--degree", type=int, default=3, help="Polynomial degree (default: 3)")
    fit.add_argument("--eta-fixed", type=float, default=0.5, help="Closed-form efficiency")
    fit.set_defaults(handler=cmd_fit_rectenna)

    reproduce = commands.add_parser(
        "reproduce", parents=[common], help="Reproduce a figure's data and checks"
    )
    reproduce.add_argument("--figure", required=True, help=", ".join(FigureId.all_keys()))
    reproduce.add_argument("--calibration", help="Calibration document (default: bundled)")
    reproduce.add_argument("--output", "-o", help="CSV file (default: <output dir>/<figure>.csv)")
    reproduce.add_argument("--workers", type=int, default=1, help="Process count")
    reproduce.add_argument("--no-banner", action="store_true", help="Omit the timestamp line")
    reproduce.set_defaults(handler=cmd_reproduce)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    if args.command == "reproduce" and not args.no_banner:
        print_banner()

    try:
        status = args.handler(args)
    except UsageError as e:
        console.print(f"[red]Error:[/red] {e}")
        status = EXIT_USAGE
    except (ModelError, RectennaError, QuadratureError, SweepError) as e:
        console.print(f"[red]Evaluation failed:[/red] {e}")
        status = EXIT_EVALUATION

    return status


if __name__ == "__main__":
    sys.exit(main())
