"""Command line interface for the grid simulator."""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .config import SweepConfig, load_config, load_preset
from .exceptions import SimulationError
from .harness import SweepResult, iter_cells, run_sweep
from .logging_config import setup_logging
from .plan import PlanAst, binding_table, generate_jobs, job_count, parse_plan
from .presets import preset_names
from .report import ReportFiles, emit_report

logger = logging.getLogger(__name__)
console = Console()


def _add_sweep_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        default="results",
        help="Output directory for the report (default: results)",
    )
    parser.add_argument(
        "--seeds",
        help="Comma-separated seeds replacing the configured ones, e.g. 1,2,3",
    )
    parser.add_argument(
        "--parallel",
        type=int,
        help="Worker processes (default: $DBC_GRIDSIM_PARALLEL or 1)",
    )
    parser.add_argument(
        "--excel",
        action="store_true",
        help="Also write summary.xlsx",
    )


def build_arg_parser() -> argparse.ArgumentParser:
    """Build command line argument parser with run, preset and plan commands."""
    parser = argparse.ArgumentParser(
        prog="dbc-gridsim",
        description="Deadline and budget constrained grid scheduling simulator.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run a sweep described in a TOML file
  %(prog)s run sweep.toml --out results/ --parallel 4

  # Replay a built-in experiment with five seeds
  %(prog)s preset wwg-table-6.2 --seeds 1,2,3,4,5

  # Show a preset's resources without running it
  %(prog)s preset testqueues-4.6 --show

  # Expand a plan file into its job bindings
  %(prog)s plan expand sweep.plan --set angle_degree=1 --set angle_degree=2
        """,
    )
    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        help="Enable verbose logging",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="WARNING",
        help="Set logging level (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run the sweep described by a config file")
    run.add_argument("config", help="TOML sweep configuration")
    _add_sweep_options(run)

    preset = commands.add_parser("preset", help="Run or show a built-in preset")
    preset.add_argument("name", choices=preset_names())
    preset.add_argument(
        "--show", action="store_true", help="Print the preset instead of running it"
    )
    _add_sweep_options(preset)

    plan = commands.add_parser("plan", help="Inspect plan files")
    plan_commands = plan.add_subparsers(dest="plan_command", required=True)
    expand = plan_commands.add_parser("expand", help="List the generated jobs")
    expand.add_argument("file", help="Plan file")
    expand.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="Restrict a parameter to a value; repeat to select several",
    )
    check = plan_commands.add_parser("check", help="Validate a plan file")
    check.add_argument("file", help="Plan file")
    return parser


def parse_seeds(raw: str | None) -> list[int] | None:
    """Parse ``--seeds 1,2,3``.

    Raises:
        ValueError: If any entry is not an integer.
    """
    if raw is None:
        return None
    try:
        seeds = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ValueError(
            f"--seeds must be comma-separated integers, got {raw!r}"
        ) from None
    if not seeds:
        raise ValueError("--seeds must list at least one seed")
    return seeds


def parse_overrides(items: Sequence[str]) -> dict[str, list[str]]:
    """Group repeated ``NAME=VALUE`` options by name, keeping order."""
    overrides: dict[str, list[str]] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ValueError(f"--set expects NAME=VALUE, got {item!r}")
        overrides.setdefault(name.strip(), []).append(value)
    return overrides


def validate_arguments(args: argparse.Namespace) -> None:
    """Validate command line arguments, raising on any invalid combination.

    Raises:
        FileNotFoundError: If a config or plan path does not exist.
        ValueError: If the worker count or seeds are invalid.
    """
    for attr in ("config", "file"):
        path = getattr(args, attr, None)
        if path is not None and not Path(path).is_file():
            raise FileNotFoundError(f"Input file not found: {path}")
    if getattr(args, "parallel", None) is not None and args.parallel < 1:
        raise ValueError("--parallel must be at least 1")
    parse_seeds(getattr(args, "seeds", None))


def print_preset(name: str, config: SweepConfig) -> None:
    table = Table(title=f"Preset {name}", header_style="bold magenta")
    for column in ("Resource", "PEs", "MIPS", "Policy", "G$/PE", "G$/MI", "Location"):
        table.add_column(column)
    for spec, resource in zip(config.resources, config.characteristics(), strict=True):
        table.add_row(
            spec.name,
            str(resource.num_pes),
            f"{resource.mips_per_pe:g}",
            resource.policy.value,
            f"{spec.price:g}",
            f"{resource.cost_per_mi:.5f}",
            spec.location,
        )
    console.print(table)

    users = config.users
    app = config.application
    console.print(
        Panel(
            f"[cyan]Jobs:[/cyan] {app.jobs} x {app.base_mi:g} MI "
            f"(variation {app.variation:g})\n"
            f"[cyan]Users:[/cyan] {users.counts}\n"
            f"[cyan]Strategies:[/cyan] {[s.value for s in users.strategies]}\n"
            f"[cyan]Deadlines:[/cyan] {users.deadline_grid()}\n"
            f"[cyan]Budgets:[/cyan] {users.budget_grid()}\n"
            f"[cyan]Seeds:[/cyan] {config.seeds}\n"
            f"[cyan]Cells:[/cyan] {len(iter_cells(config))}",
            title="Sweep",
            border_style="cyan",
        )
    )


def get_sweep_summary(result: SweepResult) -> dict[str, Any]:
    """Aggregate per-strategy completion and spend for terminal display."""
    frame = result.summary_frame()
    by_strategy = pd.DataFrame()
    if not frame.empty:
        by_strategy = (
            frame.groupby("strategy", sort=True)
            .agg(
                rows=("completed", "size"),
                completed=("completed", "mean"),
                spend=("spend", "mean"),
                termination=("termination_time", "mean"),
            )
            .reset_index()
        )
    return {
        "cells": len(result.cells),
        "failed": len(result.failures),
        "rows": len(frame),
        "by_strategy": by_strategy,
    }


def print_summary(files: ReportFiles, summary: dict[str, Any]) -> None:
    """Print the final sweep summary panel."""
    console.print()
    console.print(Panel("[bold]Sweep Summary[/bold]", border_style="green"))

    table = Table(show_header=False, box=None, padding=(0, 2))
    table.add_column(style="cyan", no_wrap=True)
    table.add_column(style="white")
    table.add_row("Cells:", str(summary["cells"]))
    table.add_row(
        "Failed cells:",
        f"[red]{summary['failed']}[/red]" if summary["failed"] else "0",
    )
    table.add_row("Summary rows:", str(summary["rows"]))
    console.print(table)

    by_strategy: pd.DataFrame = summary["by_strategy"]
    if not by_strategy.empty:
        strategies = Table(header_style="bold magenta")
        for column in ("Strategy", "Rows", "Mean completed", "Mean spend", "Mean end"):
            strategies.add_column(column)
        for row in by_strategy.itertuples(index=False):
            strategies.add_row(
                str(row.strategy),
                str(row.rows),
                f"{row.completed:.2f}",
                f"{row.spend:.2f}",
                f"{row.termination:.2f}",
            )
        console.print(strategies)

    console.print()
    console.print(f"[green]Summary saved to:[/green] {files.summary}")
    if files.failures is not None:
        console.print(f"[yellow]Failures listed in:[/yellow] {files.failures}")
    if files.excel is not None:
        console.print(f"[green]Workbook saved to:[/green] {files.excel}")


def run_configured(config: SweepConfig, args: argparse.Namespace) -> int:
    """Run a sweep and write its report; returns the process exit code."""
    seeds = parse_seeds(args.seeds)
    if seeds is not None:
        config = config.model_copy(update={"seeds": seeds})
    cell_count = len(iter_cells(config))
    console.print(f"[bold cyan]Running {cell_count} cell(s)[/bold cyan]")
    with console.status("Simulating..."):
        result = run_sweep(config, parallel=args.parallel)
    files = emit_report(result, args.out, excel=args.excel)
    print_summary(files, get_sweep_summary(result))
    if result.failures:
        console.print(
            f"[red]Error:[/red] {len(result.failures)} cell(s) failed; "
            "see failures.tsv"
        )
        return 1
    console.print("[bold green]Done.[/bold green]")
    return 0


def _read_plan(path: str) -> PlanAst:
    return parse_plan(Path(path).read_text(encoding="utf-8"))


def handle_plan(args: argparse.Namespace) -> int:
    ast = _read_plan(args.file)
    if args.plan_command == "check":
        console.print(
            f"[green]OK[/green] {args.file}: {len(ast.parameters)} parameter(s), "
            f"{len(ast.tasks)} task(s), {job_count(ast)} job(s)"
        )
        return 0

    bindings = generate_jobs(ast, parse_overrides(args.set) or None)
    header, *rows = binding_table(ast, bindings)
    table = Table(title=f"{len(rows)} job(s)", header_style="bold magenta")
    for column in header:
        table.add_column(column)
    for row in rows:
        table.add_row(*row)
    console.print(table)
    return 0


def dispatch(args: argparse.Namespace) -> int:
    match args.command:
        case "run":
            return run_configured(load_config(args.config), args)
        case "preset":
            config = load_preset(args.name)
            if args.show:
                print_preset(args.name, config)
                return 0
            return run_configured(config, args)
        case "plan":
            return handle_plan(args)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv: Sequence[str] | None = None) -> None:
    """Main entry point for the dbc-gridsim CLI.

    Exits with status 1 on any error, and when any sweep cell failed.
    """
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level, verbose=args.verbose)

    try:
        validate_arguments(args)
        exit_code = dispatch(args)
    except (FileNotFoundError, ValueError) as e:
        console.print(f"[red]Error:[/red] {e}")
        sys.exit(1)
    except PermissionError as e:
        console.print(f"[red]Permission error:[/red] {e}")
        sys.exit(1)
    except SimulationError as e:
        console.print(f"[red]Processing error:[/red] {e}")
        sys.exit(1)
    except Exception as e:
        console.print(f"[red]Unexpected error:[/red] {e}")
        if args.verbose:
            traceback.print_exc()
        sys.exit(1)
    if exit_code:
        sys.exit(exit_code)


if __name__ == "__main__":
    main()
