"""Sweep report output: tab-separated tables and an optional Excel summary.

Layout under the output directory:

    summary.tsv              one row per user per successful cell
    traces/cell-NNNN.tsv     broker schedule trace of each successful cell
    stats/cell-NNNN.tsv      statistics records and summary of each cell
    failures.tsv             only when at least one cell failed
    summary.xlsx             only when requested
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path

import pandas as pd
from openpyxl.utils import get_column_letter

from .exceptions import ReportError
from .harness import SweepResult
from .models import (
    FORMAT_TYPE_SUMMARY,
    REPORT_FORMAT_VERSION,
    STRATEGY_MEAN_COLUMNS,
)
from .stats import dump

logger = logging.getLogger(__name__)

SHEET_SUMMARY = "Summary"
SHEET_STRATEGY_MEANS = "By strategy"
SHEET_FAILURES = "Failures"
SHEET_META = "_meta"


@dataclass
class ReportFiles:
    summary: Path
    traces: list[Path] = field(default_factory=list)
    stats: list[Path] = field(default_factory=list)
    failures: Path | None = None
    excel: Path | None = None


def cell_file_name(index: int) -> str:
    return f"cell-{index:04d}.tsv"


def write_tsv(df: pd.DataFrame, path: Path) -> None:
    """Tab-separated, LF line endings, '.' as decimal separator."""
    df.to_csv(path, sep="\t", index=False, lineterminator="\n")


def strategy_means(summary: pd.DataFrame) -> pd.DataFrame:
    """Mean outcome per (strategy, deadline, budget) over users and seeds."""
    if summary.empty:
        return pd.DataFrame(columns=STRATEGY_MEAN_COLUMNS)
    return summary.groupby(["strategy", "deadline", "budget"], as_index=False).agg(
        runs=("user", "count"),
        completed=("completed", "mean"),
        spend=("spend", "mean"),
        termination_time=("termination_time", "mean"),
    )


class SweepWorkbook:
    """Writes a sweep to ``.xlsx``: per-user rows, strategy means, failures.

    A hidden ``_meta`` sheet carries the format version and the sweep's
    cell counts for tools that read the workbook back.
    """

    def __init__(self, max_width: int = 40) -> None:
        self.max_width = max_width

    def sheets(self, result: SweepResult) -> dict[str, pd.DataFrame]:
        summary = result.summary_frame()
        sheets = {
            SHEET_SUMMARY: summary,
            SHEET_STRATEGY_MEANS: strategy_means(summary),
        }
        if result.failures:
            sheets[SHEET_FAILURES] = result.failure_frame()
        return sheets

    def write(self, result: SweepResult, file_path: str | Path) -> Path:
        """Raises PermissionError when the workbook is open elsewhere."""
        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with pd.ExcelWriter(file_path, engine="openpyxl") as writer:
                for name, frame in self.sheets(result).items():
                    frame.to_excel(writer, sheet_name=name, index=False)
                    self._size_columns(writer, name, frame)
                self._write_meta(writer, result)
        except PermissionError:
            logger.error(
                "Permission denied writing to %s. Is the file open?", file_path
            )
            raise
        logger.info("Wrote sweep workbook %s", file_path)
        return file_path

    @staticmethod
    def _write_meta(writer: pd.ExcelWriter, result: SweepResult) -> None:
        seeds = sorted({cell.cell.seed for cell in result.cells})
        meta = pd.DataFrame({
            "key": ["version", "format_type", "cells", "failed", "seeds", "generated"],
            "value": [
                REPORT_FORMAT_VERSION,
                FORMAT_TYPE_SUMMARY,
                len(result.cells),
                len(result.failures),
                ",".join(str(seed) for seed in seeds),
                datetime.now(tz=UTC).isoformat(),
            ],
        })
        meta.to_excel(writer, sheet_name=SHEET_META, index=False)
        writer.sheets[SHEET_META].sheet_state = "hidden"

    def _size_columns(
        self, writer: pd.ExcelWriter, sheet_name: str, frame: pd.DataFrame
    ) -> None:
        worksheet = writer.sheets[sheet_name]
        for idx, column in enumerate(frame.columns, start=1):
            lengths = [len(str(column))] + [len(str(v)) for v in frame[column]]
            worksheet.column_dimensions[get_column_letter(idx)].width = min(
                max(lengths) + 2, self.max_width
            )



def emit_report(
    result: SweepResult, out_dir: str | Path, *, excel: bool = False
) -> ReportFiles:
    """Write the sweep's summary, per-cell traces and statistics.

    Raises:
        ReportError: If any output file cannot be written.
    """
    out_dir = Path(out_dir)
    try:
        traces_dir = out_dir / "traces"
        stats_dir = out_dir / "stats"
        traces_dir.mkdir(parents=True, exist_ok=True)
        stats_dir.mkdir(parents=True, exist_ok=True)

        summary = result.summary_frame()
        files = ReportFiles(summary=out_dir / "summary.tsv")
        write_tsv(summary, files.summary)

        for cell in result.cells:
            if not cell.ok:
                continue
            name = cell_file_name(cell.cell.index)
            trace_path = traces_dir / name
            write_tsv(cell.trace_frame(), trace_path)
            files.traces.append(trace_path)
            if cell.statistics is not None:
                stats_path = stats_dir / name
                with stats_path.open("w", encoding="utf-8", newline="") as stream:
                    dump(cell.statistics, stream)
                files.stats.append(stats_path)

        if result.failures:
            files.failures = out_dir / "failures.tsv"
            write_tsv(result.failure_frame(), files.failures)

        if excel:
            files.excel = out_dir / "summary.xlsx"
            SweepWorkbook().write(result, files.excel)
    except PermissionError:
        raise
    except OSError as e:
        logger.error("Could not write report to %s: %s", out_dir, e)
        raise ReportError(f"could not write report to {out_dir}: {e}") from e

    logger.info(
        "Report written to %s: %d summary row(s), %d trace file(s)",
        out_dir,
        len(summary),
        len(files.traces),
    )
    return files
