"""Tests for sweep report output."""

from __future__ import annotations

from unittest.mock import patch

import pandas as pd
import pytest
from openpyxl import load_workbook

from dbc_gridsim.config import parse_config
from dbc_gridsim.exceptions import ReportError
from dbc_gridsim.harness import run_sweep
from dbc_gridsim.models import (
    FORMAT_TYPE_SUMMARY,
    REPORT_FORMAT_VERSION,
    STRATEGY_MEAN_COLUMNS,
    SUMMARY_COLUMNS,
)
from dbc_gridsim.report import (
    SweepWorkbook,
    cell_file_name,
    emit_report,
    strategy_means,
)

SWEEP = {
    "seeds": [1, 2],
    "resources": [{"name": "R0", "pes": 2, "mips": 100, "price": 1}],
    "application": {"jobs": 4, "base_mi": 1000, "variation": 0.0},
    "users": {"deadlines": [100], "budgets": [1000]},
}


@pytest.fixture(scope="module")
def sweep():
    return run_sweep(parse_config(SWEEP), parallel=1, rate_window=8)


def test_cell_file_name():
    assert cell_file_name(7) == "cell-0007.tsv"


def test_emit_report_layout(sweep, tmp_path):
    files = emit_report(sweep, tmp_path / "out")

    summary = pd.read_csv(files.summary, sep="\t")
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary["user"].tolist() == ["U0/1", "U0/1"]
    assert summary["completed"].tolist() == [4, 4]
    assert [p.name for p in files.traces] == ["cell-0000.tsv", "cell-0001.tsv"]
    assert len(files.stats) == 2
    assert files.failures is None
    assert files.excel is None
    stats_text = files.stats[0].read_text(encoding="utf-8")
    assert stats_text.startswith("label\ttime\tvalue\n")
    assert "U0.USER.GridletCompletionFactor" in stats_text


def test_summary_uses_lf_and_dot_decimals(sweep, tmp_path):
    files = emit_report(sweep, tmp_path)

    raw = files.summary.read_bytes()
    assert b"\r\n" not in raw
    assert b"\t1000.0\t" in raw


def test_excel_summary(sweep, tmp_path):
    files = emit_report(sweep, tmp_path, excel=True)

    assert files.excel is not None
    workbook = load_workbook(files.excel)
    assert workbook.sheetnames == ["Summary", "By strategy", "_meta"]
    assert workbook["_meta"].sheet_state == "hidden"
    meta = {row[0]: row[1] for row in workbook["_meta"].iter_rows(values_only=True)}
    assert meta["version"] == REPORT_FORMAT_VERSION
    assert meta["format_type"] == FORMAT_TYPE_SUMMARY
    assert meta["cells"] == 2
    assert meta["failed"] == 0
    assert meta["seeds"] == "1,2"


def test_failures_written(tmp_path):
    data = {**SWEEP, "application": {"plan": "absent.plan"}}
    result = run_sweep(parse_config(data, base_dir=tmp_path), parallel=1)

    files = emit_report(result, tmp_path / "out")

    assert files.failures is not None
    failures = pd.read_csv(files.failures, sep="\t")
    assert failures["cell"].tolist() == [0, 1]
    assert files.traces == []


def test_unwritable_directory_raises_report_error(sweep, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")

    with pytest.raises(ReportError, match="could not write report"):
        emit_report(sweep, blocker)


def test_permission_error_propagates(sweep, tmp_path):
    with (
        patch("dbc_gridsim.report.write_tsv", side_effect=PermissionError("locked")),
        pytest.raises(PermissionError, match="locked"),
    ):
        emit_report(sweep, tmp_path)


class TestSweepWorkbook:
    def test_strategy_means(self, sweep):
        means = strategy_means(sweep.summary_frame())

        assert list(means.columns) == STRATEGY_MEAN_COLUMNS
        (row,) = means.to_dict("records")
        assert row["strategy"] == "cost"
        assert row["runs"] == 2
        assert row["completed"] == pytest.approx(4.0)
        assert row["spend"] == pytest.approx(40.0)

    def test_strategy_means_of_empty_summary(self):
        means = strategy_means(pd.DataFrame(columns=SUMMARY_COLUMNS))

        assert means.empty
        assert list(means.columns) == STRATEGY_MEAN_COLUMNS

    def test_failures_get_their_own_sheet(self, tmp_path):
        data = {**SWEEP, "application": {"plan": "absent.plan"}}
        result = run_sweep(parse_config(data, base_dir=tmp_path), parallel=1)

        path = SweepWorkbook().write(result, tmp_path / "sweep.xlsx")

        workbook = load_workbook(path)
        assert workbook.sheetnames == ["Summary", "By strategy", "Failures", "_meta"]
        rows = list(workbook["Failures"].iter_rows(values_only=True))
        assert rows[0][0] == "cell"
        assert len(rows) == 3

    def test_column_widths_are_capped(self, sweep, tmp_path):
        path = SweepWorkbook(max_width=10).write(sweep, tmp_path / "narrow.xlsx")

        sheet = load_workbook(path)["Summary"]
        assert sheet.column_dimensions["A"].width == 6
        assert sheet.column_dimensions["H"].width == 10

    def test_locked_workbook_raises_permission_error(self, sweep, tmp_path):
        with (
            patch("pandas.ExcelWriter", side_effect=PermissionError("locked")),
            pytest.raises(PermissionError, match="locked"),
        ):
            SweepWorkbook().write(sweep, tmp_path / "locked.xlsx")
