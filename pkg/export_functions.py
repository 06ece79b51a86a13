"""Export functions for solve reports, traces, benchmark CSVs and Excel workbooks"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Alignment, Font
from openpyxl.utils import get_column_letter

from config import BENCH_COLUMNS
from table_generation import create_difficulty_table, create_summary_table, summary_rows

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

NODE_TRACE_COLUMNS = ["node_id", "depth", "lower_bound", "incumbent", "abs_gap", "time"]
FW_TRACE_COLUMNS = ["iteration", "primal", "dual_gap"]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(data, path: PathLike) -> Path:
    path = _prepare(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, allow_nan=False)
        f.write("\n")
    return path


def export_report_json(report, path: PathLike) -> Path:
    """Write a SolveReport as JSON; non-finite numbers become null."""
    path = _write_json(report.to_dict(), path)
    logger.info("report written to %s", path)
    return path


def _write_rows(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = _prepare(path)
    pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False, lineterminator="\n")
    return path


def export_node_trace_csv(node_trace: Sequence[dict], path: PathLike) -> Path:
    return _write_rows(path, NODE_TRACE_COLUMNS, ([entry[c] for c in NODE_TRACE_COLUMNS] for entry in node_trace))


def export_fw_trace_csv(fw_trace: Sequence[tuple[int, float, float]], path: PathLike) -> Path:
    return _write_rows(path, FW_TRACE_COLUMNS, fw_trace)


def bench_row(report) -> dict:
    """Per-instance benchmark row in BENCH_COLUMNS order."""
    return {
        "instance": report.instance,
        "solver": report.solver,
        "status": report.status.value,
        "time_s": report.wall_time,
        "objective": report.objective if math.isfinite(report.objective) else math.nan,
        "lower_bound": report.lower_bound if math.isfinite(report.lower_bound) else math.nan,
        "rel_gap": report.rel_gap,
        "nodes": report.nodes,
        "lmo_calls": report.lmo_calls,
    }


def export_bench_csv(bench_df: pd.DataFrame, path: PathLike, with_summary: bool = True) -> Path:
    """
    Write per-instance rows followed by one summary row per solver.

    Args:
        bench_df: Rows with BENCH_COLUMNS
        path: Output CSV
        with_summary: Append the shifted-geomean summary rows
    """
    frame = bench_df[BENCH_COLUMNS]
    if with_summary and not frame.empty:
        frame = pd.concat([frame, summary_rows(frame)], ignore_index=True)
    path = _prepare(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("benchmark CSV written to %s (%d rows)", path, len(frame))
    return path


def export_verification_report(results, path: PathLike, seed: Optional[int] = None, suite: str = "all") -> Path:
    """Write check results as {suite, seed, passed, checks: [{check_name, status, worst_case, tolerance}]}."""
    checks = [r.to_dict() for r in results]
    data = {
        "suite": suite,
        "seed": seed,
        "passed": all(c["status"] != "fail" for c in checks),
        "checks": checks,
    }
    return _write_json(data, path)


def add_table_to_sheet(ws, table_name: str, df: pd.DataFrame, start_row: int, start_col: int = 1) -> int:
    """Add a titled table to the sheet and return the next free row."""
    if df is None or df.empty:
        return start_row
    ws.cell(row=start_row, column=start_col, value=table_name)
    ws.cell(row=start_row, column=start_col).font = Font(bold=True, size=12)
    start_row += 1

    for col_idx, col_name in enumerate(df.columns, start=1):
        cell = ws.cell(row=start_row, column=start_col + col_idx - 1, value=col_name)
        cell.font = Font(bold=True)
        cell.alignment = Alignment(horizontal="center", vertical="center")
    start_row += 1

    for _, row_data in df.iterrows():
        for col_idx, col_name in enumerate(df.columns, start=1):
            value = row_data[col_name]
            if isinstance(value, float) and not math.isfinite(value):
                value = None
            elif hasattr(value, "item"):
                value = value.item()
            cell = ws.cell(row=start_row, column=start_col + col_idx - 1, value=value)
            cell.alignment = Alignment(horizontal="center", vertical="center")
            if col_name.endswith("_pct") and isinstance(value, (int, float)):
                cell.number_format = "0.0"
            elif col_name in ("time_s", "rel_gap") or col_name.endswith("_time_s"):
                cell.number_format = "0.000"
        start_row += 1

    for col_idx, col_name in enumerate(df.columns, start=1):
        c = start_col + col_idx - 1
        col_series = df[col_name].astype(str)
        max_len = int(col_series.str.len().max()) if len(col_series) else 0
        max_length = max(len(str(col_name)), max_len)
        ws.column_dimensions[get_column_letter(c)].width = min(max_length + 2, 50)

    return start_row + 1


def export_to_excel(bench_df: pd.DataFrame, path: PathLike) -> Path:
    """Export benchmark rows with sheets: Instances, Summary, Difficulty"""
    wb = Workbook()
    wb.remove(wb.active)

    ws = wb.create_sheet("Instances")
    add_table_to_sheet(ws, "Per-instance results", bench_df[BENCH_COLUMNS], 1)

    ws = wb.create_sheet("Summary")
    add_table_to_sheet(ws, "Solver summary (shifted geometric mean time)", create_summary_table(bench_df), 1)

    ws = wb.create_sheet("Difficulty")
    difficulty = create_difficulty_table(bench_df)
    if difficulty.empty:
        ws.cell(row=1, column=1, value="No instance was solved by any solver").font = Font(bold=True)
    else:
        add_table_to_sheet(ws, "Solved after (s)", difficulty, 1)

    path = _prepare(path)
    wb.save(path)
    logger.info("workbook written to %s", path)
    return path
