"""Table generation functions for benchmark summary and difficulty tables"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import pandas as pd

from config import BENCH_COLUMNS, DIFFICULTY_CUTOFFS, GEOMEAN_SHIFT, SUMMARY_MARKER

SOLVED_STATUSES = ("Optimal", "GapLimit")


def shifted_geometric_mean(values: Iterable[float], shift: float = GEOMEAN_SHIFT) -> float:
    """
    Geometric mean of values + shift, minus shift.

    Args:
        values: Nonnegative numbers, typically solve times in seconds
        shift: Added before and removed after averaging

    Returns:
        exp(mean(log(v + shift))) - shift, NaN for an empty input
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return math.nan
    return float(np.exp(np.mean(np.log(arr + shift))) - shift)


def is_solved(status: Union[str, pd.Series]):
    if isinstance(status, pd.Series):
        return status.isin(SOLVED_STATUSES)
    return status in SOLVED_STATUSES


def create_summary_table(bench_df: pd.DataFrame) -> pd.DataFrame:
    """Create one summary row per solver from per-instance benchmark rows"""
    rows = []
    for solver, group in bench_df.groupby("solver", sort=True):
        solved = is_solved(group["status"])
        unsolved_gaps = group.loc[~solved, "rel_gap"].astype(float)
        unsolved_gaps = unsolved_gaps[np.isfinite(unsolved_gaps)]
        rows.append(
            {
                "solver": solver,
                "instances": int(len(group)),
                "solved": int(solved.sum()),
                "solved_pct": 100.0 * float(solved.mean()) if len(group) else 0.0,
                "time_s": shifted_geometric_mean(group["time_s"].astype(float)),
                "rel_gap": float(unsolved_gaps.mean()) if len(unsolved_gaps) else math.nan,
                "nodes": float(group.loc[solved, "nodes"].mean()) if solved.any() else math.nan,
            }
        )
    return pd.DataFrame(
        rows, columns=["solver", "instances", "solved", "solved_pct", "time_s", "rel_gap", "nodes"]
    )


def create_difficulty_table(
    bench_df: pd.DataFrame, cutoffs: Sequence[float] = DIFFICULTY_CUTOFFS
) -> pd.DataFrame:
    """
    Group instances by how long the fastest solver needed.

    A row for cut-off c covers the instances some solver finished in at least c seconds.
    Rows without any such instance are dropped.
    """
    solved = bench_df[is_solved(bench_df["status"])]
    fastest = solved.groupby("instance")["time_s"].min()
    solvers = sorted(bench_df["solver"].unique())
    rows = []
    for cutoff in cutoffs:
        names = fastest.index[fastest >= cutoff]
        if len(names) == 0:
            continue
        subset = bench_df[bench_df["instance"].isin(names)]
        row = {"solved_after_s": cutoff, "instances": int(len(names))}
        for solver in solvers:
            group = subset[subset["solver"] == solver]
            done = is_solved(group["status"])
            row[f"{solver}_solved_pct"] = 100.0 * float(done.mean()) if len(group) else math.nan
            row[f"{solver}_time_s"] = shifted_geometric_mean(group["time_s"].astype(float))
        rows.append(row)
    return pd.DataFrame(rows)


def summary_rows(bench_df: pd.DataFrame) -> pd.DataFrame:
    """Summary rows in the benchmark CSV schema, marked in the instance column."""
    summary = create_summary_table(bench_df)
    return pd.DataFrame(
        {
            "instance": SUMMARY_MARKER,
            "solver": summary["solver"],
            "status": summary["solved_pct"].map(lambda v: f"{v:.1f}% solved"),
            "time_s": summary["time_s"],
            "objective": math.nan,
            "lower_bound": math.nan,
            "rel_gap": summary["rel_gap"],
            "nodes": summary["nodes"],
            "lmo_calls": math.nan,
        },
        columns=BENCH_COLUMNS,
    )


def read_bench_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read a benchmark CSV, dropping summary rows."""
    df = pd.read_csv(path)
    missing = [c for c in BENCH_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"benchmark CSV {path} lacks columns: {', '.join(missing)}")
    df = df[df["instance"].astype(str) != SUMMARY_MARKER].reset_index(drop=True)
    for col in ("time_s", "objective", "lower_bound", "rel_gap"):
        df[col] = pd.to_numeric(df[col], errors="coerce")
    return df
