"""Tests for benchmark tables and exports"""
import json
import math

import numpy as np
import pandas as pd
import pytest
from openpyxl import load_workbook

from bnb import solve
from config import BENCH_COLUMNS
from conftest import identity_instance
from export_functions import (
    bench_row,
    export_bench_csv,
    export_report_json,
    export_to_excel,
    export_verification_report,
)
from table_generation import (
    create_difficulty_table,
    create_summary_table,
    read_bench_csv,
    shifted_geometric_mean,
    summary_rows,
)
from verify import CheckResult


def bench_frame():
    rows = [
        ("i1", "boscia", "Optimal", 0.0, 1.0, 1.0, 0.0, 3, 10),
        ("i2", "boscia", "Optimal", 3.0, 2.0, 2.0, 0.0, 5, 20),
        ("i3", "boscia", "TimeLimit", 20.0, 2.5, 2.0, 0.25, 90, 400),
        ("i1", "cobnb", "GapLimit", 1.0, 1.0, 1.0, 1e-5, 4, 12),
        ("i2", "cobnb", "TimeLimit", 20.0, 2.2, 2.0, 0.1, 70, 300),
        ("i3", "cobnb", "TimeLimit", 20.0, 3.0, 2.0, 0.5, 80, 350),
    ]
    return pd.DataFrame(rows, columns=BENCH_COLUMNS)


class TestShiftedGeometricMean:
    def test_example(self):
        assert shifted_geometric_mean([0.0, 1.0, 3.0]) == pytest.approx(1.0)

    def test_empty(self):
        assert math.isnan(shifted_geometric_mean([]))

    def test_constant(self):
        assert shifted_geometric_mean([5.0, 5.0], shift=10.0) == pytest.approx(5.0)


class TestSummary:
    def test_per_solver(self):
        summary = create_summary_table(bench_frame()).set_index("solver")
        assert summary.loc["boscia", "solved"] == 2
        assert summary.loc["boscia", "solved_pct"] == pytest.approx(200 / 3)
        assert summary.loc["boscia", "time_s"] == pytest.approx(shifted_geometric_mean([0.0, 3.0, 20.0]))
        assert summary.loc["boscia", "rel_gap"] == pytest.approx(0.25)
        assert summary.loc["cobnb", "nodes"] == pytest.approx(4.0)

    def test_all_timeouts(self):
        df = bench_frame()
        df["status"] = "TimeLimit"
        summary = create_summary_table(df)
        assert (summary["solved_pct"] == 0.0).all()
        assert summary["nodes"].isna().all()

    def test_summary_rows(self):
        rows = summary_rows(bench_frame())
        assert list(rows.columns) == BENCH_COLUMNS
        assert (rows["instance"] == "SUMMARY").all()
        assert rows["status"].tolist() == ["66.7% solved", "33.3% solved"]


class TestDifficulty:
    def test_cutoffs(self):
        table = create_difficulty_table(bench_frame(), cutoffs=(0, 1, 2))
        # i1 fastest 0.0 s, i2 fastest 3.0 s, i3 never solved
        assert table["solved_after_s"].tolist() == [0, 1, 2]
        assert table["instances"].tolist() == [2, 1, 1]
        assert table.loc[1, "boscia_solved_pct"] == pytest.approx(100.0)
        assert table.loc[1, "cobnb_solved_pct"] == pytest.approx(0.0)

    def test_nothing_solved(self):
        df = bench_frame()
        df["status"] = "TimeLimit"
        assert create_difficulty_table(df).empty


class TestBenchCsv:
    def test_round_trip_drops_summary(self, tmp_path):
        path = export_bench_csv(bench_frame(), tmp_path / "bench.csv")
        raw = pd.read_csv(path)
        assert len(raw) == 8
        back = read_bench_csv(path)
        pd.testing.assert_frame_equal(back, bench_frame(), check_dtype=False)

    def test_without_summary(self, tmp_path):
        path = export_bench_csv(bench_frame(), tmp_path / "bench.csv", with_summary=False)
        assert len(pd.read_csv(path)) == 6

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"instance": ["a"]}).to_csv(path, index=False)
        with pytest.raises(ValueError, match="lacks columns"):
            read_bench_csv(path)


class TestExports:
    def test_report_json(self, tmp_path):
        report = solve(identity_instance())
        data = json.loads(export_report_json(report, tmp_path / "r.json").read_text())
        assert data["nodes"] == report.nodes
        assert data["status"] == "Optimal"

    def test_infinite_values_become_null(self, tmp_path):
        report = solve(identity_instance(N=1, u=(1, 1)))
        data = json.loads(export_report_json(report, tmp_path / "r.json").read_text())
        assert data["objective"] is None and data["rel_gap"] is None
        row = bench_row(report)
        assert np.isnan(row["objective"])
        assert row["status"] == "Infeasible"

    def test_verification_report(self, tmp_path):
        results = [CheckResult.upper("a", 0.0, 1e-6), CheckResult.upper("b", 1.0, 1e-6)]
        data = json.loads(export_verification_report(results, tmp_path / "v.json", seed=7, suite="all").read_text())
        assert data["passed"] is False
        assert data["seed"] == 7
        assert [c["check_name"] for c in data["checks"]] == ["a", "b"]

    def test_excel(self, tmp_path):
        path = export_to_excel(bench_frame(), tmp_path / "bench.xlsx")
        wb = load_workbook(path)
        assert wb.sheetnames == ["Instances", "Summary", "Difficulty"]
        ws = wb["Instances"]
        assert ws.cell(row=1, column=1).value == "Per-instance results"
        assert ws.cell(row=1, column=1).font.bold
        assert [ws.cell(row=2, column=c).value for c in range(1, 4)] == ["instance", "solver", "status"]
        assert wb["Summary"].cell(row=3, column=1).value == "boscia"
