"""End-to-end tests for the command-line interface"""
import json
import math

import pytest
from openpyxl import load_workbook

from cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_TIME_LIMIT, EXIT_USAGE, main
from conftest import identity_instance
from instance import GeneratorSpec, generate, load, save
from table_generation import read_bench_csv


@pytest.fixture
def identity_file(tmp_path):
    return save(identity_instance(), tmp_path / "identity.json")


def exit_code(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


class TestGenerate:
    def test_single(self, tmp_path):
        out = tmp_path / "one.json"
        assert main(["generate", "--m", "10", "--n", "3", "--variant", "fusion", "--seed", "4", "--out", str(out)]) == EXIT_OK
        inst = load(out)
        assert (inst.m, inst.n) == (10, 3)
        assert inst.C is not None

    def test_grid(self, tmp_path):
        assert main(["generate", "--grid", "paper", "--corr", "independent", "--out-dir", str(tmp_path)]) == EXIT_OK
        files = sorted(tmp_path.glob("*.json"))
        assert len(files) == 50
        assert (tmp_path / "optimal_independent_120_30_5.json").exists()

    def test_criterion_is_stored(self, tmp_path):
        out = tmp_path / "gti.json"
        main(["generate", "--m", "8", "--n", "2", "--criterion", "gti", "--p", "0.5", "--out", str(out)])
        assert load(out).criterion.p == 0.5

    @pytest.mark.parametrize(
        "argv",
        [
            ["generate", "--m", "10", "--n", "0", "--out", "x.json"],
            ["generate", "--m", "3", "--n", "4", "--out", "x.json"],
            ["generate", "--m", "10"],
            ["generate", "--grid", "paper", "--m", "10"],
        ],
    )
    def test_usage_errors(self, argv):
        assert exit_code(argv) == EXIT_USAGE


class TestSolve:
    def test_report_file(self, identity_file, tmp_path):
        report = tmp_path / "report.json"
        trace = tmp_path / "nodes.csv"
        assert main(["solve", str(identity_file), "--report", str(report), "--trace", str(trace)]) == EXIT_OK
        data = json.loads(report.read_text())
        assert data["status"] == "Optimal"
        assert data["instance"] == "identity"
        assert data["objective"] == pytest.approx(-math.log(2))
        assert trace.read_text().splitlines()[0] == "node_id,depth,lower_bound,incumbent,abs_gap,time"

    def test_stdout(self, identity_file, capsys):
        assert main(["solve", str(identity_file), "--solver", "cobnb"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["solver"] == "cobnb"

    def test_brute(self, identity_file, capsys):
        assert main(["solve", str(identity_file), "--solver", "brute"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["incumbent"] == [1, 2]
        assert data["nodes"] == 0

    def test_criterion_override(self, identity_file, capsys):
        main(["solve", str(identity_file), "--criterion", "aopt"])
        assert json.loads(capsys.readouterr().out)["objective"] == pytest.approx(1.5)

    def test_infeasible(self, tmp_path, capsys):
        path = save(identity_instance(N=1, u=(1, 1)), tmp_path / "empty.json")
        assert main(["solve", str(path)]) == EXIT_INFEASIBLE
        assert json.loads(capsys.readouterr().out)["status"] == "Infeasible"

    def test_time_limit(self, tmp_path, capsys):
        path = save(generate(GeneratorSpec(m=100, n=25, seed=1)), tmp_path / "big.json")
        assert main(["solve", str(path), "--time-limit", "0.001"]) == EXIT_TIME_LIMIT

    @pytest.mark.parametrize("extra", [["--p", "0"], ["--time-limit", "-1"], ["--workers", "0"]])
    def test_bad_flags(self, identity_file, extra):
        assert exit_code(["solve", str(identity_file), *extra]) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert exit_code(["solve", str(tmp_path / "nope.json")]) == EXIT_USAGE


def test_bench(tmp_path):
    inst_dir = tmp_path / "instances"
    for seed in (1, 2):
        inst = generate(GeneratorSpec(m=8, n=2, seed=seed))
        save(inst, inst_dir / f"{inst.name}.json")
    out, xlsx = tmp_path / "bench.csv", tmp_path / "bench.xlsx"
    argv = ["bench", str(inst_dir), "--solver", "boscia", "--solver", "cobnb", "--out", str(out), "--xlsx", str(xlsx), "--quiet"]
    assert main(argv) == EXIT_OK

    rows = read_bench_csv(out)
    assert len(rows) == 4
    assert set(rows["status"]) <= {"Optimal", "GapLimit"}
    lines = out.read_text().splitlines()
    assert sum(line.startswith("SUMMARY,") for line in lines) == 2
    assert load_workbook(xlsx).sheetnames == ["Instances", "Summary", "Difficulty"]


def test_bench_empty_dir(tmp_path):
    assert exit_code(["bench", str(tmp_path), "--out", str(tmp_path / "b.csv")]) == EXIT_USAGE


class TestVerify:
    def test_lmo_suite(self, tmp_path):
        report = tmp_path / "verify.json"
        assert main(["verify", "--suite", "lmo", "--seed", "2", "--report", str(report)]) == EXIT_OK
        data = json.loads(report.read_text())
        assert data["suite"] == "lmo" and data["seed"] == 2
        assert data["passed"] is True
        assert {c["check_name"] for c in data["checks"]} >= {"lmo.optimality"}

    def test_unknown_suite(self):
        assert exit_code(["verify", "--suite", "nope"]) == EXIT_USAGE
