"""Command-line entry point: generate, solve, bench and verify"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from tqdm import tqdm

from bnb import SolveReport, SolveStatus, solve
from cobnb import cobnb_solve
from config import (
    BENCH_COLUMNS,
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    DEFAULT_VERIFY_REPORT,
    GRID_M_VALUES,
    GRID_N_DIVISORS,
    GRID_SEEDS,
    SolverParams,
    default_workers,
)
from export_functions import (
    bench_row,
    export_bench_csv,
    export_fw_trace_csv,
    export_node_trace_csv,
    export_report_json,
    export_to_excel,
    export_verification_report,
)
from instance import (
    CRITERION_ALIASES,
    Correlation,
    Criterion,
    CriterionKind,
    GeneratorSpec,
    Instance,
    InstanceError,
    Variant,
    generate,
    load,
    load_instance_dir,
    save,
)
from simplex_lmo import EnumerationLimitError
from utils import Deadline, configure_logging
from verify import SUITES, all_passed, brute_force, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_TIME_LIMIT = 3
EXIT_INFEASIBLE = 4

STATUS_EXIT_CODES = {
    SolveStatus.OPTIMAL: EXIT_OK,
    SolveStatus.GAP_LIMIT: EXIT_OK,
    SolveStatus.TIME_LIMIT: EXIT_TIME_LIMIT,
    SolveStatus.INFEASIBLE: EXIT_INFEASIBLE,
}

SOLVERS = {"boscia": solve, "cobnb": cobnb_solve}


def positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def nonnegative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return value


def resolve_criterion(name: Optional[str], p: Optional[float], current: Criterion) -> Criterion:
    """
    Criterion from --criterion / --p, falling back to the instance's own.

    Raises:
        InstanceError: p incompatible with the criterion
    """
    if name is None and p is None:
        return current
    kind = CRITERION_ALIASES[name] if name is not None else current.kind
    if p is None:
        p = current.p if kind is current.kind and kind.is_trace else 1.0
    if kind is CriterionKind.DOPT:
        return Criterion(kind)
    return Criterion(kind, p)


def brute_report(instance: Instance) -> SolveReport:
    """Brute-force oracle wrapped in the solver report format."""
    clock = Deadline()
    best = brute_force(instance, workers=default_workers())
    if best is None:
        return SolveReport(
            solver="brute", status=SolveStatus.INFEASIBLE, incumbent=None, objective=math.inf,
            lower_bound=math.inf, abs_gap=math.inf, rel_gap=math.inf, nodes=0, lmo_calls=0,
            wall_time=clock.elapsed(), instance=instance.name,
        )
    return SolveReport(
        solver="brute", status=SolveStatus.OPTIMAL, incumbent=best.x, objective=best.value,
        lower_bound=best.value, abs_gap=0.0, rel_gap=0.0, nodes=0, lmo_calls=0,
        wall_time=clock.elapsed(), instance=instance.name,
    )


def params_from_args(args: argparse.Namespace, record_trace: bool = False) -> SolverParams:
    return SolverParams(
        abs_tol=args.abs_tol,
        rel_tol=args.rel_tol,
        time_limit=args.time_limit if args.time_limit is not None else math.inf,
        seed=args.seed,
        workers=args.workers,
        record_trace=record_trace,
    )


def run_solver(name: str, instance: Instance, params: SolverParams) -> SolveReport:
    if name == "brute":
        return brute_report(instance)
    return SOLVERS[name](instance, params)


def cmd_generate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        criterion = resolve_criterion(args.criterion, args.p, Criterion())
    except InstanceError as exc:
        parser.error(str(exc))
    variant = Variant(args.variant)
    if args.grid:
        if args.m is not None or args.n is not None or args.out is not None:
            parser.error("--grid cannot be combined with --m, --n or --out")
        out_dir = Path(args.out_dir or ".")
        correlations = [Correlation(args.corr)] if args.corr else list(Correlation)
        written = 0
        for corr in correlations:
            for m in GRID_M_VALUES:
                for divisor in GRID_N_DIVISORS:
                    for seed in GRID_SEEDS:
                        spec = GeneratorSpec(m, m // divisor, variant, corr, seed, criterion=criterion)
                        inst = generate(spec)
                        save(inst, out_dir / f"{inst.name}.json")
                        written += 1
        logger.info("wrote %d instances to %s", written, out_dir)
        print(f"{written} instances written to {out_dir}")
        return EXIT_OK

    if args.m is None or args.n is None or args.out is None:
        parser.error("generate needs --m, --n and --out (or --grid paper)")
    try:
        spec = GeneratorSpec(
            args.m, args.n, variant, Correlation(args.corr or Correlation.INDEPENDENT.value), args.seed,
            criterion=criterion,
        )
    except InstanceError as exc:
        parser.error(str(exc))
    path = save(generate(spec), args.out)
    print(f"instance written to {path}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        instance = load(args.instance)
        instance = instance.with_criterion(resolve_criterion(args.criterion, args.p, instance.criterion))
        params = params_from_args(args, record_trace=bool(args.trace or args.fw_trace))
    except (InstanceError, FileNotFoundError, ValueError) as exc:
        parser.error(str(exc))
    try:
        report = run_solver(args.solver, instance, params)
    except EnumerationLimitError as exc:
        parser.error(f"brute force not possible: {exc}")

    if args.report:
        export_report_json(report, args.report)
    else:
        print(json.dumps(report.to_dict(), indent=2))
    if args.trace:
        export_node_trace_csv(report.node_trace, args.trace)
    if args.fw_trace:
        export_fw_trace_csv(report.fw_trace, args.fw_trace)
    return STATUS_EXIT_CODES[report.status]


def cmd_bench(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        instances = load_instance_dir(args.instances)
        params = params_from_args(args)
        if args.criterion or args.p is not None:
            instances = [
                inst.with_criterion(resolve_criterion(args.criterion, args.p, inst.criterion)) for inst in instances
            ]
    except (InstanceError, FileNotFoundError, ValueError) as exc:
        parser.error(str(exc))
    solvers = args.solver or ["boscia"]
    jobs = [(inst, name) for inst in instances for name in solvers]
    rows = []
    for inst, name in tqdm(jobs, desc="bench", unit="solve", disable=args.quiet):
        try:
            report = run_solver(name, inst, params)
        except EnumerationLimitError as exc:
            logger.warning("skipping brute force on %s: %s", inst.name, exc)
            continue
        rows.append(bench_row(report))
    bench_df = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    export_bench_csv(bench_df, args.out)
    if args.xlsx:
        export_to_excel(bench_df, args.xlsx)
    print(f"{len(bench_df)} results written to {args.out}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    results = run_suite(args.suite, seed=args.seed)
    path = export_verification_report(results, args.report, seed=args.seed, suite=args.suite)
    failed = [r for r in results if r.status == "fail"]
    for r in failed:
        logger.error("check %s failed: worst %.3g > tolerance %.3g", r.check_name, r.worst_case, r.tolerance)
    if all_passed(results):
        print(f"all {len(results)} checks passed; report at {path}")
        return EXIT_OK
    print(f"{len(failed)} of {len(results)} checks failed; report at {path}")
    return EXIT_VERIFY_FAILED


def _add_criterion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--criterion", choices=sorted(CRITERION_ALIASES), help="override the instance criterion")
    p.add_argument("--p", type=positive_float, help="trace exponent for gti / loggti")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=positive_float, default=None, help="wall-clock limit in seconds")
    p.add_argument("--abs-tol", type=nonnegative_float, default=DEFAULT_ABS_TOL)
    p.add_argument("--rel-tol", type=nonnegative_float, default=DEFAULT_REL_TOL)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=positive_int, default=default_workers())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oedbnb", description="Exact integer optimal experiment design")
    parser.add_argument("--log-level", choices=["debug", "info", "warning", "error"], default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write random instances")
    gen.add_argument("--m", type=positive_int)
    gen.add_argument("--n", type=positive_int)
    gen.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.OPTIMAL.value)
    gen.add_argument("--corr", choices=[c.value for c in Correlation], default=None)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--out", type=Path)
    gen.add_argument("--grid", choices=["paper"], help="emit the full benchmark grid")
    gen.add_argument("--out-dir", type=Path, help="directory for --grid output")
    _add_criterion_flags(gen)
    gen.set_defaults(handler=cmd_generate)

    sol = sub.add_parser("solve", help="solve one instance")
    sol.add_argument("instance", type=Path)
    sol.add_argument("--solver", choices=["boscia", "cobnb", "brute"], default="boscia")
    _add_criterion_flags(sol)
    _add_solver_flags(sol)
    sol.add_argument("--trace", type=Path, help="node trace CSV")
    sol.add_argument("--fw-trace", type=Path, help="root Frank-Wolfe trace CSV")
    sol.add_argument("--report", type=Path, help="report JSON (stdout when omitted)")
    sol.set_defaults(handler=cmd_solve)

    ben = sub.add_parser("bench", help="run solvers over an instance directory")
    ben.add_argument("instances", type=Path)
    ben.add_argument("--solver", action="append", choices=["boscia", "cobnb", "brute"])
    _add_criterion_flags(ben)
    _add_solver_flags(ben)
    ben.add_argument("--out", type=Path, required=True, help="benchmark CSV")
    ben.add_argument("--xlsx", type=Path, help="also write an Excel workbook")
    ben.add_argument("--quiet", action="store_true", help="hide the progress bar")
    ben.set_defaults(handler=cmd_bench)

    ver = sub.add_parser("verify", help="run the property and oracle suites")
    ver.add_argument("--suite", choices=["all", *SUITES], default="all")
    ver.add_argument("--seed", type=int, default=1)
    ver.add_argument("--report", type=Path, default=DEFAULT_VERIFY_REPORT)
    ver.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    return args.handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())
