"""Configuration constants, paths and solver parameters"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

try:
    # Optional dependency; without it only the real environment is read.
    from dotenv import load_dotenv  # type: ignore
except ModuleNotFoundError:  # pragma: no cover
    load_dotenv = None  # type: ignore[assignment]

ROOT_DIR = Path(__file__).resolve().parent

if load_dotenv is not None:
    load_dotenv(ROOT_DIR / ".env")

# Environment variables
LOG_ENV_VAR = "OED_LOG"
WORKERS_ENV_VAR = "OED_WORKERS"

# Termination tolerances
DEFAULT_ABS_TOL = 1e-6
DEFAULT_REL_TOL = 1e-4

# Node tolerance schedule: max(final, root * decay**depth)
DEFAULT_GAP_TOL_FINAL = 1e-6
DEFAULT_TOLERANCE_DECAY = 0.5
ROOT_TOLERANCE_FACTOR = 1e-3

# Frank-Wolfe / exchange loops
DEFAULT_FW_ITER_CAP = 10_000
DEFAULT_CD_ITER_CAP = 10_000
DOMAIN_POINT_ITER_CAP = 1_000
WEIGHT_DROP_TOL = 1e-12
SECANT_MAX_ITER = 40
SECANT_REL_TOL = 1e-8
MAX_HALVINGS = 60
ARMIJO_C = 1e-4

# Integer handling
INTEGRALITY_TOL = 1e-7
INCUMBENT_REL_IMPROVEMENT = 1e-9
DEFAULT_ENUMERATION_CAP = 2_000_000

# Numerical thresholds
PD_PIVOT_REL_TOL = 1e-12
RANK_REL_TOL = 1e-10

# Largest accepted log dual-gap slope per iteration for a linearly converging run
LINEAR_RATE_SLOPE = -1e-3

# Instance generation
DEFAULT_RHO = 0.9
U_RESAMPLE_ATTEMPTS = 100
FUSION_RIDGE = 1e-6

# Benchmark grid and reporting
GRID_M_VALUES = (50, 60, 80, 100, 120)
GRID_N_DIVISORS = (4, 10)
GRID_SEEDS = (1, 2, 3, 4, 5)
GEOMEAN_SHIFT = 1.0
DIFFICULTY_CUTOFFS = (0, 10, 100, 1000, 2000)
BENCH_COLUMNS = [
    "instance",
    "solver",
    "status",
    "time_s",
    "objective",
    "lower_bound",
    "rel_gap",
    "nodes",
    "lmo_calls",
]
SUMMARY_MARKER = "SUMMARY"
DEFAULT_VERIFY_REPORT = ROOT_DIR / "verify_report.json"


def default_workers() -> int:
    """Worker count from OED_WORKERS, 1 when unset or malformed."""
    raw = os.environ.get(WORKERS_ENV_VAR, "").strip()
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


@dataclass(frozen=True)
class SolverParams:
    """Knobs shared by both branch-and-bound solvers.

    gap_tol_root of None means 1e-3 * (1 + |f(x_start)|).
    """

    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    time_limit: float = float("inf")
    gap_tol_root: Optional[float] = None
    gap_tol_final: float = DEFAULT_GAP_TOL_FINAL
    decay: float = DEFAULT_TOLERANCE_DECAY
    fw_iter_cap: int = DEFAULT_FW_ITER_CAP
    cd_iter_cap: int = DEFAULT_CD_ITER_CAP
    seed: int = 1
    workers: int = 1
    prune_during_fw: bool = True
    record_trace: bool = False

    def __post_init__(self) -> None:
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        if self.gap_tol_final <= 0:
            raise ValueError("gap_tol_final must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def replace(self, **changes) -> "SolverParams":
        return replace(self, **changes)
