"""Oracles, derivative checks and seeded property suites"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.optimize

from config import DEFAULT_ENUMERATION_CAP, FUSION_RIDGE, LINEAR_RATE_SLOPE, SolverParams
from criteria import (
    DomainError,
    Objective,
    eig_bound,
    fusion_constants,
    gsc_witness,
    local_constants,
    log_trace_curvature,
    log_trace_curvature_bound,
    logdet_curvature,
    trace_power_curvature,
)
from instance import Correlation, Criterion, CriterionKind, GeneratorSpec, Instance, Variant, generate
from simplex_lmo import BoundBox, enumerate_integer_points, lmo, round_to_feasible
from utils import make_rng

logger = logging.getLogger(__name__)

# Tight tolerances so solver objectives can be compared with the oracle
ORACLE_PARAMS = SolverParams(abs_tol=1e-7, rel_tol=1e-9, gap_tol_final=1e-8, record_trace=True)

ORACLE_CRITERIA = (
    Criterion(CriterionKind.DOPT),
    Criterion(CriterionKind.AOPT),
    Criterion(CriterionKind.LOGAOPT),
    Criterion(CriterionKind.GTIOPT, 0.5),
)

DERIVATIVE_CRITERIA = ORACLE_CRITERIA + (Criterion(CriterionKind.LOGGTIOPT, 0.5),)


class SliceTooShortError(ValueError):
    """Fewer than 20 positive gaps to fit."""


class ProbeDomainError(ValueError):
    """Finite-difference probes leave the domain even after shrinking."""


@dataclass
class BruteForceResult:
    x: np.ndarray
    value: float


@dataclass
class CheckResult:
    check_name: str
    status: str
    worst_case: float
    tolerance: float

    @classmethod
    def upper(cls, name: str, worst: float, tolerance: float) -> "CheckResult":
        """Passes when worst <= tolerance."""
        status = "pass" if worst <= tolerance else "fail"
        return cls(name, status, float(worst), float(tolerance))

    def to_dict(self) -> dict:
        data = asdict(self)
        if not math.isfinite(data["worst_case"]):
            data["worst_case"] = None
        return data


def _better(value: float, x: np.ndarray, best: Optional[BruteForceResult]) -> bool:
    if best is None:
        return True
    tie = 1e-12 * (1.0 + abs(best.value))
    if value < best.value - tie:
        return True
    if value <= best.value + tie:
        return tuple(x) < tuple(best.x)
    return False


def _scan(obj: Objective, box: BoundBox, cap: int) -> Optional[BruteForceResult]:
    best: Optional[BruteForceResult] = None
    for x in enumerate_integer_points(box, cap):
        value = obj.value_or_inf(x)
        if math.isfinite(value) and _better(value, x, best):
            best = BruteForceResult(x.copy(), value)
    return best


def brute_force(
    instance: Instance, cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1
) -> Optional[BruteForceResult]:
    """
    Exact minimizer over all domain-feasible integer points.

    Enumeration is sharded by the value of the first coordinate; shards are
    reduced by (value, lexicographic point) so the result is independent of workers.

    Returns:
        Best point with ties broken lexicographically, or None when every point is singular

    Raises:
        EnumerationLimitError: More than cap points
    """
    obj = Objective(instance)
    box = BoundBox.from_instance(instance)
    box.check()
    # fail fast on the cap before sharding
    next(iter(enumerate_integer_points(box, cap)), None)
    shards = []
    for first in range(int(box.l[0]), int(box.u[0]) + 1):
        l, u = box.l.copy(), box.u.copy()
        l[0] = u[0] = first
        shard = BoundBox(l, u, box.N)
        if shard.is_feasible():
            shards.append(shard)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(lambda s: _scan(obj, s, cap), shards))
    else:
        partial = [_scan(obj, s, cap) for s in shards]
    best: Optional[BruteForceResult] = None
    for res in partial:
        if res is not None and _better(res.value, res.x, best):
            best = res
    return best


def fd_check(obj, x: np.ndarray, order: int = 1, max_shrink: int = 4) -> float:
    """
    Largest deviation between analytic and central-difference derivatives.

    Args:
        obj: Objective with value / gradient / hessian
        x: Domain-feasible interior point
        order: 1 checks the gradient, 2 the Hessian
        max_shrink: Step halvings allowed when a probe leaves the domain

    Returns:
        max |fd - analytic| / max |analytic|
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x = np.asarray(x, dtype=float)
    h = 1e-5 * (1.0 + np.abs(x))
    for _ in range(max_shrink + 1):
        try:
            if order == 1:
                analytic = obj.gradient(x)
                numeric = np.empty_like(x)
                for i in range(x.size):
                    e = np.zeros_like(x)
                    e[i] = h[i]
                    numeric[i] = (obj.value(x + e) - obj.value(x - e)) / (2 * h[i])
            else:
                analytic = obj.hessian(x)
                numeric = np.empty_like(analytic)
                for i in range(x.size):
                    e = np.zeros_like(x)
                    e[i] = h[i]
                    numeric[:, i] = (obj.gradient(x + e) - obj.gradient(x - e)) / (2 * h[i])
        except DomainError:
            h = h / 2
            continue
        scale = max(float(np.max(np.abs(analytic))), np.finfo(float).tiny)
        return float(np.max(np.abs(numeric - analytic))) / scale
    raise ProbeDomainError(f"finite-difference probes leave the domain after {max_shrink} shrinks")


def slope_fit(trace: Iterable[tuple[float, float]]) -> float:
    """
    Least-squares slope of log(gap) against iteration over the last 70% of points.

    Raises:
        SliceTooShortError: Fewer than 20 positive gaps
    """
    points = [(float(t), float(g)) for t, g in trace if g > 0]
    if len(points) < 20:
        raise SliceTooShortError(f"need at least 20 positive gaps, got {len(points)}")
    tail = points[int(math.floor(0.3 * len(points))):]
    t = np.array([p[0] for p in tail])
    g = np.log(np.array([p[1] for p in tail]))
    return float(np.polyfit(t, g, 1)[0])


def bounded_argmin(fun: Callable[[float], float], a: float, b: float, xatol: float = 1e-10) -> float:
    """Minimizer of a unimodal scalar function on [a, b]."""
    res = scipy.optimize.minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": xatol})
    return float(res.x)


def tiny_instance(
    rng: np.random.Generator,
    criterion: Criterion = Criterion(),
    variant: Variant = Variant.OPTIMAL,
) -> Instance:
    """Random instance small enough for brute force: m in [5,9], n in [2,3], N in [n, n+3]."""
    m = int(rng.integers(5, 10))
    n = int(rng.integers(2, 4))
    N = int(rng.integers(n, n + 4))
    A = rng.standard_normal((m, n))
    while True:
        u = rng.integers(1, 4, size=m)
        if u.sum() >= N:
            break
    C = None
    if Variant(variant) is Variant.FUSION:
        B = rng.standard_normal((n, n))
        gram = B.T @ B
        C = gram + FUSION_RIDGE * np.trace(gram) / n * np.eye(n)
        C = 0.5 * (C + C.T)
    return Instance(A=A, N=N, l=np.zeros(m, dtype=np.int64), u=u, C=C, criterion=criterion, name="tiny")


def random_feasible_point(rng: np.random.Generator, box: BoundBox, vertices: int = 4) -> np.ndarray:
    """Random convex combination of LMO vertices for random directions."""
    weights = rng.dirichlet(np.ones(vertices))
    points = np.vstack([lmo(rng.standard_normal(box.m), box) for _ in range(vertices)]).astype(float)
    return weights @ points


def random_pd(rng: np.random.Generator, n: int, alpha: float) -> np.ndarray:
    """Random PD matrix with spectrum in [0.05 alpha, alpha]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(0.05 * alpha, alpha, size=n)
    lam[int(rng.integers(n))] = alpha
    V = (Q * lam) @ Q.T
    return 0.5 * (V + V.T)


def random_unit_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    B = rng.standard_normal((n, n))
    B = 0.5 * (B + B.T)
    return B / np.linalg.norm(B, "fro")


def _interior_point(rng: np.random.Generator, obj: Objective) -> np.ndarray:
    while True:
        x = rng.uniform(0.5, 2.0, size=obj.instance.m)
        if obj.is_domain_feasible(x):
            return x


def _criterion_label(c: Criterion) -> str:
    return c.kind.value if not c.kind.is_trace or c.kind in (CriterionKind.AOPT, CriterionKind.LOGAOPT) else f"{c.kind.value}(p={c.p:g})"


def suite_criteria(seed: int = 1, points: int = 100, instances: int = 20, samples: int = 200) -> list[CheckResult]:
    rng = make_rng(seed)
    results: list[CheckResult] = []

    for variant in Variant:
        for crit in DERIVATIVE_CRITERIA:
            worst1 = worst2 = worst_convex = 0.0
            for _ in range(points):
                inst = tiny_instance(rng, crit, variant)
                obj = Objective(inst)
                x = _interior_point(rng, obj)
                worst1 = max(worst1, fd_check(obj, x, 1))
                worst2 = max(worst2, fd_check(obj, x, 2))
                y = _interior_point(rng, obj)
                t = float(rng.uniform(0.05, 0.95))
                lhs = obj.value(t * x + (1 - t) * y)
                rhs = t * obj.value(x) + (1 - t) * obj.value(y)
                worst_convex = max(worst_convex, lhs - rhs)
            label = f"{_criterion_label(crit)}/{variant.value}"
            results.append(CheckResult.upper(f"criteria.gradient_fd[{label}]", worst1, 1e-5))
            results.append(CheckResult.upper(f"criteria.hessian_fd[{label}]", worst2, 1e-5))
            results.append(CheckResult.upper(f"criteria.convexity[{label}]", worst_convex, 1e-9))

    worst = {"L_fF": -math.inf, "L_gF": -math.inf, "L_kF": -math.inf, "weyl": -math.inf}
    for k in range(instances):
        spec = GeneratorSpec(m=int(rng.integers(8, 31)), n=int(rng.integers(2, 6)), variant=Variant.FUSION, seed=seed * 1000 + k)
        inst = generate(spec)
        box = BoundBox.from_instance(inst)
        consts = fusion_constants(inst, p=1.0)
        objs = {
            "L_fF": Objective(inst, Criterion(CriterionKind.DOPT)),
            "L_gF": Objective(inst, Criterion(CriterionKind.AOPT)),
            "L_kF": Objective(inst, Criterion(CriterionKind.LOGAOPT)),
        }
        lam_min_C = float(np.linalg.eigvalsh(inst.C)[0])
        for _ in range(50):
            x = random_feasible_point(rng, box)
            for key, obj in objs.items():
                top = float(np.linalg.eigvalsh(obj.hessian(x))[-1])
                worst[key] = max(worst[key], top / getattr(consts, key) - 1.0)
            lam = float(np.linalg.eigvalsh(obj.info(x).X)[0])
            worst["weyl"] = max(worst["weyl"], (lam_min_C - lam) / lam_min_C)
    for key in ("L_fF", "L_gF", "L_kF"):
        results.append(CheckResult.upper(f"criteria.lipschitz[{key}]", worst[key], 1e-8))
    results.append(CheckResult.upper("criteria.fusion_weyl", worst["weyl"], 1e-12))

    worst_eig = -math.inf
    for k in range(1000):
        if k % 50 == 0:
            corr = Correlation.CORRELATED if k % 100 else Correlation.INDEPENDENT
            inst = generate(GeneratorSpec(m=20, n=5, correlation=corr, seed=seed * 7919 + k))
            box = BoundBox.from_instance(inst)
            bound = eig_bound(inst)
        x = random_feasible_point(rng, box)
        top = float(np.linalg.eigvalsh((inst.A.T * x) @ inst.A)[-1])
        worst_eig = max(worst_eig, (top - bound) / bound)
    results.append(CheckResult.upper("criteria.eig_bound", worst_eig, 1e-12))

    worst_local = -math.inf
    for p in (0.5, 1.0, 2.0):
        for _ in range(instances):
            inst = tiny_instance(rng, Criterion(CriterionKind.GTIOPT, p))
            x0 = _interior_point(rng, Objective(inst))
            top = float(np.linalg.eigvalsh(Objective(inst).hessian(x0))[-1])
            worst_local = max(worst_local, top / local_constants(inst, x0).L_g - 1.0)
    results.append(CheckResult.upper("criteria.local_L_g", worst_local, 1e-9))

    for p in (0.5, 1.0, 2.0):
        inst = tiny_instance(rng, Criterion(CriterionKind.GTIOPT, p))
        obj = Objective(inst)
        worst_gsc = -math.inf
        for _ in range(samples):
            n = int(rng.integers(2, 6))
            alpha = float(rng.uniform(0.5, 5.0))
            V = random_pd(rng, n, alpha)
            U = rng.standard_normal((n, n))
            U = 0.5 * (U + U.T)
            w = gsc_witness(obj, V, U, alpha=alpha)
            worst_gsc = max(worst_gsc, (w.lhs - w.rhs) / max(w.rhs, np.finfo(float).tiny))
        results.append(CheckResult.upper(f"criteria.gsc[p={p:g}]", worst_gsc, 1e-12))

    worst_sc = {"logdet": -math.inf, "trace_power": -math.inf, "log_trace": -math.inf}
    for _ in range(samples):
        n = int(rng.integers(2, 6))
        alpha = float(rng.uniform(0.5, 5.0))
        p = float(rng.choice([0.5, 1.0, 2.0]))
        Apd = random_pd(rng, n, alpha)
        B = random_unit_symmetric(rng, n)
        worst_sc["logdet"] = max(worst_sc["logdet"], 1.0 / alpha**2 - logdet_curvature(Apd, B))
        worst_sc["trace_power"] = max(
            worst_sc["trace_power"], p * (p + 1) / alpha ** (p + 2) - trace_power_curvature(Apd, B, p)
        )
        worst_sc["log_trace"] = max(
            worst_sc["log_trace"], log_trace_curvature_bound(Apd, p) - log_trace_curvature(Apd, B, p)
        )
    for key, value in worst_sc.items():
        results.append(CheckResult.upper(f"criteria.strong_convexity[{key}]", value, 1e-9))
    return results


def _random_box(rng: np.random.Generator, m: int) -> BoundBox:
    l = rng.integers(0, 2, size=m)
    u = l + rng.integers(0, 3, size=m)
    N = int(rng.integers(l.sum(), u.sum() + 1))
    return BoundBox(l, u, N)


def suite_lmo(seed: int = 1, trials: int = 1000) -> list[CheckResult]:
    rng = make_rng(seed)
    worst_opt = worst_feas = worst_round = 0.0
    for _ in range(trials):
        m = int(rng.integers(2, 9))
        box = _random_box(rng, m)
        d = rng.standard_normal(m)
        x = lmo(d, box)
        best = float(d @ x)
        points = np.vstack(list(enumerate_integer_points(box))).astype(float)
        values = points @ d
        scale = 1e-12 * (1 + np.abs(values).max())
        worst_opt = max(worst_opt, best - float(values.min()) - scale)
        weights = rng.dirichlet(np.ones(points.shape[0]))
        frac = weights @ points
        worst_opt = max(worst_opt, best - float(d @ frac) - scale)
        feasible = x.sum() == box.N and np.all(x >= box.l) and np.all(x <= box.u)
        worst_feas = max(worst_feas, 0.0 if feasible else 1.0)
        r = round_to_feasible(frac, box)
        ok = r.sum() == box.N and np.all(r >= box.l) and np.all(r <= box.u)
        worst_feas = max(worst_feas, 0.0 if ok else 1.0)
        worst_round = max(worst_round, float(np.abs(r - frac).sum()) - m)
    return [
        CheckResult.upper("lmo.optimality", worst_opt, 0.0),
        CheckResult.upper("lmo.feasibility", worst_feas, 0.0),
        CheckResult.upper("lmo.rounding_distance", worst_round, 0.0),
    ]


def fw_convergence_trace(seed: int = 1, m: int = 40, n: int = 10, gap_tol: float = 1e-9, iter_cap: int = 3000):
    """Root-node BPCG dual-gap trace on a Fusion D-criterion instance."""
    from bnb import start_point
    from frank_wolfe import ActiveSet, bpcg

    inst = generate(GeneratorSpec(m=m, n=n, variant=Variant.FUSION, seed=seed))
    obj = Objective(inst)
    box = BoundBox.from_instance(inst)
    x0 = start_point(inst, seed)
    trace: list[tuple[int, float, float]] = []
    status, _ = bpcg(obj, box, ActiveSet.from_vertex(x0), gap_tol, iter_cap=iter_cap, trace=lambda t, f, g: trace.append((t, f, g)))
    return status, trace


def suite_fw(seed: int = 1) -> list[CheckResult]:
    from frank_wolfe import ActiveSet, QuadraticObjective, bpcg

    results: list[CheckResult] = []
    box = BoundBox(np.zeros(3), np.full(3, 2), 3)
    center = np.array([1.2, 0.3, 1.5])
    status, active = bpcg(QuadraticObjective(center), box, ActiveSet.from_vertex(lmo(-center, box)), 1e-8, iter_cap=500)
    results.append(CheckResult.upper("fw.projection_gap", status.dual_gap, 1e-8))
    results.append(CheckResult.upper("fw.active_set_valid", 0.0 if active.is_valid(status.x) else 1.0, 0.0))

    inst = Instance(A=np.eye(2), N=3, l=np.zeros(2), u=np.full(2, 2))
    obj = Objective(inst)
    f_star = -2 * math.log(1.5)
    worst_bound = -math.inf

    def check(t: int, f: float, g: float) -> None:
        nonlocal worst_bound
        worst_bound = max(worst_bound, f - f_star - g)

    status, _ = bpcg(obj, BoundBox.from_instance(inst), ActiveSet.from_vertex(np.array([2, 1])), 1e-10, trace=check)
    results.append(CheckResult.upper("fw.dopt_identity_optimum", float(np.abs(status.x - 1.5).max()), 1e-4))
    results.append(CheckResult.upper("fw.dual_gap_bounds_primal_gap", worst_bound, 1e-9))

    status, trace = fw_convergence_trace(seed)
    gaps = [(t, g) for t, _, g in trace]
    try:
        slope = slope_fit(gaps)
    except SliceTooShortError:
        slope = -math.inf
    results.append(CheckResult.upper("fw.linear_convergence_slope", slope, LINEAR_RATE_SLOPE))
    primal = [f for _, f, _ in trace]
    increase = max((b - a for a, b in zip(primal, primal[1:])), default=0.0)
    results.append(CheckResult.upper("fw.monotone_primal", increase, 1e-12 * max(1.0, abs(primal[0]))))
    return results


def _close(value: float, reference: float) -> float:
    """Deviation relative to max(1, |reference|)."""
    return abs(value - reference) / max(1.0, abs(reference))


def soundness_violation(report, instance: Instance, optimum: Optional[float] = None) -> float:
    """Largest bound, incumbent or feasibility violation on a solve's node trace, relative to max(1, |objective|)."""
    violation = 0.0
    trace = report.node_trace
    for prev, cur in zip(trace, trace[1:]):
        violation = max(
            violation,
            prev["raw_lower_bound"] - cur["raw_lower_bound"],
            cur["incumbent"] - prev["incumbent"],
        )
    if optimum is not None:
        for entry in trace:
            violation = max(violation, entry["raw_lower_bound"] - optimum, entry["lower_bound"] - optimum)
    x = report.incumbent
    if x is not None:
        box = BoundBox.from_instance(instance)
        if not (box.contains(x, 0.0) and Objective(instance).is_domain_feasible(x)):
            violation = max(violation, 1.0)
    scale = max(1.0, abs(report.objective)) if math.isfinite(report.objective) else 1.0
    return violation / scale


def oracle_suite(solver: Callable, name: str, seed: int = 1, count: int = 50) -> list[CheckResult]:
    """Compare solver objectives with brute force on tiny instances of every criterion and variant."""
    from bnb import SolveStatus

    rng = make_rng(seed)
    results: list[CheckResult] = []
    for variant in Variant:
        for crit in ORACLE_CRITERIA:
            worst_value = worst_sound = 0.0
            for _ in range(count):
                inst = tiny_instance(rng, crit, variant)
                oracle = brute_force(inst)
                report = solver(inst, ORACLE_PARAMS)
                if oracle is None:
                    worst_value = max(worst_value, 0.0 if report.status is SolveStatus.INFEASIBLE else 1.0)
                    continue
                worst_value = max(worst_value, _close(report.objective, oracle.value))
                worst_sound = max(worst_sound, soundness_violation(report, inst, oracle.value))
            label = f"{_criterion_label(crit)}/{variant.value}"
            results.append(CheckResult.upper(f"{name}.oracle[{label}]", worst_value, 1e-6))
            results.append(CheckResult.upper(f"{name}.soundness[{label}]", worst_sound, 1e-9))
    return results


def suite_bnb(seed: int = 1, count: int = 50) -> list[CheckResult]:
    from bnb import solve

    results = oracle_suite(solve, "bnb", seed, count)
    rng = make_rng(seed + 1)
    with_prune = without_prune = 0
    worst = 0.0
    extra_nodes = 0
    for _ in range(10):
        inst = tiny_instance(rng, Criterion(CriterionKind.DOPT))
        pruned = solve(inst, ORACLE_PARAMS)
        full = solve(inst, ORACLE_PARAMS.replace(prune_during_fw=False))
        worst = max(worst, _close(pruned.objective, full.objective))
        with_prune += pruned.nodes
        without_prune += full.nodes
        extra_nodes = max(extra_nodes, pruned.nodes - full.nodes)
    logger.info("nodes with in-relaxation pruning %d, without %d", with_prune, without_prune)
    results.append(CheckResult.upper("bnb.pruning_same_objective", worst, 1e-6))
    results.append(CheckResult.upper("bnb.pruning_node_count", float(extra_nodes), 0.0))
    return results


def _grid_argmax(fun: Callable[[float], float], cap: float, points: int = 10_001) -> float:
    grid = np.linspace(0.0, cap, points)
    values = np.array([fun(t) for t in grid])
    return float(grid[int(np.argmax(values))])


def _random_exchange_state(rng: np.random.Generator):
    from cobnb import ExchangeStats

    n = int(rng.integers(2, 5))
    m = n + int(rng.integers(1, 4))
    A = rng.standard_normal((m, n))
    x = rng.uniform(0.5, 2.0, size=m)
    X = (A.T * x) @ A
    j, k = rng.choice(m, size=2, replace=False)
    stats = ExchangeStats.from_matrix(X, A[j], A[k])
    head_j = float(rng.uniform(0.0, 3.0))
    return stats, head_j, float(x[k])


def suite_cobnb(seed: int = 1, count: int = 50, states: int = 200) -> list[CheckResult]:
    from bnb import solve, start_point
    from cobnb import cd_solve, cobnb_solve, exchange_step_a, exchange_step_d

    results = oracle_suite(cobnb_solve, "cobnb", seed, count)
    rng = make_rng(seed + 2)

    worst_a = worst_d = 0.0
    for _ in range(states):
        stats, hj, hk = _random_exchange_state(rng)
        cap = min(hj, hk)
        q = stats.trace_decrease
        theta = exchange_step_a(stats, hj, hk)
        ref = _grid_argmax(q, cap)
        worst_a = max(worst_a, 0.0 if q(theta) >= q(ref) - 1e-12 * (1 + abs(q(ref))) else abs(theta - ref))
        ratio = lambda t: math.log(stats.det_ratio(t)) if stats.det_ratio(t) > 0 else -math.inf  # noqa: E731
        theta = exchange_step_d(stats, hj, hk)
        ref = bounded_argmin(lambda t: -math.log(max(stats.det_ratio(t), 1e-300)), 0.0, cap)
        worst_d = max(worst_d, 0.0 if ratio(theta) >= ratio(ref) - 1e-12 else abs(theta - ref))
    results.append(CheckResult.upper("cobnb.exchange_step_a", worst_a, 1e-4))
    results.append(CheckResult.upper("cobnb.exchange_step_d", worst_d, 1e-4))

    worst_mono = 0.0
    for k in range(20):
        crit = ORACLE_CRITERIA[k % len(ORACLE_CRITERIA)]
        inst = tiny_instance(rng, crit, Variant.FUSION if k % 2 else Variant.OPTIMAL)
        box = BoundBox.from_instance(inst)
        status = cd_solve(inst, box, start_point(inst).astype(float), 1e-9, 2000, record_history=True)
        hist = status.history
        increase = max((b - a for a, b in zip(hist, hist[1:])), default=0.0)
        drift = abs(status.x.sum() - inst.N)
        worst_mono = max(worst_mono, increase, drift - 1e-12)
    results.append(CheckResult.upper("cobnb.monotone_exchange", worst_mono, 0.0))

    bnb_nodes = cobnb_nodes = 0
    for k in range(10):
        inst = generate(
            GeneratorSpec(m=20, n=5, correlation=Correlation.CORRELATED, seed=seed * 100 + k)
        )
        params = SolverParams(time_limit=60.0)
        bnb_nodes += solve(inst, params).nodes
        cobnb_nodes += cobnb_solve(inst, params).nodes
    logger.info("node totals on correlated D-criterion suite: bnb=%d cobnb=%d", bnb_nodes, cobnb_nodes)
    results.append(CheckResult("cobnb.node_comparison", "logged", float(bnb_nodes - cobnb_nodes), 0.0))
    return results


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "criteria": suite_criteria,
    "lmo": suite_lmo,
    "fw": suite_fw,
    "bnb": suite_bnb,
    "cobnb": suite_cobnb,
}


def run_suite(name: str, seed: int = 1) -> list[CheckResult]:
    """
    Run one suite, or every suite for name 'all'.

    Raises:
        KeyError: Unknown suite name
    """
    names: Sequence[str] = list(SUITES) if name == "all" else [name]
    results: list[CheckResult] = []
    for suite in names:
        if suite not in SUITES:
            raise KeyError(f"unknown suite '{suite}'")
        logger.info("running suite %s (seed %d)", suite, seed)
        results.extend(SUITES[suite](seed=seed))
    return results


def all_passed(results: Iterable[CheckResult]) -> bool:
    return all(r.status != "fail" for r in results)
