"""Best-bound branch-and-bound with Frank-Wolfe node relaxations"""
from __future__ import annotations

import heapq
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol, Sequence, Union

import numpy as np
import scipy.linalg

from config import (
    DOMAIN_POINT_ITER_CAP,
    INCUMBENT_REL_IMPROVEMENT,
    ROOT_TOLERANCE_FACTOR,
    SolverParams,
)
from criteria import Objective
from frank_wolfe import ActiveSet, FWReason, QuadraticObjective, bpcg
from instance import Instance
from simplex_lmo import BoundBox, lmo, round_to_feasible
from utils import Deadline, is_integral, make_rng, most_fractional_index

logger = logging.getLogger(__name__)


class InfeasibleError(RuntimeError):
    """No domain-feasible point exists where one was required."""


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    GAP_LIMIT = "GapLimit"
    TIME_LIMIT = "TimeLimit"
    INFEASIBLE = "Infeasible"


class Side(str, Enum):
    LE = "Le"
    GE = "Ge"


class SplitOutcome(Enum):
    NEEDS_PROJECTION = "NeedsProjection"


NEEDS_PROJECTION = SplitOutcome.NEEDS_PROJECTION


@dataclass
class Node:
    box: BoundBox
    active_set: Optional[ActiveSet]
    depth: int
    lower_bound: float
    id: int
    x_ref: Optional[np.ndarray] = None


@dataclass
class NodeResult:
    x: Optional[np.ndarray] = None
    primal: float = math.inf
    dual_gap: float = math.inf
    active_set: Optional[ActiveSet] = None
    lmo_calls: int = 0
    iterations: int = 0
    candidates: list[np.ndarray] = field(default_factory=list)
    infeasible: bool = False
    fallbacks: int = 0

    @property
    def lower_bound(self) -> float:
        return self.primal - self.dual_gap


@dataclass
class SolveReport:
    solver: str
    status: SolveStatus
    incumbent: Optional[np.ndarray]
    objective: float
    lower_bound: float
    abs_gap: float
    rel_gap: float
    nodes: int
    lmo_calls: int
    wall_time: float
    instance: str = ""
    exchange_fallbacks: int = 0
    node_trace: list[dict] = field(default_factory=list)
    fw_trace: list[tuple[int, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        def finite(v: float) -> Optional[float]:
            return float(v) if math.isfinite(v) else None

        return {
            "instance": self.instance,
            "solver": self.solver,
            "status": self.status.value,
            "incumbent": None if self.incumbent is None else [int(v) for v in self.incumbent],
            "objective": finite(self.objective),
            "lower_bound": finite(self.lower_bound),
            "abs_gap": finite(self.abs_gap),
            "rel_gap": finite(self.rel_gap),
            "nodes": self.nodes,
            "lmo_calls": self.lmo_calls,
            "wall_time": self.wall_time,
            "exchange_fallbacks": self.exchange_fallbacks,
        }


@dataclass
class DomainPoint:
    x: np.ndarray
    active_set: ActiveSet
    lmo_calls: int = 0


def relative_gap(objective: float, lower_bound: float) -> float:
    """(objective - lower_bound) / min(|objective|, |lower_bound|), inf across a sign change."""
    if not (math.isfinite(objective) and math.isfinite(lower_bound)):
        return math.inf
    abs_gap = objective - lower_bound
    if abs_gap <= 0:
        return 0.0
    if objective * lower_bound <= 0:
        return math.inf
    return abs_gap / min(abs(objective), abs(lower_bound))


def node_tolerance(depth: int, params: SolverParams, f_start: float = 0.0) -> float:
    """Dual-gap tolerance for a node: coarse near the root, gap_tol_final deep down."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    root = params.gap_tol_root
    if root is None:
        root = ROOT_TOLERANCE_FACTOR * (1.0 + abs(f_start))
    return max(params.gap_tol_final, root * params.decay**depth)


def _budget_from_support(box: BoundBox, support: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    x = box.l.copy()
    x[support] = box.u[support]
    while x.sum() > box.N:
        reducible = np.where(x > box.l, x, -1)
        x[int(np.argmax(reducible))] -= 1
    in_support = np.zeros(box.m, dtype=bool)
    in_support[support] = True
    while x.sum() < box.N:
        open_ = np.flatnonzero((x < box.u) & ~in_support)
        if open_.size == 0:
            open_ = np.flatnonzero(x < box.u)
        i = int(rng.choice(open_))
        x[i] += min(int(box.u[i] - x[i]), box.N - int(x.sum()))
    return x


def start_point(instance: Instance, seed: int = 1) -> np.ndarray:
    """
    Integer, domain-feasible start built on n linearly independent experiments.

    Raises:
        InfeasibleError: Box infeasible or no domain-feasible start after m attempts
    """
    box = BoundBox.from_instance(instance)
    if not box.is_feasible():
        raise InfeasibleError("root box is infeasible")
    obj = Objective(instance)
    rng = make_rng(seed)
    m, n = instance.m, instance.n
    for attempt in range(max(1, m)):
        rows = np.arange(m) if attempt == 0 else rng.permutation(m)
        _, piv = scipy.linalg.qr(instance.A[rows].T, mode="r", pivoting=True)
        support = np.sort(rows[piv[:n]])
        x = _budget_from_support(box, support, rng)
        if obj.is_domain_feasible(x):
            return x
    raise InfeasibleError(f"no domain-feasible start found after {max(1, m)} attempts")


def split_active_set(
    active_set: ActiveSet,
    branch_var: int,
    side: Side,
    bound: int,
    domain_oracle=None,
) -> Union[ActiveSet, SplitOutcome]:
    """
    Keep the vertices compatible with a new bound and renormalize.

    Returns:
        The reduced active set, or NEEDS_PROJECTION when nothing survives or the
        reconstructed iterate fails the domain oracle
    """
    side = Side(side)
    if side is Side.LE:
        keep = [k for k, v in enumerate(active_set.vertices) if v[branch_var] <= bound]
    else:
        keep = [k for k, v in enumerate(active_set.vertices) if v[branch_var] >= bound]
    if not keep:
        return NEEDS_PROJECTION
    reduced = ActiveSet([active_set.vertices[k] for k in keep], active_set.weights[keep])
    reduced.cleanup()
    if domain_oracle is not None and not domain_oracle(reduced.iterate()):
        return NEEDS_PROJECTION
    return reduced


def domain_point(
    instance: Instance,
    box: BoundBox,
    x_ref: Optional[np.ndarray] = None,
    iter_cap: int = DOMAIN_POINT_ITER_CAP,
) -> DomainPoint:
    """
    Frank-Wolfe projection towards x_ref, stopped at the first domain-feasible iterate.

    Targets x_ref, then its midpoint with the box barycenter, then the barycenter.

    Raises:
        InfeasibleError: No point of the box is domain-feasible
    """
    if not box.is_feasible():
        raise InfeasibleError("box is infeasible")
    obj = Objective(instance)
    center = box.barycenter()
    x_ref = center if x_ref is None else np.asarray(x_ref, dtype=float)
    if box.contains(x_ref) and is_integral(x_ref):
        v = np.round(x_ref).astype(np.int64)
        if obj.is_domain_feasible(v):
            return DomainPoint(v.astype(float), ActiveSet.from_vertex(v), 0)
    if not obj.is_domain_feasible(center):
        raise InfeasibleError("box contains no domain-feasible point")
    lmo_calls = 0
    for target in (x_ref, 0.5 * (x_ref + center), center):
        projection = QuadraticObjective(target, weight=0.5)
        start = ActiveSet.from_vertex(lmo(-target, box))
        lmo_calls += 1
        status, active = bpcg(
            projection,
            box,
            start,
            gap_tol=1e-14,
            iter_cap=iter_cap,
            stop_when=obj.is_domain_feasible,
        )
        lmo_calls += status.lmo_calls
        if status.reason is FWReason.STOPPED:
            return DomainPoint(status.x, active, lmo_calls)
    raise InfeasibleError(f"no domain-feasible iterate within {iter_cap} projection steps")


class NodeSolver(Protocol):
    name: str
    uses_active_set: bool

    def evaluate(self, node: Node, incumbent_value: float, deadline: Deadline) -> NodeResult: ...


class BPCGNodeSolver:
    """Node relaxations by BPCG, warm-started from the parent's split active set."""

    name = "boscia"
    uses_active_set = True

    def __init__(self, instance: Instance, params: SolverParams, f_start: float):
        self.instance = instance
        self.params = params
        self.f_start = f_start
        self.obj = Objective(instance)
        self.root_trace: list[tuple[int, float, float]] = []

    def _closing_tol(self) -> float:
        return max(min(self.params.gap_tol_final, 0.5 * self.params.abs_tol), 1e-12)

    def evaluate(self, node: Node, incumbent_value: float, deadline: Deadline) -> NodeResult:
        params = self.params
        result = NodeResult()
        active = node.active_set
        if active is None:
            try:
                point = domain_point(self.instance, node.box, node.x_ref)
            except InfeasibleError:
                result.infeasible = True
                return result
            active = point.active_set
            result.lmo_calls += point.lmo_calls

        tol = node_tolerance(node.depth, params, self.f_start)
        prune = incumbent_value if params.prune_during_fw and math.isfinite(incumbent_value) else None
        trace = None
        if params.record_trace and node.depth == 0:
            trace = lambda t, f, g: self.root_trace.append((t, f, g))  # noqa: E731

        status, active = bpcg(
            self.obj, node.box, active, tol, prune, params.fw_iter_cap, trace=trace, deadline=deadline
        )
        result.lmo_calls += status.lmo_calls
        result.iterations += status.iterations

        if status.reason is FWReason.DOMAIN_STALL:
            try:
                point = domain_point(self.instance, node.box, status.x)
                result.lmo_calls += point.lmo_calls
                retry, retry_active = bpcg(
                    self.obj, node.box, point.active_set, tol, prune, params.fw_iter_cap, deadline=deadline
                )
                result.lmo_calls += retry.lmo_calls
                result.iterations += retry.iterations
                if retry.lower_bound > status.lower_bound:
                    status, active = retry, retry_active
            except InfeasibleError:
                pass

        if status.reason is FWReason.GAP_REACHED and is_integral(status.x):
            tight = self._closing_tol()
            if status.dual_gap > tight:
                status, active = bpcg(self.obj, node.box, active, tight, None, params.fw_iter_cap, deadline=deadline)
                result.lmo_calls += status.lmo_calls
                result.iterations += status.iterations

        result.x = status.x
        result.primal = status.primal
        result.dual_gap = status.dual_gap
        result.active_set = active
        result.candidates = [round_to_feasible(status.x, node.box)] + [v.copy() for v in active.vertices]
        return result


def _branch_var_for_integral(x: np.ndarray, box: BoundBox) -> Optional[tuple[int, int, int]]:
    """(var, upper of left child, lower of right child) splitting an integral point's box."""
    free = np.flatnonzero(box.l < box.u)
    if free.size == 0:
        return None
    i = int(free[0])
    r = int(round(float(x[i])))
    if r > box.l[i]:
        return i, r - 1, r
    return i, r, r + 1


def run_tree(
    instance: Instance,
    params: SolverParams,
    make_solver,
    solver_name: str,
) -> SolveReport:
    """
    Generic best-bound tree search.

    Args:
        instance: Problem to solve
        params: Solver parameters
        make_solver: Callable (instance, params, f_start) -> NodeSolver
        solver_name: Label stored on the report
    """
    deadline = Deadline(params.time_limit)
    obj = Objective(instance)
    root_box = BoundBox.from_instance(instance)

    def infeasible_report() -> SolveReport:
        return SolveReport(
            solver=solver_name,
            status=SolveStatus.INFEASIBLE,
            incumbent=None,
            objective=math.inf,
            lower_bound=math.inf,
            abs_gap=math.inf,
            rel_gap=math.inf,
            nodes=0,
            lmo_calls=0,
            wall_time=deadline.elapsed(),
            instance=instance.name,
        )

    try:
        x0 = start_point(instance, params.seed)
    except InfeasibleError as exc:
        logger.info("%s: %s", solver_name, exc)
        return infeasible_report()

    inc_x = x0.copy()
    inc_val = obj.value(x0)
    seen: set[tuple[int, ...]] = {tuple(int(v) for v in x0)}
    solver = make_solver(instance, params, inc_val)
    logger.info("%s: start objective %.6g", solver_name, inc_val)

    root = Node(root_box, ActiveSet.from_vertex(x0), 0, -math.inf, 0, x_ref=x0.astype(float))
    heap: list[tuple[float, int, Node]] = [(root.lower_bound, root.id, root)]
    next_id = 1
    frontier_lb = math.inf
    global_lb = -math.inf
    nodes = 0
    lmo_calls = 0
    fallbacks = 0
    node_trace: list[dict] = []
    status: Optional[SolveStatus] = None
    pool = ThreadPoolExecutor(max_workers=params.workers) if params.workers > 1 else None

    def try_incumbent(candidate: np.ndarray) -> None:
        nonlocal inc_x, inc_val
        key = tuple(int(v) for v in candidate)
        if key in seen:
            return
        seen.add(key)
        if not root_box.contains(candidate, tol=0.0) or not obj.is_domain_feasible(candidate):
            return
        value = obj.value(candidate)
        if value < inc_val - INCUMBENT_REL_IMPROVEMENT * (1.0 + abs(inc_val)):
            inc_x, inc_val = candidate.astype(np.int64).copy(), value
            logger.info("%s: new incumbent %.10g", solver_name, inc_val)

    def open_bound(pending: Sequence[Node] = ()) -> float:
        """Minimum over queued, closed and not yet merged nodes, capped by the incumbent."""
        bound = min(heap[0][0] if heap else math.inf, frontier_lb, inc_val)
        return min([bound] + [nd.lower_bound for nd in pending])

    def current_lb() -> float:
        return max(global_lb, open_bound())

    try:
        while True:
            while heap and heap[0][0] >= inc_val - params.abs_tol:
                lb, _, _ = heapq.heappop(heap)
                frontier_lb = min(frontier_lb, lb)
            if not heap:
                status = SolveStatus.OPTIMAL
                break
            global_lb = current_lb()
            if relative_gap(inc_val, global_lb) <= params.rel_tol:
                status = SolveStatus.GAP_LIMIT
                break
            if deadline.expired():
                status = SolveStatus.TIME_LIMIT
                break

            batch = [heapq.heappop(heap)[2] for _ in range(min(params.workers, len(heap)))]
            snapshot = inc_val
            if pool is None:
                results = [solver.evaluate(node, snapshot, deadline) for node in batch]
            else:
                results = list(pool.map(lambda nd: solver.evaluate(nd, snapshot, deadline), batch))

            for idx, (node, res) in enumerate(zip(batch, results)):
                pending = batch[idx + 1:]
                nodes += 1
                lmo_calls += res.lmo_calls
                fallbacks += res.fallbacks
                if res.infeasible:
                    logger.debug("node %d infeasible", node.id)
                    continue
                node_lb = max(node.lower_bound, res.lower_bound)
                for cand in res.candidates:
                    try_incumbent(cand)

                if node_lb >= inc_val - params.abs_tol:
                    frontier_lb = min(frontier_lb, node_lb)
                else:
                    var = most_fractional_index(res.x)
                    if var is not None:
                        w = float(res.x[var])
                        split = (var, int(math.floor(w)), int(math.ceil(w)))
                    else:
                        split = _branch_var_for_integral(res.x, node.box)
                    if split is None:
                        # single-point box: its bound is exact
                        frontier_lb = min(frontier_lb, node_lb)
                    else:
                        var, left_upper, right_lower = split
                        children = (
                            (Side.LE, left_upper, node.box.tighten_upper(var, left_upper)),
                            (Side.GE, right_lower, node.box.tighten_lower(var, right_lower)),
                        )
                        for side, bound, child_box in children:
                            if not child_box.is_feasible():
                                continue
                            child_set = None
                            if solver.uses_active_set and res.active_set is not None:
                                split_set = split_active_set(
                                    res.active_set, var, side, bound, obj.is_domain_feasible
                                )
                                child_set = None if split_set is NEEDS_PROJECTION else split_set
                            child = Node(child_box, child_set, node.depth + 1, node_lb, next_id, x_ref=res.x)
                            heapq.heappush(heap, (node_lb, next_id, child))
                            next_id += 1

                raw_lb = open_bound(pending)
                global_lb = max(global_lb, raw_lb)
                if params.record_trace:
                    node_trace.append(
                        {
                            "node_id": node.id,
                            "depth": node.depth,
                            "lower_bound": global_lb,
                            "raw_lower_bound": raw_lb,
                            "incumbent": inc_val,
                            "abs_gap": inc_val - global_lb,
                            "time": deadline.elapsed(),
                        }
                    )
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    global_lb = current_lb()
    abs_gap = inc_val - global_lb
    report = SolveReport(
        solver=solver_name,
        status=status,
        incumbent=inc_x,
        objective=inc_val,
        lower_bound=global_lb,
        abs_gap=abs_gap,
        rel_gap=relative_gap(inc_val, global_lb),
        nodes=nodes,
        lmo_calls=lmo_calls,
        wall_time=deadline.elapsed(),
        instance=instance.name,
        exchange_fallbacks=fallbacks,
        node_trace=node_trace,
        fw_trace=list(getattr(solver, "root_trace", [])),
    )
    logger.info(
        "%s: %s objective=%.10g bound=%.10g nodes=%d exchange_fallbacks=%d",
        solver_name,
        report.status.value,
        report.objective,
        report.lower_bound,
        report.nodes,
        report.exchange_fallbacks,
    )
    return report


def solve(instance: Instance, params: Optional[SolverParams] = None) -> SolveReport:
    """Solve an instance exactly with BPCG node relaxations."""
    params = params or SolverParams()
    return run_tree(instance, params, BPCGNodeSolver, BPCGNodeSolver.name)
