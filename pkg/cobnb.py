"""Coordinate-exchange branch-and-bound baseline"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from bnb import (
    InfeasibleError,
    Node,
    NodeResult,
    SolveReport,
    domain_point,
    node_tolerance,
    run_tree,
)
from config import SolverParams
from criteria import DomainError, Objective
from instance import CriterionKind, Instance
from simplex_lmo import BoundBox, lmo, round_to_feasible
from utils import Deadline, is_integral

logger = logging.getLogger(__name__)

_EPS = 1e-14
# Fraction of the singularity distance an exchange may use
_SINGULAR_MARGIN = 1.0 - 1e-9


@dataclass(frozen=True)
class ExchangeStats:
    """Quadratic forms of v_j, v_k with X^-1 (omega) and X^-2 (zeta)."""

    omega_j: float
    omega_k: float
    omega_jk: float
    zeta_j: float
    zeta_k: float
    zeta_jk: float

    @classmethod
    def from_matrix(cls, X: np.ndarray, v_j: np.ndarray, v_k: np.ndarray) -> "ExchangeStats":
        factor = scipy.linalg.cho_factor(X, lower=True)
        W = scipy.linalg.cho_solve(factor, np.column_stack([v_j, v_k]))
        return cls(
            omega_j=float(v_j @ W[:, 0]),
            omega_k=float(v_k @ W[:, 1]),
            omega_jk=float(v_j @ W[:, 1]),
            zeta_j=float(W[:, 0] @ W[:, 0]),
            zeta_k=float(W[:, 1] @ W[:, 1]),
            zeta_jk=float(W[:, 0] @ W[:, 1]),
        )

    @property
    def A(self) -> float:
        return self.zeta_j - self.zeta_k

    @property
    def B(self) -> float:
        return 2 * self.omega_jk * self.zeta_jk - self.omega_j * self.zeta_k - self.omega_k * self.zeta_j

    @property
    def C(self) -> float:
        return self.omega_j - self.omega_k

    @property
    def D(self) -> float:
        return max(self.omega_j * self.omega_k - self.omega_jk**2, 0.0)

    def det_ratio(self, theta: float) -> float:
        """det(X + theta (v_j v_j^T - v_k v_k^T)) / det X."""
        return 1.0 + self.C * theta - self.D * theta**2

    def trace_decrease(self, theta: float) -> float:
        """Tr(X^-1) minus the trace after the exchange; -inf past singularity."""
        denom = self.det_ratio(theta)
        if denom <= 0:
            return -math.inf
        return (self.A * theta + self.B * theta**2) / denom

    def singular_step(self) -> float:
        """Smallest positive theta where the exchanged matrix becomes singular."""
        C, D = self.C, self.D
        if D <= _EPS:
            return -1.0 / C if C < -_EPS else math.inf
        return (C + math.sqrt(C * C + 4 * D)) / (2 * D)


def _a_step(stats: ExchangeStats, headroom_j: float, headroom_k: float) -> tuple[float, bool]:
    cap = max(0.0, min(headroom_j, headroom_k))
    if cap == 0.0:
        return 0.0, False
    limit = stats.singular_step()
    upper = min(cap, limit * _SINGULAR_MARGIN)
    A, B = stats.A, stats.B
    delta = A * stats.D + B * stats.C
    candidates: list[float] = []
    fallback = False
    if abs(delta) > _EPS:
        disc = B * B - A * delta
        if disc >= 0:
            root = math.sqrt(disc)
            candidates += [-(B + root) / delta, (-B + root) / delta]
        else:
            fallback = True
    elif abs(B) > _EPS:
        candidates.append(-A / (2 * B))
    else:
        candidates.append(cap)
    candidates = [min(max(t, 0.0), upper) for t in candidates if math.isfinite(t)]
    if cap < limit:
        candidates.append(cap)
    if fallback:
        res = scipy.optimize.minimize_scalar(
            lambda t: -stats.trace_decrease(t), bounds=(0.0, upper), method="bounded", options={"xatol": 1e-12}
        )
        candidates.append(float(res.x))
        logger.debug("A-step: negative discriminant, bounded scalar search used")
    candidates.append(0.0)
    best = max(candidates, key=stats.trace_decrease)
    return best, fallback


def exchange_step_a(stats: ExchangeStats, headroom_j: float, headroom_k: float) -> float:
    """
    Step maximizing the decrease of Tr(X^-1) when moving theta from experiment k to j.

    The stationary points of q(theta) = (A theta + B theta^2) / (1 + C theta - D theta^2)
    solve A + 2 B theta + (AD + BC) theta^2 = 0; roots inside the headroom are compared
    with the boundary and the best is returned.
    """
    return _a_step(stats, headroom_j, headroom_k)[0]


def exchange_step_d(stats: ExchangeStats, headroom_j: float, headroom_k: float) -> float:
    """Step maximizing log det along v_j v_j^T - v_k v_k^T, clamped to the headrooms."""
    cap = max(0.0, min(headroom_j, headroom_k))
    if cap == 0.0:
        return 0.0
    C, D = stats.C, stats.D
    if D > _EPS:
        return min(max(C / (2 * D), 0.0), cap)
    # ratio is linear in theta
    return cap if C > _EPS else 0.0


class CDReason(str, Enum):
    CONVERGED = "Converged"
    ITER_LIMIT = "IterLimit"
    DEGENERATE_STOP = "DegenerateStop"
    STEP_STALL = "StepStall"
    TIME_LIMIT = "TimeLimit"


@dataclass
class CDStatus:
    x: np.ndarray
    primal: float
    pairwise_gap: float
    iterations: int
    reason: CDReason
    exchanges: int = 0
    fallbacks: int = 0
    history: Optional[list[float]] = None


def _exchange_step(obj: Objective, x: np.ndarray, j: int, k: int, X: np.ndarray, cap_j: float, cap_k: float):
    A = obj.instance.A
    stats = ExchangeStats.from_matrix(X, A[j], A[k])
    kind = obj.kind
    if kind is CriterionKind.DOPT:
        return exchange_step_d(stats, cap_j, cap_k), False
    if kind in (CriterionKind.AOPT, CriterionKind.LOGAOPT) or obj.p == 1.0:
        return _a_step(stats, cap_j, cap_k)
    # general trace power: bounded scalar search short of singularity
    upper = min(cap_j, cap_k, stats.singular_step() * _SINGULAR_MARGIN)
    if upper <= 0:
        return 0.0, False
    direction = np.zeros_like(x)
    direction[j], direction[k] = 1.0, -1.0
    res = scipy.optimize.minimize_scalar(
        lambda t: obj.value_or_inf(x + t * direction), bounds=(0.0, upper), method="bounded", options={"xatol": 1e-12}
    )
    theta = float(res.x)
    if obj.value_or_inf(x + upper * direction) < obj.value_or_inf(x + theta * direction):
        theta = upper
    return theta, False


def cd_solve(
    instance: Instance,
    box: BoundBox,
    start: np.ndarray,
    tol: float,
    iter_cap: int,
    deadline: Optional[Deadline] = None,
    record_history: bool = False,
) -> CDStatus:
    """
    Coordinate exchange between the best and worst admissible experiments.

    Raises:
        DomainError: Start point outside the domain
    """
    obj = Objective(instance)
    x = np.asarray(start, dtype=float).copy()
    info = obj.info(x)
    if not info.is_pd:
        raise DomainError("start point is not domain feasible")
    primal = obj.value(x)
    history = [primal] if record_history else None
    exchanges = fallbacks = 0
    l, u = box.l.astype(float), box.u.astype(float)
    gap = math.inf
    it = 0

    def status(reason: CDReason) -> CDStatus:
        return CDStatus(
            x=x, primal=primal, pairwise_gap=gap, iterations=it, reason=reason,
            exchanges=exchanges, fallbacks=fallbacks, history=history,
        )

    while True:
        grad = obj.gradient(x)
        can_grow = x < u - 1e-12
        can_shrink = x > l + 1e-12
        if not can_grow.any() or not can_shrink.any():
            gap = 0.0
            return status(CDReason.DEGENERATE_STOP)
        j = int(np.argmin(np.where(can_grow, grad, np.inf)))
        k = int(np.argmax(np.where(can_shrink, grad, -np.inf)))
        gap = float(grad[k] - grad[j])
        if j == k or gap <= tol:
            return status(CDReason.CONVERGED)
        if it >= iter_cap:
            return status(CDReason.ITER_LIMIT)
        if deadline is not None and deadline.expired():
            return status(CDReason.TIME_LIMIT)

        cap_j, cap_k = u[j] - x[j], x[k] - l[k]
        theta, used_fallback = _exchange_step(obj, x, j, k, info.X, cap_j, cap_k)
        fallbacks += int(used_fallback)
        if theta <= 0:
            return status(CDReason.STEP_STALL)
        trial = x.copy()
        trial[j] = u[j] if theta >= cap_j else x[j] + theta
        trial[k] = l[k] if theta >= cap_k else x[k] - theta
        value = obj.value_or_inf(trial)
        if not value < primal:
            return status(CDReason.STEP_STALL)
        x, primal = trial, value
        info = obj.info(x)
        exchanges += 1
        it += 1
        if history is not None:
            history.append(primal)


class ExchangeNodeSolver:
    """Node relaxations by coordinate exchange from the projected parent solution."""

    name = "cobnb"
    uses_active_set = False

    def __init__(self, instance: Instance, params: SolverParams, f_start: float):
        self.instance = instance
        self.params = params
        self.f_start = f_start
        self.obj = Objective(instance)

    def _scale(self, box: BoundBox) -> float:
        return float(max(1, box.N - int(box.l.sum())))

    def _dual_gap(self, x: np.ndarray, box: BoundBox) -> tuple[float, np.ndarray]:
        grad = self.obj.gradient(x)
        v = lmo(grad, box)
        return max(float(grad @ (x - v)), 0.0), v

    def evaluate(self, node: Node, incumbent_value: float, deadline: Deadline) -> NodeResult:
        params = self.params
        result = NodeResult()
        try:
            point = domain_point(self.instance, node.box, node.x_ref)
        except InfeasibleError:
            result.infeasible = True
            return result
        result.lmo_calls += point.lmo_calls
        scale = self._scale(node.box)
        tol = node_tolerance(node.depth, params, self.f_start) / scale
        cd = cd_solve(self.instance, node.box, point.x, tol, params.cd_iter_cap, deadline)
        result.iterations += cd.iterations
        result.fallbacks += cd.fallbacks
        gap, vertex = self._dual_gap(cd.x, node.box)
        result.lmo_calls += 1
        if is_integral(cd.x):
            tight = max(min(params.gap_tol_final, 0.5 * params.abs_tol), 1e-12)
            if gap > tight:
                cd = cd_solve(self.instance, node.box, cd.x, tight / scale, params.cd_iter_cap, deadline)
                result.iterations += cd.iterations
                result.fallbacks += cd.fallbacks
                gap, vertex = self._dual_gap(cd.x, node.box)
                result.lmo_calls += 1
        result.x = cd.x
        result.primal = cd.primal
        result.dual_gap = gap
        result.candidates = [round_to_feasible(cd.x, node.box), vertex]
        return result


def cobnb_solve(instance: Instance, params: Optional[SolverParams] = None) -> SolveReport:
    """Solve an instance exactly with coordinate-exchange node relaxations."""
    params = params or SolverParams()
    return run_tree(instance, params, ExchangeNodeSolver, ExchangeNodeSolver.name)
