"""Blended pairwise conditional gradients with active sets and line searches"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Protocol

import numpy as np

from config import (
    ARMIJO_C,
    DEFAULT_FW_ITER_CAP,
    MAX_HALVINGS,
    SECANT_MAX_ITER,
    SECANT_REL_TOL,
    WEIGHT_DROP_TOL,
)
from criteria import DomainError
from simplex_lmo import BoundBox, lmo
from utils import Deadline

logger = logging.getLogger(__name__)

TraceCallback = Callable[[int, float, float], None]


class DomainStall(RuntimeError):
    """No domain-feasible step length along the search direction."""


class SmoothObjective(Protocol):
    def value(self, x: np.ndarray) -> float: ...

    def value_or_inf(self, x: np.ndarray) -> float: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    def is_domain_feasible(self, x: np.ndarray) -> bool: ...


class QuadraticObjective:
    """weight * ||x - center||^2, defined everywhere."""

    def __init__(self, center: np.ndarray, weight: float = 1.0):
        self.center = np.asarray(center, dtype=float)
        self.weight = float(weight)

    def value(self, x: np.ndarray) -> float:
        r = np.asarray(x, dtype=float) - self.center
        return self.weight * float(r @ r)

    def value_or_inf(self, x: np.ndarray) -> float:
        return self.value(x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.weight * (np.asarray(x, dtype=float) - self.center)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.weight * np.eye(self.center.size)

    def is_domain_feasible(self, x: np.ndarray) -> bool:
        return True


class ActiveSet:
    """Convex combination of integer polytope vertices."""

    def __init__(self, vertices: Optional[list[np.ndarray]] = None, weights: Optional[np.ndarray] = None):
        self.vertices: list[np.ndarray] = [np.asarray(v, dtype=np.int64) for v in (vertices or [])]
        if weights is None:
            weights = np.full(len(self.vertices), 1.0 / max(1, len(self.vertices)))
        self.weights = np.asarray(weights, dtype=float).copy()
        if self.weights.size != len(self.vertices):
            raise ValueError("one weight per vertex required")

    @classmethod
    def from_vertex(cls, v: np.ndarray) -> "ActiveSet":
        return cls([np.asarray(v, dtype=np.int64).copy()], np.array([1.0]))

    def __len__(self) -> int:
        return len(self.vertices)

    def copy(self) -> "ActiveSet":
        return ActiveSet([v.copy() for v in self.vertices], self.weights.copy())

    def matrix(self) -> np.ndarray:
        return np.vstack(self.vertices).astype(float)

    def iterate(self) -> np.ndarray:
        return self.weights @ self.matrix()

    def index_of(self, v: np.ndarray) -> Optional[int]:
        for i, w in enumerate(self.vertices):
            if np.array_equal(w, v):
                return i
        return None

    def cleanup(self) -> None:
        keep = self.weights > WEIGHT_DROP_TOL
        if not np.all(keep):
            self.vertices = [v for v, k in zip(self.vertices, keep) if k]
            self.weights = self.weights[keep]
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("active set lost all weight")
        self.weights /= total

    def fw_update(self, v: np.ndarray, gamma: float) -> None:
        """Move weight gamma towards vertex v."""
        if gamma >= 1.0 - WEIGHT_DROP_TOL:
            self.vertices = [np.asarray(v, dtype=np.int64).copy()]
            self.weights = np.array([1.0])
            return
        self.weights *= 1.0 - gamma
        idx = self.index_of(v)
        if idx is None:
            self.vertices.append(np.asarray(v, dtype=np.int64).copy())
            self.weights = np.append(self.weights, gamma)
        else:
            self.weights[idx] += gamma
        self.cleanup()

    def transfer(self, source: int, target: int, gamma: float) -> None:
        """Pairwise step: shift gamma of weight from source to target."""
        gamma = min(gamma, self.weights[source])
        self.weights[source] -= gamma
        self.weights[target] += gamma
        if self.weights[source] <= WEIGHT_DROP_TOL:
            self.weights[source] = 0.0
        self.cleanup()

    def is_valid(self, x: Optional[np.ndarray] = None, tol: float = 1e-10) -> bool:
        if len(self) == 0 or np.any(self.weights <= 0):
            return False
        if abs(self.weights.sum() - 1.0) > tol:
            return False
        if x is not None and np.max(np.abs(self.iterate() - x)) > tol * max(1.0, float(np.max(np.abs(x)))):
            return False
        return True


class FWReason(str, Enum):
    GAP_REACHED = "GapReached"
    ITER_LIMIT = "IterLimit"
    BOUND_PRUNED = "BoundPruned"
    DOMAIN_STALL = "DomainStall"
    STOPPED = "Stopped"
    TIME_LIMIT = "TimeLimit"


@dataclass
class FWStatus:
    x: np.ndarray
    dual_gap: float
    primal: float
    iterations: int
    reason: FWReason
    lmo_calls: int = 0

    @property
    def lower_bound(self) -> float:
        return self.primal - self.dual_gap


def line_search_secant(
    obj: SmoothObjective,
    x: np.ndarray,
    d: np.ndarray,
    gamma_max: float,
    max_iter: int = SECANT_MAX_ITER,
    rel_tol: float = SECANT_REL_TOL,
    max_halvings: int = MAX_HALVINGS,
) -> float:
    """
    Safeguarded secant search for a root of phi'(g) = <grad f(x + g d), d> on [0, gamma_max].

    Raises:
        DomainStall: gamma_max cannot be halved into the domain
    """

    def slope(g: float) -> float:
        return float(obj.gradient(x + g * d) @ d)

    d0 = slope(0.0)
    if d0 >= 0:
        return 0.0
    hi = float(gamma_max)
    for _ in range(max_halvings):
        if obj.is_domain_feasible(x + hi * d):
            break
        hi *= 0.5
    else:
        raise DomainStall(f"no domain-feasible step after {max_halvings} halvings")
    d_hi = slope(hi)
    if d_hi <= 0:
        return hi
    tol = rel_tol * abs(d0)
    lo = 0.0
    g_prev, s_prev = 0.0, d0
    g_cur, s_cur = hi, d_hi
    for _ in range(max_iter):
        denom = s_cur - s_prev
        g_new = g_cur - s_cur * (g_cur - g_prev) / denom if denom != 0 else math.nan
        if not lo < g_new < hi:
            g_new = 0.5 * (lo + hi)
        s_new = slope(g_new)
        if abs(s_new) <= tol:
            return g_new
        if s_new < 0:
            lo = g_new
        else:
            hi = g_new
        g_prev, s_prev = g_cur, s_cur
        g_cur, s_cur = g_new, s_new
        if hi - lo <= 1e-15 * max(1.0, gamma_max):
            break
    # phi is decreasing on [0, lo]
    return lo if lo > 0 else hi


def line_search_backtracking(
    obj: SmoothObjective,
    x: np.ndarray,
    d: np.ndarray,
    gamma_max: float,
    c: float = ARMIJO_C,
    max_halvings: int = MAX_HALVINGS,
) -> float:
    """
    Armijo backtracking from gamma_max, halving until sufficient decrease inside the domain.

    Returns:
        Accepted step, 0.0 for a non-descent direction

    Raises:
        DomainStall: max_halvings exhausted
    """
    slope = float(obj.gradient(x) @ d)
    if slope >= 0:
        return 0.0
    f0 = obj.value(x)
    gamma = float(gamma_max)
    for _ in range(max_halvings + 1):
        if obj.value_or_inf(x + gamma * d) <= f0 + c * gamma * slope:
            return gamma
        gamma *= 0.5
    raise DomainStall(f"Armijo condition not met after {max_halvings} halvings")


def step_length(obj: SmoothObjective, x: np.ndarray, d: np.ndarray, gamma_max: float, f0: float) -> float:
    """Secant search, then backtracking; DomainStall when both fail."""
    try:
        gamma = line_search_secant(obj, x, d, gamma_max)
        if gamma > 0 and obj.value_or_inf(x + gamma * d) <= f0:
            return gamma
    except DomainStall:
        pass
    logger.debug("secant step rejected, falling back to backtracking")
    gamma = line_search_backtracking(obj, x, d, gamma_max)
    if gamma <= 0:
        raise DomainStall("no descent along search direction")
    return gamma


def bpcg(
    obj: SmoothObjective,
    box: BoundBox,
    start: ActiveSet,
    gap_tol: float,
    prune_bound: Optional[float] = None,
    iter_cap: int = DEFAULT_FW_ITER_CAP,
    trace: Optional[TraceCallback] = None,
    stop_when: Optional[Callable[[np.ndarray], bool]] = None,
    deadline: Optional[Deadline] = None,
) -> tuple[FWStatus, ActiveSet]:
    """
    Blended pairwise conditional gradients over the box polytope.

    Args:
        obj: Objective with value / gradient / domain oracle
        box: Feasible region
        start: Active set whose iterate is domain-feasible
        gap_tol: Stop once the Frank-Wolfe dual gap is at most this
        prune_bound: Stop once primal - dual gap exceeds this
        iter_cap: Maximum number of steps
        trace: Called with (iteration, primal, dual gap) before each step
        stop_when: Predicate on the iterate; True stops with reason Stopped
        deadline: Wall-clock budget

    Returns:
        (status, final active set)

    Raises:
        DomainError: Start iterate outside the domain
    """
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    active = start.copy()
    x = active.iterate()
    if not obj.is_domain_feasible(x):
        raise DomainError("start iterate is not domain feasible")
    primal = obj.value(x)
    lmo_calls = 0
    t = 0
    while True:
        grad = obj.gradient(x)
        v_fw = lmo(grad, box)
        lmo_calls += 1
        gap = max(float(grad @ (x - v_fw)), 0.0)
        if trace is not None:
            trace(t, primal, gap)

        def finish(reason: FWReason) -> tuple[FWStatus, ActiveSet]:
            return FWStatus(x=x, dual_gap=gap, primal=primal, iterations=t, reason=reason, lmo_calls=lmo_calls), active

        if stop_when is not None and stop_when(x):
            return finish(FWReason.STOPPED)
        if gap <= gap_tol:
            return finish(FWReason.GAP_REACHED)
        if prune_bound is not None and primal - gap > prune_bound:
            return finish(FWReason.BOUND_PRUNED)
        if t >= iter_cap:
            return finish(FWReason.ITER_LIMIT)
        if deadline is not None and deadline.expired():
            return finish(FWReason.TIME_LIMIT)

        V = active.matrix()
        scores = V @ grad
        away = int(np.argmax(scores))
        local = int(np.argmin(scores))
        pairwise = away != local and scores[away] - scores[local] >= gap
        if pairwise:
            d = V[local] - V[away]
            gamma_max = float(active.weights[away])
        else:
            d = v_fw - x
            gamma_max = 1.0
        try:
            gamma = step_length(obj, x, d, gamma_max, primal)
        except DomainStall as exc:
            logger.debug("bpcg stalled at iteration %d: %s", t, exc)
            return finish(FWReason.DOMAIN_STALL)

        candidate = active.copy()
        if pairwise:
            candidate.transfer(away, local, gamma)
        else:
            candidate.fw_update(v_fw, gamma)
        x_new = candidate.iterate()
        f_new = obj.value_or_inf(x_new)
        if not f_new <= primal + 1e-12 * max(1.0, abs(primal)):
            logger.debug("bpcg update rejected at iteration %d", t)
            return finish(FWReason.DOMAIN_STALL)
        active, x, primal = candidate, x_new, f_new
        t += 1
