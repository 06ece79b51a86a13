"""Linear minimization, rounding and enumeration over the scaled truncated simplex"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from config import DEFAULT_ENUMERATION_CAP

logger = logging.getLogger(__name__)


class InfeasibleBoxError(ValueError):
    """Bounds admit no point with sum N."""


class EnumerationLimitError(RuntimeError):
    """More integer points than the enumeration cap."""


@dataclass(frozen=True, eq=False)
class BoundBox:
    """Integer box [l, u] intersected with the budget hyperplane sum(x) = N."""

    l: np.ndarray
    u: np.ndarray
    N: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "l", np.asarray(self.l, dtype=np.int64).ravel())
        object.__setattr__(self, "u", np.asarray(self.u, dtype=np.int64).ravel())
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def from_instance(cls, instance) -> "BoundBox":
        return cls(instance.l.copy(), instance.u.copy(), instance.N)

    @property
    def m(self) -> int:
        return self.l.size

    def is_feasible(self) -> bool:
        return bool(
            self.l.shape == self.u.shape
            and np.all(self.l >= 0)
            and np.all(self.l <= self.u)
            and self.l.sum() <= self.N <= self.u.sum()
        )

    def check(self) -> None:
        if not self.is_feasible():
            raise InfeasibleBoxError(
                f"infeasible box: sum(l)={self.l.sum()}, N={self.N}, sum(u)={self.u.sum()}"
            )

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.l - tol) and np.all(x <= self.u + tol) and abs(x.sum() - self.N) <= tol * max(1, self.m)
        )

    def tighten_upper(self, index: int, bound: int) -> "BoundBox":
        u = self.u.copy()
        u[index] = min(u[index], bound)
        return BoundBox(self.l, u, self.N)

    def tighten_lower(self, index: int, bound: int) -> "BoundBox":
        l = self.l.copy()
        l[index] = max(l[index], bound)
        return BoundBox(l, self.u, self.N)

    def barycenter(self) -> np.ndarray:
        """Point l + (N - sum l) (u - l) / sum(u - l) in the box polytope."""
        span = (self.u - self.l).astype(float)
        total = span.sum()
        base = self.l.astype(float)
        if total == 0:
            return base
        return base + (self.N - self.l.sum()) * span / total


def lmo(d: np.ndarray, box: BoundBox) -> np.ndarray:
    """
    Greedy minimizer of <d, x> over the box polytope.

    Fills coordinates in ascending order of d (ties by index) up to the budget.

    Returns:
        Integer vertex as an int64 array
    """
    box.check()
    d = np.asarray(d, dtype=float)
    x = box.l.copy()
    remaining = box.N - int(x.sum())
    for i in np.argsort(d, kind="stable"):
        if remaining == 0:
            break
        add = min(int(box.u[i] - box.l[i]), remaining)
        x[i] += add
        remaining -= add
    return x


def round_to_feasible(w: np.ndarray, box: BoundBox) -> np.ndarray:
    """
    Round a fractional point of the box polytope to an integer point.

    Units are assigned one at a time by largest remainder (ties by index) and
    removed by smallest remainder when clamping overshoots the budget.
    """
    box.check()
    w = np.asarray(w, dtype=float)
    floor = np.floor(w)
    x = np.clip(floor.astype(np.int64), box.l, box.u)
    remainder = w - floor
    order_key = np.arange(box.m)
    while x.sum() < box.N:
        eligible = np.flatnonzero(x < box.u)
        best = eligible[np.lexsort((order_key[eligible], -remainder[eligible]))[0]]
        x[best] += 1
        remainder[best] -= 1.0
    while x.sum() > box.N:
        eligible = np.flatnonzero(x > box.l)
        worst = eligible[np.lexsort((order_key[eligible], remainder[eligible]))[0]]
        x[worst] -= 1
        remainder[worst] += 1.0
    return x


def count_integer_points(box: BoundBox) -> int:
    """Number of integer points in the box polytope, by dynamic programming."""
    box.check()
    spans = tuple(int(s) for s in box.u - box.l)
    target = box.N - int(box.l.sum())

    @lru_cache(maxsize=None)
    def ways(i: int, rest: int) -> int:
        if i == len(spans):
            return 1 if rest == 0 else 0
        return sum(ways(i + 1, rest - k) for k in range(min(spans[i], rest) + 1))

    return ways(0, target)


def enumerate_integer_points(box: BoundBox, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[np.ndarray]:
    """
    Yield every integer point of the box polytope once, in lexicographic order.

    Raises:
        EnumerationLimitError: More than cap points
    """
    total = count_integer_points(box)
    if total > cap:
        raise EnumerationLimitError(f"{total} integer points exceed the enumeration cap {cap}")
    l, u = box.l, box.u
    m = box.m
    # suffix sums of bounds decide which values keep the rest completable
    suffix_l = np.concatenate([np.cumsum(l[::-1])[::-1], [0]])
    suffix_u = np.concatenate([np.cumsum(u[::-1])[::-1], [0]])
    x = np.zeros(m, dtype=np.int64)

    def fill(i: int, rest: int) -> Iterator[np.ndarray]:
        if i == m:
            if rest == 0:
                yield x.copy()
            return
        low = max(int(l[i]), rest - int(suffix_u[i + 1]))
        high = min(int(u[i]), rest - int(suffix_l[i + 1]))
        for value in range(low, high + 1):
            x[i] = value
            yield from fill(i + 1, rest - value)

    yield from fill(0, box.N)
