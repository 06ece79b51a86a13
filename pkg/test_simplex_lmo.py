"""Tests for the greedy LMO, rounding and enumeration"""
import numpy as np
import pytest

from conftest import is_subbox
from simplex_lmo import (
    BoundBox,
    EnumerationLimitError,
    InfeasibleBoxError,
    count_integer_points,
    enumerate_integer_points,
    lmo,
    round_to_feasible,
)


def box(u, N, l=None):
    return BoundBox(np.zeros(len(u)) if l is None else l, u, N)


@pytest.mark.parametrize(
    "d, l, expected",
    [
        ((3, 1, 2), None, (0, 2, 1)),
        ((1, 1, 1), None, (2, 1, 0)),
        ((3, 1, 2), (1, 0, 0), (1, 2, 0)),
    ],
)
def test_lmo_examples(d, l, expected):
    x = lmo(np.array(d, dtype=float), box((2, 2, 2), 3, l))
    np.testing.assert_array_equal(x, expected)
    assert x.dtype == np.int64


def test_lmo_infeasible_box():
    with pytest.raises(InfeasibleBoxError):
        lmo(np.zeros(2), box((1, 1), 3))


def test_lmo_beats_enumeration(rng):
    for _ in range(200):
        m = int(rng.integers(2, 7))
        l = rng.integers(0, 2, size=m)
        u = l + rng.integers(0, 3, size=m)
        b = BoundBox(l, u, int(rng.integers(l.sum(), u.sum() + 1)))
        d = rng.standard_normal(m)
        x = lmo(d, b)
        assert x.sum() == b.N and np.all(x >= b.l) and np.all(x <= b.u)
        best = min(d @ y for y in enumerate_integer_points(b))
        assert d @ x <= best + 1e-12


@pytest.mark.parametrize(
    "w, u, N, expected",
    [
        ((1.6, 0.9, 0.5), (2, 2, 2), 3, (2, 1, 0)),
        ((1.0, 2.0, 0.0), (2, 2, 2), 3, (1, 2, 0)),
        ((0.5, 0.5), (1, 1), 1, (1, 0)),
    ],
)
def test_round_examples(w, u, N, expected):
    np.testing.assert_array_equal(round_to_feasible(np.array(w), box(u, N)), expected)


def test_round_respects_lower_bounds():
    b = BoundBox(np.array([1, 1, 0]), np.array([2, 2, 2]), 2)
    x = round_to_feasible(np.array([0.9999999, 1.0000001, 0.0]), b)
    np.testing.assert_array_equal(x, [1, 1, 0])


def test_round_is_feasible(rng):
    for _ in range(200):
        m = int(rng.integers(2, 8))
        u = rng.integers(1, 4, size=m)
        b = BoundBox(np.zeros(m), u, int(rng.integers(0, u.sum() + 1)))
        points = np.vstack(list(enumerate_integer_points(b))).astype(float)
        w = rng.dirichlet(np.ones(len(points))) @ points
        x = round_to_feasible(w, b)
        assert x.sum() == b.N and np.all(x >= 0) and np.all(x <= u)
        assert np.abs(x - w).sum() <= m


@pytest.mark.parametrize(
    "l, u, N, expected",
    [
        ((0, 0), (2, 2), 2, [(0, 2), (1, 1), (2, 0)]),
        ((1, 1), (1, 1), 2, [(1, 1)]),
        ((0, 0, 0), (1, 1, 1), 2, [(0, 1, 1), (1, 0, 1), (1, 1, 0)]),
    ],
)
def test_enumeration_examples(l, u, N, expected):
    b = BoundBox(np.array(l), np.array(u), N)
    assert [tuple(x) for x in enumerate_integer_points(b)] == expected
    assert count_integer_points(b) == len(expected)


def test_enumeration_cap():
    b = box((5,) * 8, 20)
    with pytest.raises(EnumerationLimitError):
        next(enumerate_integer_points(b, cap=1000))


def test_count_matches_enumeration(rng):
    for _ in range(20):
        m = int(rng.integers(1, 6))
        u = rng.integers(0, 4, size=m)
        b = box(u, int(rng.integers(0, u.sum() + 1)))
        points = list(enumerate_integer_points(b))
        assert len(points) == count_integer_points(b)
        assert len({tuple(p) for p in points}) == len(points)


class TestBoundBox:
    def test_feasibility(self):
        assert box((2, 2), 4).is_feasible()
        assert not box((2, 2), 5).is_feasible()
        assert not BoundBox(np.array([2, 0]), np.array([1, 2]), 2).is_feasible()

    def test_tighten(self):
        b = box((2, 2, 2), 3)
        assert b.tighten_upper(0, 1).u.tolist() == [1, 2, 2]
        assert b.tighten_lower(2, 1).l.tolist() == [0, 0, 1]
        assert is_subbox(b.tighten_upper(0, 1), b)
        assert is_subbox(b.tighten_lower(2, 1), b)
        assert not is_subbox(b, b.tighten_upper(0, 1))

    def test_barycenter(self):
        b = BoundBox(np.array([1, 0, 0]), np.array([2, 2, 4]), 5)
        c = b.barycenter()
        assert c.sum() == pytest.approx(5)
        assert b.contains(c)
        np.testing.assert_allclose(c, [1 + 4 / 7, 8 / 7, 16 / 7])
