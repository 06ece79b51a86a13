"""Tests for the coordinate-exchange baseline"""
import math

import numpy as np
import pytest

import cobnb
from bnb import SolveStatus, solve, start_point
from cobnb import CDReason, ExchangeStats, cd_solve, cobnb_solve, exchange_step_a, exchange_step_d
from conftest import identity_instance
from criteria import DomainError
from instance import CriterionKind, GeneratorSpec, Variant, generate
from simplex_lmo import BoundBox
from verify import ORACLE_CRITERIA, ORACLE_PARAMS, bounded_argmin, brute_force, random_pd, tiny_instance

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


@pytest.fixture
def unbalanced():
    # X = diag(2, 1), moving weight from experiment 0 to experiment 1
    return ExchangeStats.from_matrix(np.diag([2.0, 1.0]), E2, E1)


def random_stats(rng, n=4):
    X = random_pd(rng, n, rng.uniform(1.0, 4.0))
    v_j, v_k = rng.standard_normal((2, n))
    return ExchangeStats.from_matrix(X, v_j, v_k)


class TestExchangeStats:
    def test_closed_forms(self, unbalanced):
        assert unbalanced.C == pytest.approx(0.5)
        assert unbalanced.D == pytest.approx(0.5)
        assert unbalanced.A == pytest.approx(0.75)
        assert unbalanced.B == pytest.approx(-0.75)

    def test_det_ratio_matches_determinant(self, rng):
        X = random_pd(rng, 3, 2.0)
        v_j, v_k = rng.standard_normal((2, 3))
        stats = ExchangeStats.from_matrix(X, v_j, v_k)
        theta = 0.1
        moved = X + theta * (np.outer(v_j, v_j) - np.outer(v_k, v_k))
        assert stats.det_ratio(theta) == pytest.approx(np.linalg.det(moved) / np.linalg.det(X))

    def test_trace_decrease_matches_inverse(self, unbalanced):
        theta = 0.3
        after = 1 / (2 - theta) + 1 / (1 + theta)
        assert unbalanced.trace_decrease(theta) == pytest.approx(1.5 - after)

    def test_singular_step(self, unbalanced):
        assert unbalanced.singular_step() == pytest.approx(2.0)


class TestExchangeSteps:
    def test_symmetric_pair_does_not_move(self):
        stats = ExchangeStats.from_matrix(np.eye(2), E1, E2)
        assert exchange_step_d(stats, 1.0, 1.0) == 0.0
        assert exchange_step_a(stats, 0.5, 0.5) == 0.0

    @pytest.mark.parametrize("headroom", [(0.0, 1.0), (1.0, 0.0)])
    def test_zero_headroom(self, unbalanced, headroom):
        assert exchange_step_d(unbalanced, *headroom) == 0.0
        assert exchange_step_a(unbalanced, *headroom) == 0.0

    def test_d_step_balances(self, unbalanced):
        assert exchange_step_d(unbalanced, 1.0, 2.0) == pytest.approx(0.5)

    def test_a_step_balances(self, unbalanced):
        assert exchange_step_a(unbalanced, 1.0, 2.0) == pytest.approx(0.5)

    def test_headroom_binds(self, unbalanced):
        assert exchange_step_d(unbalanced, 0.2, 2.0) == pytest.approx(0.2)
        assert exchange_step_a(unbalanced, 2.0, 0.2) == pytest.approx(0.2)

    def test_a_step_beats_grid(self, rng):
        for _ in range(100):
            stats = random_stats(rng)
            cap = rng.uniform(0.1, 2.0)
            upper = min(cap, 0.999 * stats.singular_step())
            grid = np.linspace(0.0, upper, 2001)
            best = max(stats.trace_decrease(t) for t in grid)
            theta = exchange_step_a(stats, cap, cap)
            assert 0.0 <= theta <= cap
            assert stats.trace_decrease(theta) >= best - 1e-9 * max(1.0, abs(best))

    def test_d_step_matches_bounded_search(self, rng):
        for _ in range(100):
            stats = random_stats(rng)
            cap = min(rng.uniform(0.1, 2.0), 0.999 * stats.singular_step())
            ref = bounded_argmin(lambda t: -math.log(max(stats.det_ratio(t), 1e-300)), 0.0, cap)
            theta = exchange_step_d(stats, cap, cap)
            assert stats.det_ratio(theta) >= stats.det_ratio(ref) - 1e-9


class TestCoordinateDescent:
    def test_single_exchange_reaches_optimum(self, dopt_identity):
        box = BoundBox.from_instance(dopt_identity)
        cd = cd_solve(dopt_identity, box, np.array([2.0, 1.0]), 1e-10, 100)
        assert cd.reason is CDReason.CONVERGED
        np.testing.assert_allclose(cd.x, [1.5, 1.5])
        assert cd.primal == pytest.approx(-2 * math.log(1.5))
        assert cd.exchanges == 1

    def test_start_at_optimum(self, dopt_identity):
        box = BoundBox.from_instance(dopt_identity)
        cd = cd_solve(dopt_identity, box, np.array([1.5, 1.5]), 1e-10, 100)
        assert cd.reason is CDReason.CONVERGED
        assert cd.exchanges == 0

    def test_aopt(self):
        inst = identity_instance(kind=CriterionKind.AOPT)
        cd = cd_solve(inst, BoundBox.from_instance(inst), np.array([2.0, 1.0]), 1e-10, 100)
        np.testing.assert_allclose(cd.x, [1.5, 1.5], atol=1e-8)
        assert cd.primal == pytest.approx(4 / 3)

    def test_iter_cap(self, dopt_identity):
        box = BoundBox.from_instance(dopt_identity)
        cd = cd_solve(dopt_identity, box, np.array([2.0, 1.0]), 1e-10, 0)
        assert cd.reason is CDReason.ITER_LIMIT
        assert cd.exchanges == 0

    def test_singular_start(self, dopt_identity):
        with pytest.raises(DomainError):
            cd_solve(dopt_identity, BoundBox.from_instance(dopt_identity), np.array([2.0, 0.0]), 1e-8, 10)

    @pytest.mark.parametrize("criterion", ORACLE_CRITERIA, ids=lambda c: c.kind.value)
    def test_history_is_monotone(self, criterion):
        inst = generate(GeneratorSpec(m=20, n=4, seed=6)).with_criterion(criterion)
        box = BoundBox.from_instance(inst)
        cd = cd_solve(inst, box, start_point(inst).astype(float), 1e-8, 500, record_history=True)
        assert len(cd.history) == cd.exchanges + 1
        assert all(b < a for a, b in zip(cd.history, cd.history[1:]))
        assert box.contains(cd.x)


class TestCoBnB:
    def test_dopt_identity(self, dopt_identity):
        report = cobnb_solve(dopt_identity)
        assert report.status is SolveStatus.OPTIMAL
        assert report.solver == "cobnb"
        assert report.objective == pytest.approx(-math.log(2))

    def test_infeasible(self):
        assert cobnb_solve(identity_instance(N=1, u=(1, 1))).status is SolveStatus.INFEASIBLE

    @pytest.mark.parametrize("variant", list(Variant))
    @pytest.mark.parametrize("criterion", ORACLE_CRITERIA, ids=lambda c: c.kind.value)
    def test_matches_brute_force(self, criterion, variant):
        rng = np.random.default_rng(11)
        for _ in range(3):
            inst = tiny_instance(rng, criterion, variant)
            oracle = brute_force(inst)
            report = cobnb_solve(inst, ORACLE_PARAMS)
            assert report.status in (SolveStatus.OPTIMAL, SolveStatus.GAP_LIMIT)
            assert abs(report.objective - oracle.value) <= 1e-6 * max(1.0, abs(oracle.value))
            assert report.incumbent.sum() == inst.N

    def test_agrees_with_frank_wolfe_tree(self):
        inst = generate(GeneratorSpec(m=12, n=3, variant=Variant.FUSION, seed=4))
        a = cobnb_solve(inst, ORACLE_PARAMS)
        b = solve(inst, ORACLE_PARAMS)
        assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-6)

    def test_exchange_fallbacks_reported(self):
        report = cobnb_solve(identity_instance(kind=CriterionKind.AOPT), ORACLE_PARAMS)
        assert report.exchange_fallbacks == 0
        assert report.to_dict()["exchange_fallbacks"] == 0

    def test_exchange_fallbacks_are_counted(self, monkeypatch):
        exact = cobnb._exchange_step
        monkeypatch.setattr(cobnb, "_exchange_step", lambda *args: (exact(*args)[0], True))
        report = cobnb_solve(identity_instance(kind=CriterionKind.AOPT), ORACLE_PARAMS)
        assert report.objective == pytest.approx(1.5)
        assert report.exchange_fallbacks >= 1
