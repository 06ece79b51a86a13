"""Tests for instance generation, validation and JSON I/O"""
import json

import numpy as np
import pytest

from conftest import identity_instance
from instance import (
    Correlation,
    Criterion,
    CriterionKind,
    GeneratorSpec,
    Instance,
    InstanceError,
    Variant,
    dumps,
    generate,
    load,
    load_instance_dir,
    loads,
    save,
    validate,
)


class TestCriterion:
    def test_dopt_ignores_p(self):
        assert Criterion(CriterionKind.DOPT, 3.0).p == 0.0

    def test_aopt_pins_p(self):
        assert Criterion(CriterionKind.AOPT).p == 1.0
        with pytest.raises(InstanceError):
            Criterion(CriterionKind.LOGAOPT, 0.5)

    @pytest.mark.parametrize("p", [0.0, -1.0, float("inf")])
    def test_trace_kinds_need_positive_p(self, p):
        with pytest.raises(InstanceError):
            Criterion(CriterionKind.GTIOPT, p)

    def test_kind_properties(self):
        assert CriterionKind.LOGGTIOPT.is_log and CriterionKind.LOGGTIOPT.is_trace
        assert not CriterionKind.DOPT.is_trace


class TestGenerate:
    def test_tiny_spec_widens_upper_bounds(self):
        inst = generate(GeneratorSpec(m=2, n=2, seed=1))
        assert inst.N == 3
        assert np.array_equal(inst.l, [0, 0])
        assert np.array_equal(inst.u, [3, 3])
        assert validate(inst) == []

    def test_optimal_budget(self):
        inst = generate(GeneratorSpec(m=50, n=12, seed=1))
        assert inst.N == 18
        assert inst.C is None
        assert np.all((inst.u >= 1) & (inst.u <= 6))
        assert inst.u.sum() >= inst.N

    def test_fusion_ranges(self):
        inst = generate(GeneratorSpec(m=60, n=6, variant=Variant.FUSION, seed=3))
        assert 3 <= inst.N <= 20
        assert np.all((inst.u >= 1) & (inst.u <= 6))
        np.linalg.cholesky(inst.C)
        np.testing.assert_array_equal(inst.C, inst.C.T)

    def test_deterministic(self):
        spec = GeneratorSpec(m=20, n=5, variant=Variant.FUSION, correlation=Correlation.CORRELATED, seed=4)
        assert dumps(generate(spec)) == dumps(generate(spec))

    def test_name(self):
        inst = generate(GeneratorSpec(m=20, n=5, correlation=Correlation.CORRELATED, seed=2))
        assert inst.name == "optimal_correlated_20_5_2"

    def test_weak_correlation_is_nearly_independent(self):
        inst = generate(GeneratorSpec(m=2000, n=5, correlation=Correlation.CORRELATED, rho=0.01, seed=1))
        r = np.corrcoef(inst.A, rowvar=False)
        off = r[~np.eye(5, dtype=bool)]
        assert np.mean(np.abs(off)) < 0.1

    def test_strong_correlation_shows(self):
        inst = generate(GeneratorSpec(m=2000, n=5, correlation=Correlation.CORRELATED, seed=1))
        r = np.corrcoef(inst.A, rowvar=False)
        assert r[0, 1] > 0.8

    @pytest.mark.parametrize("kwargs", [dict(m=5, n=0), dict(m=3, n=4), dict(m=5, n=2, rho=1.0)])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(InstanceError, match="invalid generator spec"):
            GeneratorSpec(**kwargs)

    @pytest.mark.parametrize("seed", range(5))
    def test_generated_instances_validate(self, seed):
        for variant in Variant:
            for corr in Correlation:
                assert validate(generate(GeneratorSpec(m=30, n=7, variant=variant, correlation=corr, seed=seed))) == []


class TestValidate:
    def test_valid(self):
        assert validate(identity_instance(N=2)) == []

    def test_rank_deficient(self):
        inst = Instance(A=np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]), N=2, l=np.zeros(3), u=np.full(3, 2))
        assert validate(inst) == ["rank deficient"]

    def test_budget_exceeds_upper_bounds(self):
        inst = identity_instance(N=5, u=(1, 2))
        assert validate(inst) == ["budget exceeds upper bounds"]

    def test_bounds(self):
        inst = identity_instance(N=2, u=(1, 2), l=(2, 0))
        assert "upper bounds below lower bounds" in validate(inst)

    def test_fusion_matrix_not_pd(self):
        inst = identity_instance(N=2, C=np.diag([1.0, -1.0]))
        assert validate(inst) == ["fusion matrix not positive definite"]


class TestIO:
    def test_round_trip(self, tmp_path):
        for variant in Variant:
            inst = generate(GeneratorSpec(m=12, n=3, variant=variant, seed=7))
            inst = inst.with_criterion(Criterion(CriterionKind.LOGGTIOPT, 0.37))
            back = load(save(inst, tmp_path / f"{inst.name}.json"))
            assert back == inst
            assert back.name == inst.name

    def test_seventeen_digits(self):
        inst = generate(GeneratorSpec(m=6, n=2, seed=1))
        data = json.loads(dumps(inst))
        np.testing.assert_array_equal(np.array(data["A"]), inst.A)
        assert data["criterion"] == {"kind": "DOpt", "p": 0.0}

    def test_missing_field_is_named(self):
        data = json.loads(dumps(identity_instance()))
        del data["A"]
        with pytest.raises(InstanceError, match="'A'"):
            loads(json.dumps(data))

    def test_invariant_violation(self):
        data = json.loads(dumps(identity_instance()))
        data["l"] = [3, 0]
        with pytest.raises(InstanceError, match="upper bounds below lower bounds"):
            loads(json.dumps(data))

    @pytest.mark.parametrize("key, value", [("m", 2.5), ("n", 1.9), ("N", 3.5), ("n", "2"), ("m", True)])
    def test_non_integer_size_is_rejected(self, key, value):
        data = json.loads(dumps(identity_instance()))
        data[key] = value
        with pytest.raises(InstanceError, match=f"field '{key}' must be an integer"):
            loads(json.dumps(data))

    def test_malformed_json(self):
        with pytest.raises(InstanceError, match="malformed JSON"):
            loads("{not json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load(tmp_path / "nope.json")

    def test_instance_dir(self, tmp_path):
        for seed in (2, 1):
            inst = generate(GeneratorSpec(m=8, n=2, seed=seed))
            save(inst, tmp_path / f"{inst.name}.json")
        loaded = load_instance_dir(tmp_path)
        assert [i.name for i in loaded] == ["optimal_independent_8_2_1", "optimal_independent_8_2_2"]

    def test_empty_dir(self, tmp_path):
        with pytest.raises(InstanceError, match="no instance files"):
            load_instance_dir(tmp_path)


def test_permuted_reorders_experiments():
    inst = identity_instance(u=(1, 2))
    perm = inst.permuted(np.array([1, 0]))
    np.testing.assert_array_equal(perm.u, [2, 1])
    np.testing.assert_array_equal(perm.A, [[0.0, 1.0], [1.0, 0.0]])
