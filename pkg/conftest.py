"""Shared fixtures for the solver tests"""
import numpy as np
import pytest

from instance import Criterion, CriterionKind, Instance


def identity_instance(N=3, u=(2, 2), kind=CriterionKind.DOPT, p=1.0, C=None, l=None):
    u = np.asarray(u)
    return Instance(
        A=np.eye(len(u)),
        N=N,
        l=np.zeros(len(u)) if l is None else np.asarray(l),
        u=u,
        C=C,
        criterion=Criterion(kind, p),
        name="identity",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def dopt_identity():
    """A = I2, u = (2,2), N = 3 with the D-criterion."""
    return identity_instance()


@pytest.fixture
def make_identity():
    return identity_instance


def is_subbox(child, parent):
    """Child bounds lie inside the parent's and the budget is unchanged."""
    return bool(np.all(parent.l <= child.l) and np.all(child.u <= parent.u) and child.N == parent.N)
