"""Information matrices, criterion objectives and their analytic constants"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import PD_PIVOT_REL_TOL
from instance import Criterion, CriterionKind, Instance

logger = logging.getLogger(__name__)

# |log(lambda_b / lambda_a)| below which the divided difference uses the derivative
_DIVIDED_DIFF_TOL = 1e-10


class DomainError(ValueError):
    """Information matrix not positive definite, or mismatched dimensions."""


@dataclass
class InfoMatrix:
    X: np.ndarray
    chol: Optional[np.ndarray]
    is_pd: bool


def pd_cholesky(X: np.ndarray) -> Optional[np.ndarray]:
    """
    Cholesky factor of X when it is numerically positive definite.

    Returns:
        Lower factor, or None when a squared pivot falls below 1e-12 * max diagonal
    """
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return None
    scale = max(float(np.max(np.diag(X))), np.finfo(float).tiny)
    if float(np.min(np.diag(L))) ** 2 < PD_PIVOT_REL_TOL * scale:
        return None
    return L


def info_matrix(instance: Instance, x: np.ndarray) -> InfoMatrix:
    """
    Information matrix A^T diag(x) A, plus C for Fusion instances.

    Raises:
        DomainError: x has the wrong length
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.m,):
        raise DomainError(f"dimension mismatch: design has shape {x.shape}, expected ({instance.m},)")
    X = (instance.A.T * x) @ instance.A
    if instance.C is not None:
        X = X + instance.C
    X = 0.5 * (X + X.T)
    L = pd_cholesky(X)
    return InfoMatrix(X=X, chol=L, is_pd=L is not None)


def _divided_differences(w: np.ndarray, c: float, q: float) -> np.ndarray:
    """
    First divided differences of f'(t) = -c * t**(-q) at the eigenvalues w.

    Gamma_ab = (f'(w_a) - f'(w_b)) / (w_a - w_b), f''(w_a) on the diagonal.
    """
    la = w[:, None]
    t = np.log(w[None, :] / la)
    small = np.abs(t) < _DIVIDED_DIFF_TOL
    safe_t = np.where(small, 1.0, t)
    ratio = np.where(small, -q, np.expm1(-q * safe_t) / np.expm1(safe_t))
    gamma = -c * la ** (-q - 1.0) * ratio
    return 0.5 * (gamma + gamma.T)


class Objective:
    """Criterion objective over designs x, defined where X(x) is positive definite."""

    def __init__(self, instance: Instance, criterion: Optional[Criterion] = None):
        self.instance = instance
        self.criterion = criterion if criterion is not None else instance.criterion

    @property
    def kind(self) -> CriterionKind:
        return self.criterion.kind

    @property
    def p(self) -> float:
        return self.criterion.p

    def info(self, x: np.ndarray) -> InfoMatrix:
        return info_matrix(self.instance, x)

    def is_domain_feasible(self, x: np.ndarray) -> bool:
        return self.info(x).is_pd

    def _spectrum(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        info = self.info(x)
        if not info.is_pd:
            raise DomainError("information matrix is not positive definite")
        w, Q = np.linalg.eigh(info.X)
        if w[0] <= 0:
            raise DomainError("information matrix is not positive definite")
        return w, self.instance.A @ Q

    def value(self, x: np.ndarray) -> float:
        w, _ = self._spectrum(x)
        if self.kind is CriterionKind.DOPT:
            return float(-np.sum(np.log(w)))
        trace = float(np.sum(w ** (-self.p)))
        return math.log(trace) if self.kind.is_log else trace

    def value_or_inf(self, x: np.ndarray) -> float:
        """Objective value, +inf outside the domain."""
        try:
            return self.value(x)
        except DomainError:
            return math.inf

    def gradient(self, x: np.ndarray) -> np.ndarray:
        w, B = self._spectrum(x)
        B2 = B * B
        if self.kind is CriterionKind.DOPT:
            return -(B2 @ (1.0 / w))
        p = self.p
        grad = -p * (B2 @ w ** (-p - 1.0))
        if self.kind.is_log:
            grad = grad / float(np.sum(w ** (-p)))
        return grad

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Exact Hessian through the Daleckii-Krein formula on X = Q diag(w) Q^T."""
        w, B = self._spectrum(x)
        m, n = B.shape
        if self.kind is CriterionKind.DOPT:
            M = (B / w) @ B.T
            H = M * M
        else:
            p = self.p
            gamma = _divided_differences(w, c=p, q=p + 1.0)
            P = (B[:, :, None] * B[:, None, :]).reshape(m, n * n)
            H = (P * gamma.ravel()) @ P.T
            if self.kind.is_log:
                trace = float(np.sum(w ** (-p)))
                g = -p * ((B * B) @ w ** (-p - 1.0))
                H = H / trace - np.outer(g, g) / trace**2
        return 0.5 * (H + H.T)


@dataclass(frozen=True)
class FusionConstants:
    L_fF: float
    L_gF: float
    L_kF: float
    a_C: float


@dataclass(frozen=True)
class LocalConstants:
    L_f: float
    L_g: float
    L_k: float


@dataclass(frozen=True)
class GSCWitness:
    lhs: float
    rhs: float
    M_f: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-300


def _max_row_norm_sq(A: np.ndarray) -> float:
    return float(np.max(np.sum(A * A, axis=1)))


def _spectral_norm_sq(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2)) ** 2


def _trace_exponent(instance: Instance, p: Optional[float]) -> float:
    if p is not None:
        return float(p)
    return instance.criterion.p if instance.criterion.kind.is_trace else 1.0


def eig_bound(instance: Instance, x: Optional[np.ndarray] = None) -> float:
    """
    Upper bound on lambda_max(A^T diag(x) A) over the box 0 <= x <= u.

    Uses A^T diag(x) A <= A^T diag(u) A in the Loewner order.
    """
    X_u = (instance.A.T * instance.u.astype(float)) @ instance.A
    return float(np.linalg.eigvalsh(0.5 * (X_u + X_u.T))[-1])


def fusion_constants(instance: Instance, p: Optional[float] = None) -> FusionConstants:
    """
    Global smoothness constants of the Fusion objectives.

    Args:
        instance: Fusion instance
        p: Trace exponent; defaults to the instance criterion's p (1 for DOpt)

    Raises:
        ValueError: Optimal instance
    """
    if instance.C is None:
        raise ValueError("fusion constants require a Fusion instance")
    p = _trace_exponent(instance, p)
    diag_max = _max_row_norm_sq(instance.A)
    norm_sq = _spectral_norm_sq(instance.A)
    lam = np.linalg.eigvalsh(instance.C)
    lam_min, lam_max = float(lam[0]), float(lam[-1])
    L_fF = diag_max * norm_sq / lam_min**2
    L_gF = p * (p + 1) * diag_max * norm_sq / lam_min ** (2 + p)
    a_C = lam_max + eig_bound(instance)
    L_kF = a_C**p / instance.n * L_gF
    return FusionConstants(L_fF=L_fF, L_gF=L_gF, L_kF=L_kF, a_C=a_C)


def local_constants(instance: Instance, x0: np.ndarray, p: Optional[float] = None) -> LocalConstants:
    """
    Smoothness constants on the sublevel set of a domain-feasible start x0.

    Diagnostic only; the solvers never use them.
    """
    p = _trace_exponent(instance, p)
    info = info_matrix(instance, x0)
    if not info.is_pd:
        raise DomainError("start point is not domain feasible")
    m, n = instance.m, instance.n
    diag_max = _max_row_norm_sq(instance.A)
    norm_sq = _spectral_norm_sq(instance.A)
    det0 = float(np.linalg.det(info.X))
    L_f = (
        diag_max
        * norm_sq
        * (m * instance.N * diag_max) ** (n - 1)
        / (float(n - 1) ** (n - 1) * det0**2)
    )
    trace_inv = float(np.trace(np.linalg.inv(info.X)))
    L_g = p * (p + 1) * diag_max * norm_sq * trace_inv ** (2 + p)
    L_k = eig_bound(instance) ** p / n * L_g
    return LocalConstants(L_f=L_f, L_g=L_g, L_k=L_k)


def _inv_power(V: np.ndarray, p: float) -> np.ndarray:
    w, Q = np.linalg.eigh(V)
    return (Q * w ** (-p)) @ Q.T


def _require_pd(V: np.ndarray, label: str = "V") -> None:
    if pd_cholesky(0.5 * (V + V.T)) is None:
        raise DomainError(f"{label} is not positive definite")


def gsc_witness(
    obj: Objective, V: np.ndarray, U: np.ndarray, alpha: Optional[float] = None
) -> GSCWitness:
    """
    Both sides of the generalized self-concordance inequality for Tr(X^-p) along V + tU.

    Args:
        obj: Trace-kind objective supplying p
        V: Positive definite base point with lambda_max(V) <= alpha
        U: Symmetric direction
        alpha: Eigenvalue ceiling, eig_bound(obj.instance) when omitted

    Returns:
        GSCWitness with lhs = |h'''(0)| and rhs = M_f * h''(0)**1.5
    """
    if not obj.kind.is_trace:
        raise ValueError("gsc_witness requires a trace criterion")
    _require_pd(V)
    p = obj.p
    n = V.shape[0]
    if alpha is None:
        alpha = eig_bound(obj.instance)
    Vp = _inv_power(V, p)
    Vi = _inv_power(V, 1.0)
    UVi = U @ Vi
    second = p * (p + 1) * float(np.trace(Vp @ UVi @ UVi))
    third = p * (p + 1) * (p + 2) * float(np.trace(Vp @ UVi @ UVi @ UVi))
    M_f = (p + 2) * (alpha ** (2 * p) * n) ** 0.25 / math.sqrt(p * (p + 1))
    rhs = M_f * max(second, 0.0) ** 1.5
    return GSCWitness(lhs=abs(third), rhs=rhs, M_f=M_f)


def logdet_curvature(A: np.ndarray, B: np.ndarray) -> float:
    """Tr((A^-1 B)^2), second derivative of -log det(A + tB) at 0."""
    _require_pd(A, "A")
    AiB = np.linalg.solve(A, B)
    return float(np.trace(AiB @ AiB))


def trace_power_curvature(A: np.ndarray, B: np.ndarray, p: float) -> float:
    _require_pd(A, "A")
    Ai = _inv_power(A, 1.0)
    return p * (p + 1) * float(np.trace(_inv_power(A, p) @ B @ Ai @ B @ Ai))


def log_trace_curvature(A: np.ndarray, B: np.ndarray, p: float) -> float:
    _require_pd(A, "A")
    trace = float(np.trace(_inv_power(A, p)))
    t2 = float(np.trace(_inv_power(A, p + 2) @ B @ B))
    t1 = float(np.trace(_inv_power(A, p + 1) @ B))
    return p * ((p + 1) * t2 * trace - p * t1**2) / trace**2


def log_trace_curvature_bound(A: np.ndarray, p: float) -> float:
    """Lower bound p / (n kappa(A)^p lambda_max(A)^2) for unit-Frobenius directions."""
    w = np.linalg.eigvalsh(A)
    kappa = w[-1] / w[0]
    return p / (A.shape[0] * kappa**p * w[-1] ** 2)
