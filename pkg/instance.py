"""Instance data model, random generation and JSON file I/O"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from config import DEFAULT_RHO, FUSION_RIDGE, RANK_REL_TOL, U_RESAMPLE_ATTEMPTS
from utils import make_rng

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class InstanceError(ValueError):
    """Malformed instance file, invalid generator spec or violated invariant."""


class CriterionKind(str, Enum):
    DOPT = "DOpt"
    AOPT = "AOpt"
    LOGAOPT = "LogAOpt"
    GTIOPT = "GTIOpt"
    LOGGTIOPT = "LogGTIOpt"

    @property
    def is_trace(self) -> bool:
        return self is not CriterionKind.DOPT

    @property
    def is_log(self) -> bool:
        return self in (CriterionKind.LOGAOPT, CriterionKind.LOGGTIOPT)


# Command-line spellings
CRITERION_ALIASES = {
    "dopt": CriterionKind.DOPT,
    "aopt": CriterionKind.AOPT,
    "logaopt": CriterionKind.LOGAOPT,
    "gti": CriterionKind.GTIOPT,
    "loggti": CriterionKind.LOGGTIOPT,
}


class Variant(str, Enum):
    OPTIMAL = "optimal"
    FUSION = "fusion"


class Correlation(str, Enum):
    INDEPENDENT = "independent"
    CORRELATED = "correlated"


@dataclass(frozen=True)
class Criterion:
    """
    Information criterion with its exponent.

    AOpt and LogAOpt pin p to 1, DOpt stores 0.
    """

    kind: CriterionKind = CriterionKind.DOPT
    p: float = 1.0

    def __post_init__(self) -> None:
        kind = CriterionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = float(self.p)
        if kind is CriterionKind.DOPT:
            p = 0.0
        elif kind in (CriterionKind.AOPT, CriterionKind.LOGAOPT):
            if p != 1.0:
                raise InstanceError(f"{kind.value} requires p = 1, got {p}")
        elif not (p > 0 and math.isfinite(p)):
            raise InstanceError(f"{kind.value} requires a finite p > 0, got {p}")
        object.__setattr__(self, "p", p)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "p": self.p}


@dataclass(eq=False)
class Instance:
    A: np.ndarray
    N: int
    l: np.ndarray
    u: np.ndarray
    C: Optional[np.ndarray] = None
    criterion: Criterion = field(default_factory=Criterion)
    name: str = ""

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.l = np.asarray(self.l, dtype=np.int64).ravel()
        self.u = np.asarray(self.u, dtype=np.int64).ravel()
        self.N = int(self.N)
        if self.C is not None:
            self.C = np.atleast_2d(np.asarray(self.C, dtype=float))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def is_fusion(self) -> bool:
        return self.C is not None

    @property
    def variant(self) -> Variant:
        return Variant.FUSION if self.is_fusion else Variant.OPTIMAL

    def with_criterion(self, criterion: Criterion) -> "Instance":
        return Instance(
            A=self.A, N=self.N, l=self.l, u=self.u, C=self.C, criterion=criterion, name=self.name
        )

    def permuted(self, perm: np.ndarray) -> "Instance":
        """Same instance with experiments reordered by perm."""
        perm = np.asarray(perm)
        return Instance(
            A=self.A[perm],
            N=self.N,
            l=self.l[perm],
            u=self.u[perm],
            C=self.C,
            criterion=self.criterion,
            name=self.name,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        if (self.C is None) != (other.C is None):
            return False
        return (
            self.N == other.N
            and self.criterion == other.criterion
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.l, other.l)
            and np.array_equal(self.u, other.u)
            and (self.C is None or np.array_equal(self.C, other.C))
        )


@dataclass(frozen=True)
class GeneratorSpec:
    m: int
    n: int
    variant: Variant = Variant.OPTIMAL
    correlation: Correlation = Correlation.INDEPENDENT
    seed: int = 1
    rho: float = DEFAULT_RHO
    criterion: Criterion = field(default_factory=Criterion)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "correlation", Correlation(self.correlation))
        problems = []
        if self.m < 1:
            problems.append("m must be positive")
        if not 1 <= self.n <= self.m:
            problems.append("n must satisfy 1 <= n <= m")
        if not 0 < self.rho < 1:
            problems.append("rho must lie in (0, 1)")
        if self.seed < 0:
            problems.append("seed must be nonnegative")
        if problems:
            raise InstanceError("invalid generator spec: " + "; ".join(problems))


def validate(instance: Instance) -> list[str]:
    """
    Check the instance invariants.

    Returns:
        List of violation messages, empty when the instance is valid
    """
    violations: list[str] = []
    A, l, u = instance.A, instance.l, instance.u
    m, n = A.shape
    if A.ndim != 2 or m == 0 or n == 0:
        return ["empty experiment matrix"]
    if not np.all(np.isfinite(A)):
        violations.append("non-finite entries in A")
    if l.shape != (m,) or u.shape != (m,):
        violations.append("bound length mismatch")
        return violations
    if n > m:
        violations.append("more parameters than experiments")
    elif np.all(np.isfinite(A)):
        sigma = np.linalg.svd(A, compute_uv=False)
        if sigma[-1] <= RANK_REL_TOL * sigma[0]:
            violations.append("rank deficient")
    if np.any(l < 0):
        violations.append("negative lower bounds")
    if np.any(u < l):
        violations.append("upper bounds below lower bounds")
    if l.sum() > instance.N:
        violations.append("lower bounds exceed budget")
    if instance.N > u.sum():
        violations.append("budget exceeds upper bounds")
    C = instance.C
    if C is not None:
        if C.shape != (n, n):
            violations.append("fusion matrix shape mismatch")
        elif not np.allclose(C, C.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(C).max())):
            violations.append("fusion matrix not symmetric")
        else:
            try:
                np.linalg.cholesky(C)
            except np.linalg.LinAlgError:
                violations.append("fusion matrix not positive definite")
    return violations


def _correlation_root(n: int, rho: float) -> np.ndarray:
    """Symmetric square root of Sigma_jk = rho**|j-k|."""
    idx = np.arange(n)
    sigma = rho ** np.abs(idx[:, None] - idx[None, :])
    w, Q = np.linalg.eigh(sigma)
    return (Q * np.sqrt(np.clip(w, 0.0, None))) @ Q.T


def _sample_rows(rng: np.random.Generator, rows: int, spec: GeneratorSpec) -> np.ndarray:
    Z = rng.standard_normal((rows, spec.n))
    if spec.correlation is Correlation.CORRELATED:
        return Z @ _correlation_root(spec.n, spec.rho)
    return Z


def _sample_upper_bounds(rng: np.random.Generator, m: int, N: int, high: int) -> np.ndarray:
    high = max(1, high)
    for _ in range(U_RESAMPLE_ATTEMPTS):
        u = rng.integers(1, high + 1, size=m)
        if u.sum() >= N:
            return u.astype(np.int64)
    widened = math.ceil(N / m) + 1
    logger.debug("upper bounds widened to %d after %d attempts", widened, U_RESAMPLE_ATTEMPTS)
    return np.full(m, widened, dtype=np.int64)


def generate(spec: GeneratorSpec) -> Instance:
    """
    Generate a random instance, deterministic given the spec.

    Args:
        spec: Size, variant, correlation and seed

    Returns:
        Instance passing validate
    """
    rng = make_rng(spec.seed)
    m, n = spec.m, spec.n
    if spec.variant is Variant.OPTIMAL:
        N = int(math.floor(1.5 * n))
        A = _sample_rows(rng, m, spec)
        u = _sample_upper_bounds(rng, m, N, N // 3)
        C = None
    else:
        low = max(1, math.ceil(m / 20))
        high = max(low, m // 3)
        N = int(rng.integers(low, high + 1))
        A = _sample_rows(rng, m, spec)
        u = _sample_upper_bounds(rng, m, N, m // 10)
        B = _sample_rows(rng, n, spec)
        gram = B.T @ B
        C = gram + FUSION_RIDGE * np.trace(gram) / n * np.eye(n)
        C = 0.5 * (C + C.T)
    name = f"{spec.variant.value}_{spec.correlation.value}_{m}_{n}_{spec.seed}"
    instance = Instance(
        A=A, N=N, l=np.zeros(m, dtype=np.int64), u=u, C=C, criterion=spec.criterion, name=name
    )
    problems = validate(instance)
    if problems:
        raise InstanceError(f"generated instance {name} is invalid: {', '.join(problems)}")
    return instance


def _fmt(value: float) -> str:
    if not math.isfinite(value):
        raise InstanceError(f"cannot serialize non-finite value {value}")
    return format(float(value), ".17g")


def _matrix_json(M: np.ndarray) -> str:
    rows = ["[" + ", ".join(_fmt(v) for v in row) + "]" for row in M]
    return "[\n    " + ",\n    ".join(rows) + "\n  ]"


def dumps(instance: Instance) -> str:
    """Serialize to the instance JSON format, reals with 17 significant digits."""
    parts = [
        f'  "m": {instance.m}',
        f'  "n": {instance.n}',
        f'  "N": {instance.N}',
        f'  "A": {_matrix_json(instance.A)}',
        '  "l": [' + ", ".join(str(int(v)) for v in instance.l) + "]",
        '  "u": [' + ", ".join(str(int(v)) for v in instance.u) + "]",
        '  "C": ' + ("null" if instance.C is None else _matrix_json(instance.C)),
        '  "criterion": {"kind": "%s", "p": %s}'
        % (instance.criterion.kind.value, _fmt(instance.criterion.p)),
    ]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def save(instance: Instance, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(instance))
    return path


def _require(data: dict, key: str):
    if key not in data:
        raise InstanceError(f"missing field '{key}'")
    return data[key]


def _require_int(data: dict, key: str) -> int:
    value = _require(data, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise InstanceError(f"field '{key}' must be an integer")
    return int(value)


def _as_matrix(value, key: str, shape: tuple[int, int]) -> np.ndarray:
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"field '{key}' is not a numeric matrix") from exc
    if M.shape != shape:
        raise InstanceError(f"field '{key}' has shape {M.shape}, expected {shape}")
    return M


def _as_int_vector(value, key: str, m: int) -> np.ndarray:
    try:
        raw = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"field '{key}' is not a numeric vector") from exc
    if raw.shape != (m,):
        raise InstanceError(f"field '{key}' has length {raw.size}, expected {m}")
    if not np.all(raw == np.round(raw)):
        raise InstanceError(f"field '{key}' must contain integers")
    return raw.astype(np.int64)


def loads(text: str, name: str = "") -> Instance:
    """
    Parse the instance JSON format.

    Raises:
        InstanceError: Malformed JSON, missing or ill-shaped field, or violated invariant
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceError("instance JSON must be an object")
    m = _require_int(data, "m")
    n = _require_int(data, "n")
    N = _require_int(data, "N")
    A = _as_matrix(_require(data, "A"), "A", (m, n))
    l = _as_int_vector(_require(data, "l"), "l", m)
    u = _as_int_vector(_require(data, "u"), "u", m)
    raw_C = data.get("C")
    C = None if raw_C is None else _as_matrix(raw_C, "C", (n, n))
    crit = _require(data, "criterion")
    if not isinstance(crit, dict):
        raise InstanceError("field 'criterion' must be an object")
    try:
        criterion = Criterion(CriterionKind(_require(crit, "kind")), float(crit.get("p", 1.0)))
    except ValueError as exc:
        raise InstanceError(f"field 'criterion': {exc}") from exc
    instance = Instance(A=A, N=N, l=l, u=u, C=C, criterion=criterion, name=name)
    problems = validate(instance)
    if problems:
        raise InstanceError("invariant violation: " + ", ".join(problems))
    return instance


def load(path: PathLike) -> Instance:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"instance file not found: {path}")
    return loads(path.read_text(encoding="utf-8"), name=path.stem)


def load_instance_dir(directory: PathLike) -> list[Instance]:
    """
    Load every *.json instance in a directory, sorted by file name.

    Raises:
        FileNotFoundError: Directory missing
        InstanceError: Directory holds no instance files
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"instance directory not found: {directory}")
    files = sorted(directory.glob("*.json"))
    if not files:
        raise InstanceError(f"no instance files in {directory}")
    return [load(p) for p in files]
