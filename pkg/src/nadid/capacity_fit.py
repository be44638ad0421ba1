"""
Least-squares estimation of a standardized capacity from Choquet samples.

Each sample is a criteria vector ``f`` with an observed score ``e``. The
Choquet prediction is linear in the capacity values of the upper sets
selected by the ordering of ``f``, so the squared-error fit is a convex
quadratic program in the vector ``u`` of capacity values (indexed by
subset mask)::

    minimize   0.5 u'(D + eps I)u + r'u
    subject to u[A] - u[A | {x}] <= 0   for every covering pair
               u[empty] = 0,  u[X] = 1

with ``D = sum_i c_i c_i'`` and ``r = -sum_i e_i c_i``. The symmetric and
k-additive variants reparametrize ``u`` linearly and keep the same
structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from . import qp
from .integrals import ValuedFunction, upper_set_masks
from .measure import Capacity, GroundSet, mobius_transform, popcounts, validate

MAX_FIT_N = 12
DEFAULT_EPSILON = 1e-9
DEFAULT_TOL = 1e-8


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    f: ValuedFunction
    e: float


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Quadratic program over capacity values indexed by subset mask."""

    ground: GroundSet
    D: np.ndarray
    r: np.ndarray
    # Covering pairs (A, B) with B = A | {x}; constraint u[A] - u[B] <= 0.
    pairs: Tuple[Tuple[int, int], ...]
    epsilon: float = DEFAULT_EPSILON
    # Rows c_i of the linear Choquet predictor and the targets, kept for
    # objective evaluation.
    design: np.ndarray = field(default=None, repr=False)
    targets: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.D.shape[0]

    def hessian(self) -> np.ndarray:
        return self.D + self.epsilon * np.eye(self.size)

    def monotonicity_matrix(self) -> np.ndarray:
        M = np.zeros((len(self.pairs), self.size))
        rows = np.arange(len(self.pairs))
        a, b = np.array(self.pairs).T
        M[rows, a] = 1.0
        M[rows, b] = -1.0
        return M

    def equality_constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        A = np.zeros((2, self.size))
        A[0, 0] = 1.0
        A[1, -1] = 1.0
        return A, np.array([0.0, 1.0])


@dataclass(frozen=True)
class FitResult:
    capacity: Capacity
    objective: float  # sum of squared prediction errors
    kkt_residual: float
    iterations: int
    active_constraints: int
    epsilon: float
    mode: str = "full"
    residuals: dict = field(default_factory=dict)

    def predict(self, samples: Sequence[Sample]) -> np.ndarray:
        return design_matrix(samples, self.capacity.ground) @ self.capacity.values()

    def rms(self, samples: Sequence[Sample]) -> float:
        e = np.array([s.e for s in samples])
        return float(np.sqrt(np.mean((self.predict(samples) - e) ** 2)))

    def to_dict(self) -> dict:
        out = self.capacity.to_dict()
        out["diagnostics"] = {
            "mode": self.mode,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "active_constraints": self.active_constraints,
            "epsilon": self.epsilon,
            "residuals": self.residuals,
        }
        return out


def make_samples(F, targets, ground: Optional[GroundSet] = None) -> list:
    """Samples from an ``(l, n)`` array of criteria vectors and ``l`` targets."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if F.shape[0] != targets.shape[0]:
        raise FitError(f"{F.shape[0]} criteria rows but {targets.shape[0]} targets")
    ground = ground or GroundSet.of_size(F.shape[1])
    return [Sample(ValuedFunction(ground, row), float(e)) for row, e in zip(F, targets)]


def read_samples_csv(path) -> list:
    """Samples CSV: columns ``f_1 .. f_n`` then ``target``."""
    df = pd.read_csv(path, float_precision="round_trip")
    if df.empty:
        raise FitError(f"{path}: no samples")
    if "target" not in df.columns:
        raise FitError(f"{path}: missing column 'target'")
    fcols = [c for c in df.columns if c != "target"]
    expected = [f"f_{i}" for i in range(1, len(fcols) + 1)]
    if fcols != expected:
        raise FitError(f"{path}: criteria columns must be {expected}, got {fcols}")
    return make_samples(df[fcols].to_numpy(dtype=float), df["target"].to_numpy(dtype=float))


def write_samples_csv(samples: Sequence[Sample], path) -> None:
    n = samples[0].f.ground.n
    df = pd.DataFrame([s.f.values for s in samples], columns=[f"f_{i}" for i in range(1, n + 1)])
    df["target"] = [s.e for s in samples]
    df.to_csv(path, index=False, float_format="%.17g")


def _check_samples(samples: Sequence[Sample], max_n: int = MAX_FIT_N) -> GroundSet:
    if not samples:
        raise FitError("at least one sample is required")
    ground = samples[0].f.ground
    for s in samples[1:]:
        if s.f.ground != ground:
            raise FitError("samples are defined on inconsistent ground sets")
    if ground.n > max_n:
        raise FitError(f"n={ground.n} exceeds the fitting limit of {max_n} criteria")
    return ground


def choquet_coefficients(f) -> np.ndarray:
    """Row ``c`` with ``choquet(f, nu) == c @ nu.values()`` for every capacity."""
    x = np.asarray(f, dtype=float)
    order = np.argsort(x, kind="stable")
    c = np.zeros(1 << x.shape[0])
    np.add.at(c, upper_set_masks(order), np.diff(x[order], prepend=0.0))
    return c


def design_matrix(samples: Sequence[Sample], ground: GroundSet) -> np.ndarray:
    return np.array([choquet_coefficients(s.f.values) for s in samples]).reshape(-1, 1 << ground.n)


def covering_pairs(n: int) -> Tuple[Tuple[int, int], ...]:
    return tuple((a, a | (1 << i)) for a in range(1 << n) for i in range(n) if not a >> i & 1)


def build_qp(samples: Sequence[Sample], epsilon: float = DEFAULT_EPSILON) -> QpProblem:
    ground = _check_samples(samples)
    C = design_matrix(samples, ground)
    e = np.array([s.e for s in samples], dtype=float)
    return QpProblem(
        ground=ground,
        D=C.T @ C,
        r=-C.T @ e,
        pairs=covering_pairs(ground.n),
        epsilon=epsilon,
        design=C,
        targets=e,
    )


def _start_point(name_or_values, n: int) -> np.ndarray:
    card = popcounts(n)
    if isinstance(name_or_values, str):
        if name_or_values == "uniform":
            return card / n
        if name_or_values == "min":
            return (card == n).astype(float)
        if name_or_values == "max":
            return (card > 0).astype(float)
        raise ValueError(f"unknown start {name_or_values!r}; expected uniform, min or max")
    return np.asarray(name_or_values, dtype=float)


def _sse(design: np.ndarray, targets: np.ndarray, values: np.ndarray) -> float:
    return float(np.sum((design @ values - targets) ** 2))


def solve_qp(problem: QpProblem, tol: float = DEFAULT_TOL,
             start: Union[str, Sequence[float]] = "uniform",
             max_iter: Optional[int] = None) -> FitResult:
    """Solve the full capacity QP with the active-set method.

    ``start`` is any feasible capacity table, or ``"uniform"``, ``"min"``
    (zero except on the full set) or ``"max"`` (one except on the empty
    set). The optimum does not depend on it.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = problem.ground.n
    A, b = problem.equality_constraints()
    G = problem.monotonicity_matrix()
    sol = qp.solve_qp(problem.hessian(), problem.r, A, b, G, np.zeros(G.shape[0]),
                      _start_point(start, n), tol=tol, max_iter=max_iter)
    capacity = Capacity.from_table(problem.ground, sol.x, normalized=True)
    return FitResult(
        capacity=capacity,
        objective=_sse(problem.design, problem.targets, sol.x),
        kkt_residual=sol.residual,
        iterations=sol.iterations,
        active_constraints=sol.n_active,
        epsilon=problem.epsilon,
        mode="full",
        residuals=sol.residuals,
    )


def fit_capacity(samples: Sequence[Sample], tol: float = DEFAULT_TOL,
                 epsilon: float = DEFAULT_EPSILON, start="uniform") -> FitResult:
    return solve_qp(build_qp(samples, epsilon), tol=tol, start=start)


def fit_symmetric(samples: Sequence[Sample], levels: Optional[Sequence[float]] = None,
                  tol: float = DEFAULT_TOL, epsilon: float = DEFAULT_EPSILON) -> FitResult:
    """Fit a capacity that depends only on cardinality.

    Decision variables are the ``n + 1`` levels ``mu(0) .. mu(n)`` with
    ``mu(0) = 0``, ``mu(n) = 1`` and the chain ``mu(k) <= mu(k+1)``.
    ``levels`` optionally supplies a feasible starting chain (default
    ``k / n``).
    """
    ground = _check_samples(samples, max_n=20)
    n = ground.n
    e = np.array([s.e for s in samples], dtype=float)
    # level coefficients: increment j (ascending) weighs mu(n - j)
    C = np.zeros((len(samples), n + 1))
    for i, s in enumerate(samples):
        xs = np.sort(s.f.values, kind="stable")
        C[i, n - np.arange(n)] = np.diff(xs, prepend=0.0)
    H = C.T @ C + epsilon * np.eye(n + 1)
    A = np.zeros((2, n + 1))
    A[0, 0] = A[1, n] = 1.0
    G = np.zeros((n, n + 1))
    G[np.arange(n), np.arange(n)] = 1.0
    G[np.arange(n), np.arange(1, n + 1)] = -1.0
    x0 = np.arange(n + 1) / n if levels is None else np.asarray(levels, dtype=float)
    sol = qp.solve_qp(H, -C.T @ e, A, np.array([0.0, 1.0]), G, np.zeros(n), x0, tol=tol)
    capacity = Capacity.from_table(ground, sol.x[popcounts(n)], normalized=True)
    return FitResult(
        capacity=capacity,
        objective=float(np.sum((C @ sol.x - e) ** 2)),
        kkt_residual=sol.residual,
        iterations=sol.iterations,
        active_constraints=sol.n_active,
        epsilon=epsilon,
        mode="symmetric",
        residuals=sol.residuals,
    )


def fit_k_additive(samples: Sequence[Sample], k: int, tol: float = DEFAULT_TOL,
                   epsilon: float = DEFAULT_EPSILON) -> FitResult:
    """Fit a k-additive capacity through its Möbius coefficients.

    Variables are ``m(B)`` for ``|B| <= k``; capacity values follow from
    ``value(A) = sum_{B subset of A} m(B)``. Monotonicity on a covering pair
    ``(A, A | {x})`` reads ``sum_{B subset of A} m(B | {x}) >= 0``.
    """
    ground = _check_samples(samples)
    n = ground.n
    if not 1 <= k <= n:
        raise FitError(f"k must satisfy 1 <= k <= {n}, got {k}")
    card = popcounts(n)
    support = np.flatnonzero(card <= k)  # includes the empty set
    masks = np.arange(1 << n)
    # zeta matrix restricted to the support: Z[A, j] = 1 iff support[j] is a subset of A
    Z = ((masks[:, None] & support[None, :]) == support[None, :]).astype(float)

    Cu = design_matrix(samples, ground)
    e = np.array([s.e for s in samples], dtype=float)
    Cm = Cu @ Z
    H = Cm.T @ Cm + epsilon * np.eye(len(support))

    pairs = covering_pairs(n)
    Zu = np.array([Z[a] - Z[b] for a, b in pairs])  # value(A) - value(B) <= 0
    A = np.vstack([(support == 0).astype(float), Z[-1]])
    x0 = np.where(card[support] == 1, 1.0 / n, 0.0)
    sol = qp.solve_qp(H, -Cm.T @ e, A, np.array([0.0, 1.0]), Zu, np.zeros(len(pairs)), x0, tol=tol)

    coeffs = np.zeros(1 << n)
    coeffs[support] = sol.x
    capacity = Capacity.from_mobius(ground, coeffs, normalized=True)
    return FitResult(
        capacity=capacity,
        objective=float(np.sum((Cm @ sol.x - e) ** 2)),
        kkt_residual=sol.residual,
        iterations=sol.iterations,
        active_constraints=sol.n_active,
        epsilon=epsilon,
        mode=f"k-additive(k={k})",
        residuals=sol.residuals,
    )


def higher_order_mobius(fit: FitResult, order: int = 1) -> float:
    """Largest Möbius magnitude over subsets with more than ``order`` elements."""
    m = mobius_transform(fit.capacity)
    big = popcounts(fit.capacity.n) > order
    return float(np.abs(m[big]).max(initial=0.0))


def check_fit(fit: FitResult, tol: float = 1e-8):
    return validate(fit.capacity, tol=tol)
