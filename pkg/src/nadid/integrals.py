"""
Choquet and Sugeno integrals of a finite real vector against a capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .measure import MAX_EXHAUSTIVE_N, Capacity, GroundSet, GroundSetTooLarge


@dataclass(frozen=True)
class ValuedFunction:
    """A function ``f: X -> R`` stored as one value per ground-set element."""

    ground: GroundSet
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.ground.n,):
            raise ValueError(f"expected {self.ground.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


FunctionLike = Union[ValuedFunction, np.ndarray, list, tuple]


def _as_values(f: FunctionLike, capacity: Capacity | None = None) -> np.ndarray:
    if isinstance(f, ValuedFunction):
        if capacity is not None and f.ground != capacity.ground:
            raise ValueError("function and capacity are defined on different ground sets")
        return f.values
    values = np.asarray(f, dtype=float)
    if values.ndim != 1:
        raise ValueError("function values must be a 1-d vector")
    if not np.all(np.isfinite(values)):
        raise ValueError("function values must be finite")
    if capacity is not None and values.shape[0] != capacity.n:
        raise ValueError(
            f"function has {values.shape[0]} values but capacity ground set has {capacity.n}"
        )
    return values


def upper_set_masks(order: np.ndarray) -> np.ndarray:
    """Masks of the upper sets ``A_(i) = {x_(i), ..., x_(n)}`` for an ascending order.

    ``order[i]`` is the element index holding the ``i``-th smallest value.
    """
    bits = np.left_shift(np.int64(1), order.astype(np.int64))
    # suffix OR == suffix sum for distinct bits
    return np.cumsum(bits[::-1])[::-1]


def choquet(f: FunctionLike, capacity: Capacity) -> float:
    """Discrete Choquet integral.

    Sorts ``f`` ascending (stable, ties by element index) and sums the
    increments ``f_(i) - f_(i-1)`` weighted by the capacity of the upper
    set ``A_(i)``, with ``f_(0) = 0``. Signed inputs are handled by the
    same formula, which gives the translative (asymmetric) integral.
    """
    x = _as_values(f, capacity)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    increments = np.diff(xs, prepend=0.0)
    masks = upper_set_masks(order)
    weights = np.array([capacity.value(int(m)) for m in masks])
    return float(np.dot(increments, weights))


def choquet_listing(f: FunctionLike, distortion: Callable[[float], float]) -> float:
    """Rank-weighted aggregation with weights taken from a scalar distortion.

    With ``x`` sorted ascending and ``w_i = g(i / n)``, returns
    ``x_1 w_1 + sum_{i >= 2} x_i (w_i - w_{i-1})``. This differs from
    :func:`choquet`: the ``i``-th smallest value receives the increment of
    ``g`` at ``i / n`` rather than ``(n - i + 1) / n``, and the result is
    not translation-covariant unless ``g(1) = 1``.
    """
    x = np.sort(_as_values(f), kind="stable")
    n = x.shape[0]
    w = np.array([float(distortion(i / n)) for i in range(1, n + 1)])
    return float(np.dot(x, np.diff(w, prepend=0.0)))


def sugeno(f: FunctionLike, capacity: Capacity) -> float:
    """Sugeno integral ``max_A min(min_{x in A} f(x), capacity(A))`` over non-empty ``A``.

    Evaluated by exhaustive enumeration of the ``2**n - 1`` non-empty
    subsets.
    """
    x = _as_values(f, capacity)
    n = x.shape[0]
    if n > MAX_EXHAUSTIVE_N:
        raise GroundSetTooLarge(f"Sugeno enumeration limited to n <= {MAX_EXHAUSTIVE_N}")
    set_min = np.empty(1 << n)
    set_min[0] = np.inf
    for i in range(n):
        step = 1 << i
        set_min[step : 2 * step] = np.minimum(set_min[:step], x[i])
    v = capacity.values()
    return float(np.max(np.minimum(set_min[1:], v[1:])))
