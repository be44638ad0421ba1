"""
Capacities (non-additive measures) on finite ground sets.

Subsets are addressed by bitmask: bit ``i`` of the mask is set when the
``i``-th label of the ground set belongs to the subset. A capacity on a
ground set of size ``n`` is therefore a vector of ``2**n`` values indexed
by mask, with ``values[0]`` the empty set and ``values[2**n - 1]`` the
full set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Optional, Sequence, Tuple

import numpy as np

MAX_EXHAUSTIVE_N = 20

REPRESENTATIONS = ("table", "mobius", "distorted")
ANCHORS = ("raw", "anchored")


class GroundSetTooLarge(ValueError):
    """Raised when an exhaustive subset operation is requested for n > 20."""


def popcounts(n: int) -> np.ndarray:
    """Cardinality of every subset mask in ``[0, 2**n)``."""
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        step = 1 << i
        counts[step : 2 * step] = counts[:step] + 1
    return counts


def _require_exhaustive(n: int) -> None:
    if n > MAX_EXHAUSTIVE_N:
        raise GroundSetTooLarge(
            f"ground set of size {n} exceeds the exhaustive limit of {MAX_EXHAUSTIVE_N}"
        )


@dataclass(frozen=True)
class GroundSet:
    """Finite, labelled ground set ``X = {x_1, ..., x_n}``."""

    labels: Tuple[Hashable, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 1:
            raise ValueError("ground set must contain at least one element")
        if len(set(labels)) != len(labels):
            raise ValueError("ground set labels must be unique")

    @classmethod
    def of_size(cls, n: int) -> "GroundSet":
        """Ground set labelled ``1..n``."""
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def mask(self, subset: Iterable[Hashable]) -> int:
        """Bitmask of a subset given by labels."""
        index = {lab: i for i, lab in enumerate(self.labels)}
        m = 0
        for lab in subset:
            try:
                m |= 1 << index[lab]
            except KeyError:
                raise KeyError(f"label {lab!r} not in ground set") from None
        return m

    def subset(self, mask: int) -> Tuple[Hashable, ...]:
        """Labels belonging to ``mask``, in ground-set order."""
        return tuple(lab for i, lab in enumerate(self.labels) if mask >> i & 1)


@dataclass(frozen=True)
class SigmoidDistortion:
    """Logistic distortion ``g(m) = 1 / (1 + exp(-lam * (m - theta)))``.

    ``lam`` sets the steepness of the transition and ``theta`` its location
    on the unit interval.
    """

    lam: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")

    def __call__(self, m):
        return 1.0 / (1.0 + np.exp(-self.lam * (np.asarray(m, dtype=float) - self.theta)))

    def anchored(self, m):
        """Affine rescaling of ``g`` so that ``0 -> 0`` and ``1 -> 1``."""
        g0 = float(self(0.0))
        g1 = float(self(1.0))
        return (self(m) - g0) / (g1 - g0)

    def scalar(self, anchor: str = "raw"):
        """Scalar function on [0, 1] for the chosen anchoring mode."""
        if anchor == "raw":
            return lambda x: float(self(x))
        if anchor == "anchored":
            return lambda x: float(self.anchored(x))
        raise ValueError(f"unknown anchor mode {anchor!r}; expected one of {ANCHORS}")

    def to_dict(self) -> dict:
        return {"kind": "sigmoid", "lambda": self.lam, "theta": self.theta}


@dataclass(frozen=True)
class ValidityReport:
    grounded: bool
    normalized: bool
    monotone: bool
    # Covering pair (A, B) as bitmasks, B = A | {x}, with value(A) > value(B).
    first_violation: Optional[Tuple[int, int]] = None

    @property
    def is_capacity(self) -> bool:
        return self.grounded and self.normalized and self.monotone


@dataclass(frozen=True, eq=False)
class Capacity:
    """Set function on a finite ground set.

    Use the constructors :meth:`from_table`, :meth:`from_mobius`,
    :func:`make_sigmoid_capacity` or :func:`make_uniform_capacity` rather
    than calling the class directly.

    Attributes
    ----------
    ground : GroundSet
    representation : str
        ``"table"``, ``"mobius"`` or ``"distorted"``.
    data : numpy.ndarray or None
        Values (table) or Möbius coefficients (mobius) indexed by mask.
    distortion : SigmoidDistortion or None
        Only for the distorted representation, whose base measure is the
        counting fraction ``|A| / n``.
    anchor : str or None
        ``"raw"`` or ``"anchored"`` for distorted capacities.
    normalized : bool
        Declared flag: value(empty) = 0 and value(X) = 1 hold by construction.
    """

    ground: GroundSet
    representation: str
    data: Optional[np.ndarray] = None
    distortion: Optional[SigmoidDistortion] = None
    anchor: Optional[str] = None
    normalized: bool = False
    _table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.representation == "distorted":
            if self.distortion is None or self.anchor not in ANCHORS:
                raise ValueError("distorted capacity needs a distortion and an anchor mode")
        else:
            data = np.array(self.data, dtype=float)
            data.setflags(write=False)
            if data.shape != (1 << self.ground.n,):
                raise ValueError(
                    f"expected {1 << self.ground.n} subset values, got shape {data.shape}"
                )
            if not np.all(np.isfinite(data)):
                raise ValueError("capacity values must be finite")
            object.__setattr__(self, "data", data)

    # construction ---------------------------------------------------------

    @classmethod
    def from_table(cls, ground: GroundSet, values, normalized: Optional[bool] = None) -> "Capacity":
        values = np.asarray(values, dtype=float)
        if normalized is None:
            normalized = bool(values.size and values[0] == 0.0 and values[-1] == 1.0)
        return cls(ground, "table", data=values, normalized=normalized)

    @classmethod
    def from_mobius(cls, ground: GroundSet, coefficients, normalized: Optional[bool] = None) -> "Capacity":
        coefficients = np.asarray(coefficients, dtype=float)
        if normalized is None:
            normalized = bool(coefficients[0] == 0.0 and abs(coefficients.sum() - 1.0) <= 1e-12)
        return cls(ground, "mobius", data=coefficients, normalized=normalized)

    @classmethod
    def from_mapping(cls, ground: GroundSet, mapping: dict, normalized: Optional[bool] = None) -> "Capacity":
        """Table capacity from ``{subset-of-labels: value}``; missing subsets raise."""
        values = np.full(1 << ground.n, np.nan)
        for subset, v in mapping.items():
            values[ground.mask(subset)] = v
        if np.isnan(values).any():
            missing = [ground.subset(int(m)) for m in np.flatnonzero(np.isnan(values))]
            raise ValueError(f"capacity table misses subsets {missing[:5]}")
        return cls.from_table(ground, values, normalized)

    # access ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.ground.n

    def value(self, mask: int) -> float:
        """Capacity of the subset encoded by ``mask``."""
        if not 0 <= mask <= self.ground.full_mask:
            raise IndexError(f"mask {mask} out of range for n={self.n}")
        if self.representation == "table":
            return float(self.data[mask])
        if self.representation == "distorted":
            m = bin(mask).count("1") / self.n
            return self._distort(m)
        return float(self.values()[mask])

    def value_of(self, subset: Iterable[Hashable]) -> float:
        return self.value(self.ground.mask(subset))

    def _distort(self, m):
        if self.anchor == "raw":
            return float(self.distortion(m))
        return float(self.distortion.anchored(m))

    def values(self) -> np.ndarray:
        """Materialised table of all ``2**n`` values (read-only)."""
        if self._table is not None:
            return self._table
        if self.representation == "table":
            table = self.data
        else:
            _require_exhaustive(self.n)
            if self.representation == "mobius":
                table = zeta_transform(self.data)
            else:
                frac = popcounts(self.n) / self.n
                g = self.distortion(frac) if self.anchor == "raw" else self.distortion.anchored(frac)
                table = np.asarray(g, dtype=float)
            table.setflags(write=False)
        object.__setattr__(self, "_table", table)
        return table

    def descriptor(self) -> dict:
        """Short provenance record used in estimator reports."""
        out: dict[str, Any] = {
            "representation": self.representation,
            "n": self.n,
            "normalized": self.normalized,
        }
        if self.representation == "distorted":
            out.update(self.distortion.to_dict())
            out["anchor"] = self.anchor
        return out

    # serialisation --------------------------------------------------------

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "n": self.n,
            "labels": list(self.ground.labels),
            "representation": self.representation,
        }
        if self.representation == "table":
            out["values"] = {str(m): float(v) for m, v in enumerate(self.data)}
        elif self.representation == "mobius":
            out["mobius"] = {str(m): float(v) for m, v in enumerate(self.data)}
        else:
            params = self.distortion.to_dict()
            params["anchor"] = self.anchor
            out["params"] = params
        out["normalized"] = self.normalized
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, obj: dict) -> "Capacity":
        n = int(obj["n"])
        labels = obj.get("labels") or list(range(1, n + 1))
        ground = GroundSet(tuple(labels))
        if ground.n != n:
            raise ValueError(f"n={n} disagrees with {ground.n} labels")
        rep = obj["representation"]
        normalized = obj.get("normalized")
        if rep in ("table", "mobius"):
            key = "values" if rep == "table" else "mobius"
            arr = np.full(1 << n, np.nan)
            for k, v in obj[key].items():
                arr[int(k)] = float(v)
            if np.isnan(arr).any():
                raise ValueError(f"{key} block must list all {1 << n} subset masks")
            if rep == "table":
                return cls.from_table(ground, arr, normalized)
            return cls.from_mobius(ground, arr, normalized)
        if rep == "distorted":
            params = obj["params"]
            if params.get("kind", "sigmoid") != "sigmoid":
                raise ValueError(f"unsupported distortion kind {params.get('kind')!r}")
            return make_sigmoid_capacity(
                ground,
                SigmoidDistortion(float(params["lambda"]), float(params["theta"])),
                params.get("anchor", "raw"),
            )
        raise ValueError(f"unknown representation {rep!r}")

    @classmethod
    def from_json(cls, text: str) -> "Capacity":
        return cls.from_dict(json.loads(text))


# constructors -------------------------------------------------------------


def make_sigmoid_capacity(ground: GroundSet, params: SigmoidDistortion, anchor: str = "anchored") -> Capacity:
    """Distorted capacity ``g(|A| / n)`` with a logistic distortion.

    In ``raw`` mode the logistic values are used verbatim, so the empty set
    receives ``g(0) > 0`` and the full set ``g(1) < 1``. In ``anchored``
    mode the values are rescaled to a standardized capacity.
    """
    if anchor not in ANCHORS:
        raise ValueError(f"unknown anchor mode {anchor!r}; expected one of {ANCHORS}")
    return Capacity(
        ground,
        "distorted",
        distortion=params,
        anchor=anchor,
        normalized=(anchor == "anchored"),
    )


def make_uniform_capacity(ground: GroundSet) -> Capacity:
    """Additive capacity ``|A| / n``."""
    _require_exhaustive(ground.n)
    return Capacity.from_table(ground, popcounts(ground.n) / ground.n, normalized=True)


def symmetric_capacity(ground: GroundSet, levels: Sequence[float]) -> Capacity:
    """Capacity whose value depends only on cardinality: ``value(A) = levels[|A|]``."""
    levels = np.asarray(levels, dtype=float)
    if levels.shape != (ground.n + 1,):
        raise ValueError(f"need {ground.n + 1} levels, got {levels.shape}")
    _require_exhaustive(ground.n)
    return Capacity.from_table(ground, levels[popcounts(ground.n)])


def additive_capacity(ground: GroundSet, weights: Sequence[float]) -> Capacity:
    """Additive capacity with singleton masses ``weights``."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (ground.n,):
        raise ValueError(f"need {ground.n} weights, got {weights.shape}")
    coeffs = np.zeros(1 << ground.n)
    coeffs[1 << np.arange(ground.n)] = weights
    return Capacity.from_table(ground, zeta_transform(coeffs))


# analysis -----------------------------------------------------------------


def validate(capacity: Capacity, tol: float = 0.0) -> ValidityReport:
    """Check groundedness, normalization and monotonicity exhaustively.

    Monotonicity is checked on every covering pair ``(A, A | {x})``, which
    implies it for all nested pairs. ``tol`` is an absolute slack applied
    to each check.
    """
    n = capacity.n
    _require_exhaustive(n)
    v = capacity.values()
    grounded = abs(v[0]) <= tol
    normalized = abs(v[-1] - 1.0) <= tol
    masks = np.arange(1 << n)
    first: Optional[Tuple[int, int]] = None
    bad_a = []
    for i in range(n):
        a = masks[(masks >> i & 1) == 0]
        drops = v[a] - v[a | (1 << i)] > tol
        if drops.any():
            bad_a.append((int(a[np.argmax(drops)]), i))
    if bad_a:
        # first violation in (mask, element) lexicographic order
        a, i = min(bad_a)
        first = (a, a | (1 << i))
    return ValidityReport(bool(grounded), bool(normalized), first is None, first)


def zeta_transform(coefficients) -> np.ndarray:
    """``value(A) = sum_{B subset of A} m(B)``, the Möbius reconstruction."""
    out = np.array(coefficients, dtype=float)
    size = out.shape[0]
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValueError("length must be a power of two")
    for i in range(n):
        step = 1 << i
        view = out.reshape(-1, 2 * step)
        view[:, step:] += view[:, :step]
    return out


def mobius_transform(capacity: Capacity) -> np.ndarray:
    """Möbius coefficients ``m`` with ``value(A) = sum_{B subset of A} m(B)``.

    Computed by the fast subset-difference (inverse zeta) recursion in
    ``O(n 2**n)``.
    """
    if capacity.representation == "mobius":
        return np.array(capacity.data)
    _require_exhaustive(capacity.n)
    out = np.array(capacity.values(), dtype=float)
    for i in range(capacity.n):
        step = 1 << i
        view = out.reshape(-1, 2 * step)
        view[:, step:] -= view[:, :step]
    return out


def shapley_values(capacity: Capacity) -> np.ndarray:
    r"""Shapley importance index of each ground-set element.

    .. math::

        \phi_j = \sum_{A \subseteq X \setminus \{j\}}
            \frac{|A|! (n - |A| - 1)!}{n!} (\nu(A \cup \{j\}) - \nu(A))
    """
    n = capacity.n
    _require_exhaustive(n)
    v = capacity.values()
    card = popcounts(n)
    weight = np.array(
        [math.factorial(k) * math.factorial(n - k - 1) / math.factorial(n) for k in range(n)]
    )
    masks = np.arange(1 << n)
    phi = np.empty(n)
    for j in range(n):
        a = masks[(masks >> j & 1) == 0]
        phi[j] = np.sum(weight[card[a]] * (v[a | (1 << j)] - v[a]))
    return phi


def k_additive_truncate(capacity: Capacity, k: int) -> Tuple[Capacity, ValidityReport]:
    """Drop Möbius coefficients of subsets larger than ``k``.

    Returns the truncated capacity (Möbius representation) together with
    its validity report, since truncation can break monotonicity.
    """
    n = capacity.n
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    coeffs = mobius_transform(capacity)
    coeffs[popcounts(n) > k] = 0.0
    truncated = Capacity.from_mobius(capacity.ground, coeffs)
    report = validate(truncated, tol=1e-12)
    truncated = Capacity(
        truncated.ground,
        "mobius",
        data=truncated.data,
        normalized=report.grounded and report.normalized,
    )
    return truncated, report
