"""
Difference-in-differences estimators.

Cell-mean notation follows the 2x2 difference table::

                 treated   control
    post         y1        y2
    pre          y3        y4

Classical estimate: ``(y1 - y3) - (y2 - y4)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .integrals import choquet, choquet_listing
from .measure import Capacity, GroundSet, SigmoidDistortion, make_sigmoid_capacity
from .panel import EmptyCellError, PanelDataset, PanelError

METHODS = ("difference_table", "ols", "integral", "nadid_time", "nadid_listing")
NADID_MODES = ("time_integral", "listing")


class SingularDesignError(PanelError):
    pass


@dataclass(frozen=True)
class CellMeans:
    treat_post: float
    control_post: float
    treat_pre: float
    control_pre: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.treat_post, self.control_post, self.treat_pre, self.control_pre)


@dataclass(frozen=True)
class DidEstimate:
    method: str
    value: float
    cell_means: Optional[CellMeans] = None
    capacity_descriptor: Optional[dict] = None
    diagnostics: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {"method": self.method, "value": self.value}
        if self.cell_means is not None:
            out["cell_means"] = dict(zip(("y1", "y2", "y3", "y4"), self.cell_means.as_tuple()))
        if self.capacity_descriptor is not None:
            out["capacity"] = self.capacity_descriptor
        if self.diagnostics:
            out["diagnostics"] = list(self.diagnostics)
        return out


@dataclass(frozen=True)
class DeltaSeries:
    """Per-post-period changes relative to each group's pooled pre-period mean."""

    post_periods: Tuple[int, ...]
    delta_treat: np.ndarray
    delta_control: np.ndarray
    baseline_treat: float
    baseline_control: float
    counts: np.ndarray = field(repr=False)  # observations per post period, both groups

    @property
    def difference(self) -> np.ndarray:
        return self.delta_treat - self.delta_control


@dataclass(frozen=True)
class SigmoidSpec:
    """Capacity spec resolved against the data at estimation time."""

    lam: float = 5.0
    theta: float = 0.5
    anchor: str = "anchored"

    @property
    def distortion(self) -> SigmoidDistortion:
        return SigmoidDistortion(self.lam, self.theta)


CapacitySpec = Union[SigmoidSpec, Capacity]


def cell_means(panel: PanelDataset) -> CellMeans:
    """Means of the four treated x post cells; raises on an empty cell."""
    return CellMeans(
        panel.cell_mean(1, 1),
        panel.cell_mean(0, 1),
        panel.cell_mean(1, 0),
        panel.cell_mean(0, 0),
    )


def difference_table(panel: PanelDataset) -> DidEstimate:
    """Classical estimate from the 2x2 table of cell means.

    Both difference orders (across time first, across groups first) are
    computed and checked against each other.
    """
    m = cell_means(panel)
    y1, y2, y3, y4 = m.as_tuple()
    over_time = (y1 - y3) - (y2 - y4)
    over_groups = (y1 - y2) - (y3 - y4)
    scale = max(1.0, abs(y1), abs(y2), abs(y3), abs(y4))
    if not math.isclose(over_time, over_groups, rel_tol=0.0, abs_tol=1e-12 * scale):
        raise ArithmeticError(f"difference orders disagree: {over_time!r} vs {over_groups!r}")
    return DidEstimate(
        "difference_table",
        over_time,
        cell_means=m,
        diagnostics=(f"group-first order: {over_groups!r}",),
    )


def did_ols(panel: PanelDataset) -> Tuple[float, float, float, float]:
    """Least-squares fit of ``y = alpha + beta D + gamma T + delta D T``.

    Solves the 4x4 normal equations directly. Returns
    ``(alpha, beta, gamma, delta)``; ``delta`` is the DiD estimate.
    """
    d = panel.treated.astype(float)
    t = panel.post.astype(float)
    X = np.column_stack([np.ones_like(d), d, t, d * t])
    for treated in (0, 1):
        for post in (0, 1):
            if not panel.cell_mask(treated, post).any():
                raise SingularDesignError(
                    f"singular design: {EmptyCellError(treated, post).cell} cell is empty"
                )
    xtx = X.T @ X
    xty = X.T @ panel.outcome
    alpha, beta, gamma, delta = np.linalg.solve(xtx, xty)
    return float(alpha), float(beta), float(gamma), float(delta)


def delta_series(panel: PanelDataset) -> DeltaSeries:
    """Per-period treated and control changes over the post horizon.

    Each group's baseline is its pooled pre-period mean; ``delta_g(t)`` is
    the group's mean at post period ``t`` minus that baseline.
    """
    groups = {}
    for g, name in ((1, "treated"), (0, "control")):
        pre = panel.cell_mask(g, 0)
        post = panel.cell_mask(g, 1)
        if not pre.any():
            raise EmptyCellError(g, 0)
        if not post.any():
            raise EmptyCellError(g, 1)
        groups[g] = (pre, post)

    post_periods = np.unique(panel.period[panel.post == 1])
    deltas = {}
    counts = np.zeros(len(post_periods))
    for g, (pre, post) in groups.items():
        baseline = float(panel.outcome[pre].mean())
        series = np.empty(len(post_periods))
        for k, t in enumerate(post_periods):
            rows = post & (panel.period == t)
            if not rows.any():
                label = "treated" if g == 1 else "control"
                raise PanelError(f"no {label} observations in post period {t}")
            series[k] = panel.outcome[rows].mean() - baseline
            counts[k] += rows.sum()
        deltas[g] = (baseline, series)
    return DeltaSeries(
        tuple(int(t) for t in post_periods),
        deltas[1][1],
        deltas[0][1],
        deltas[1][0],
        deltas[0][0],
        counts,
    )


def count_weights(series: DeltaSeries) -> np.ndarray:
    """Post-period weights proportional to the number of observations."""
    return series.counts / series.counts.sum()


def did_integral(panel: PanelDataset, weights: Union[str, Sequence[float]] = "count") -> DidEstimate:
    """Additive time aggregation ``sum_t w_t (delta_treat(t) - delta_control(t))``.

    ``weights`` is a probability vector over the post periods, or
    ``"count"`` (proportional to observations per period) or ``"uniform"``.
    With count weights the result equals the difference-table estimate
    whenever each post period carries the same treated/control split,
    which includes every balanced panel.
    """
    series = delta_series(panel)
    k = len(series.post_periods)
    if isinstance(weights, str):
        if weights == "count":
            w = count_weights(series)
        elif weights == "uniform":
            w = np.full(k, 1.0 / k)
        else:
            raise ValueError(f"unknown weighting {weights!r}")
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (k,):
            raise ValueError(f"need {k} weights (one per post period), got {w.shape}")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
    value = float(np.dot(w, series.difference))
    return DidEstimate("integral", value, diagnostics=(f"post periods: {k}",))


def _time_capacity(spec: CapacitySpec, periods: Tuple[int, ...]) -> Capacity:
    ground = GroundSet(periods)
    if isinstance(spec, SigmoidSpec):
        return make_sigmoid_capacity(ground, spec.distortion, spec.anchor)
    if spec.n != ground.n:
        raise ValueError(
            f"capacity ground set has {spec.n} elements but the panel has {ground.n} post periods"
        )
    if tuple(spec.ground.labels) != periods:
        # positional match; labels are informational
        spec = Capacity(ground, spec.representation, spec.data, spec.distortion,
                        spec.anchor, spec.normalized)
    return spec


def _listing_distortion(spec: CapacitySpec):
    if isinstance(spec, SigmoidSpec):
        return spec.distortion.scalar(spec.anchor), {
            **spec.distortion.to_dict(),
            "anchor": spec.anchor,
        }
    if spec.representation == "distorted":
        return spec.distortion.scalar(spec.anchor), spec.descriptor()
    raise ValueError("listing mode needs a scalar distortion (sigmoid spec or distorted capacity)")


def nadid(panel: PanelDataset, capacity_spec: CapacitySpec = SigmoidSpec(),
          mode: str = "time_integral") -> DidEstimate:
    """Non-additive DiD estimate.

    ``time_integral``
        Choquet integral of ``delta_treat(t) - delta_control(t)`` over the
        post periods, against a capacity whose ground set is those periods.
    ``listing``
        Rank-weighted aggregation (:func:`~nadid.integrals.choquet_listing`)
        of the two pooled changes ``[treated post - pre, control post - pre]``
        with the capacity's scalar distortion.
    """
    if mode == "time_integral":
        series = delta_series(panel)
        capacity = _time_capacity(capacity_spec, series.post_periods)
        value = choquet(series.difference, capacity)
        desc = capacity.descriptor()
        desc["post_periods"] = list(series.post_periods)
        return DidEstimate("nadid_time", value, capacity_descriptor=desc,
                           diagnostics=("mode: time_integral",))
    if mode == "listing":
        g, desc = _listing_distortion(capacity_spec)
        m = cell_means(panel)
        diff_treat = m.treat_post - m.treat_pre
        diff_control = m.control_post - m.control_pre
        value = choquet_listing([diff_treat, diff_control], g)
        return DidEstimate(
            "nadid_listing",
            value,
            cell_means=m,
            capacity_descriptor=desc,
            diagnostics=("mode: listing", f"classical: {diff_treat - diff_control!r}"),
        )
    raise ValueError(f"unknown NA-DiD mode {mode!r}; expected one of {NADID_MODES}")


def estimate(panel: PanelDataset, method: str, capacity_spec: CapacitySpec = SigmoidSpec(),
             weights: Union[str, Sequence[float]] = "count") -> DidEstimate:
    """Dispatch on a method tag from :data:`METHODS`."""
    if method == "difference_table":
        return difference_table(panel)
    if method == "ols":
        alpha, beta, gamma, delta = did_ols(panel)
        return DidEstimate("ols", delta, diagnostics=(
            f"alpha={alpha!r}", f"beta={beta!r}", f"gamma={gamma!r}"))
    if method == "integral":
        return did_integral(panel, weights)
    if method == "nadid_time":
        return nadid(panel, capacity_spec, "time_integral")
    if method == "nadid_listing":
        return nadid(panel, capacity_spec, "listing")
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
