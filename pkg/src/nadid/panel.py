"""
Long-format panel data: one row per (unit, period) observation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

#: On-disk column names, in file order.
CSV_COLUMNS = ("Hospital", "Period", "Treated", "PostTreatment", "InfectionRate")

DEFAULT_COLUMN_MAP = {
    "unit": "Hospital",
    "period": "Period",
    "treated": "Treated",
    "post": "PostTreatment",
    "outcome": "InfectionRate",
}

CELL_NAMES = {
    (1, 1): "treated x post",
    (0, 1): "control x post",
    (1, 0): "treated x pre",
    (0, 0): "control x pre",
}


class PanelError(ValueError):
    """Malformed or insufficient panel data."""


class MissingColumnError(PanelError):
    def __init__(self, column: str):
        super().__init__(f"missing column {column!r}")
        self.column = column


class EmptyCellError(PanelError):
    def __init__(self, treated: int, post: int):
        self.cell = CELL_NAMES[(treated, post)]
        super().__init__(f"empty cell: no observations for {self.cell}")


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Validated panel with treatment and post indicators.

    Arrays are aligned row-wise. ``treated`` is constant within unit and
    ``post == (period >= treatment_start)`` for every row.
    """

    unit: np.ndarray
    period: np.ndarray
    treated: np.ndarray
    post: np.ndarray
    outcome: np.ndarray
    treatment_start: int

    def __post_init__(self):
        n = len(self.outcome)
        for name in ("unit", "period", "treated", "post"):
            if len(getattr(self, name)) != n:
                raise PanelError(f"column {name!r} has {len(getattr(self, name))} rows, expected {n}")
        for name in ("unit", "period", "treated", "post", "outcome"):
            arr = np.asarray(getattr(self, name))
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n == 0:
            raise PanelError("panel has no rows")
        if not np.all(np.isfinite(self.outcome.astype(float))):
            raise PanelError("outcome contains non-finite values")
        if not np.isin(self.treated, (0, 1)).all() or not np.isin(self.post, (0, 1)).all():
            raise PanelError("treated and post indicators must be 0/1")
        if (self.period < 1).any():
            raise PanelError("periods must be integers >= 1")
        expected_post = (self.period >= self.treatment_start).astype(int)
        if not np.array_equal(expected_post, self.post):
            raise PanelError(
                f"post indicator disagrees with treatment start {self.treatment_start}"
            )
        per_unit = pd.Series(self.treated).groupby(pd.Series(self.unit)).nunique()
        if (per_unit > 1).any():
            raise PanelError(f"treated flag varies within unit {per_unit[per_unit > 1].index[0]!r}")

    @classmethod
    def from_arrays(cls, unit, period, treated, outcome, treatment_start: int, post=None) -> "PanelDataset":
        period = np.asarray(period, dtype=np.int64)
        if post is None:
            post = (period >= treatment_start).astype(np.int64)
        return cls(
            np.asarray(unit),
            period,
            np.asarray(treated, dtype=np.int64),
            np.asarray(post, dtype=np.int64),
            np.asarray(outcome, dtype=float),
            int(treatment_start),
        )

    @classmethod
    def from_frame(cls, df: pd.DataFrame, columns: Optional[Dict[str, str]] = None,
                   treatment_start: Optional[int] = None) -> "PanelDataset":
        """Build from a DataFrame, remapping logical fields to column names.

        If the post column is absent, ``treatment_start`` must be given and
        the indicator is derived; otherwise the treatment start is taken as
        the first period flagged post.
        """
        cmap = dict(DEFAULT_COLUMN_MAP)
        cmap.update(columns or {})
        for field in ("unit", "period", "treated", "outcome"):
            if cmap[field] not in df.columns:
                raise MissingColumnError(cmap[field])
        period = df[cmap["period"]].to_numpy()
        if not np.issubdtype(period.dtype, np.integer):
            raise PanelError(f"column {cmap['period']!r} must hold integers")
        if cmap["post"] in df.columns:
            post = df[cmap["post"]].to_numpy()
            if treatment_start is None:
                if not (post == 1).any():
                    raise EmptyCellError(1, 1)
                treatment_start = int(period[post == 1].min())
        elif treatment_start is None:
            raise MissingColumnError(cmap["post"])
        else:
            post = None
        return cls.from_arrays(
            df[cmap["unit"]].to_numpy(),
            period,
            df[cmap["treated"]].to_numpy(),
            df[cmap["outcome"]].to_numpy(dtype=float),
            treatment_start,
            post=post,
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "Hospital": self.unit,
                "Period": self.period,
                "Treated": self.treated,
                "PostTreatment": self.post,
                "InfectionRate": self.outcome,
            },
            columns=list(CSV_COLUMNS),
        )

    @property
    def n_rows(self) -> int:
        return len(self.outcome)

    @property
    def n_units(self) -> int:
        return len(np.unique(self.unit))

    @property
    def n_periods(self) -> int:
        return len(np.unique(self.period))

    def cell_mask(self, treated: int, post: int) -> np.ndarray:
        return (self.treated == treated) & (self.post == post)

    def cell_mean(self, treated: int, post: int) -> float:
        mask = self.cell_mask(treated, post)
        if not mask.any():
            raise EmptyCellError(treated, post)
        return float(self.outcome[mask].mean())

    def with_outcome(self, outcome) -> "PanelDataset":
        return PanelDataset(self.unit, self.period, self.treated, self.post,
                            np.asarray(outcome, dtype=float), self.treatment_start)


def read_panel_csv(path: Union[str, Path], columns: Optional[Dict[str, str]] = None,
                   treatment_start: Optional[int] = None) -> PanelDataset:
    df = pd.read_csv(path, float_precision="round_trip")
    if df.empty:
        raise PanelError(f"{path}: no data rows")
    return PanelDataset.from_frame(df, columns, treatment_start)


def write_panel_csv(panel: PanelDataset, path: Union[str, Path]) -> None:
    panel.to_frame().to_csv(path, index=False, float_format="%.17g")
