"""
Synthetic hospital-hygiene panel with a decaying treatment effect.

Outcome for unit ``i`` at period ``t``::

    y_it = max(floor, alpha_i + amp * sin(freq * t) + eps_it - D_i * tau(t))

with ``alpha_i ~ U(base_low, base_high)``, ``eps_it ~ N(0, noise_sd)`` and
``tau(t) = scale * exp(-decay * |t - (start + peak_offset)|)`` from the
treatment start onwards.

Random numbers come from ``numpy.random.default_rng(seed)`` (PCG64), drawn
in a fixed order: one uniform per unit for treatment assignment, one
uniform per unit for the baseline, then one normal per row in
unit-major, period-minor order. Equal configs give bit-identical panels.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from .panel import PanelDataset


@dataclass(frozen=True)
class SimConfig:
    num_units: int = 50
    num_periods: int = 30
    treatment_start: int = 12
    treated_fraction: float = 0.7
    seed: int = 42
    noise_sd: float = 0.02
    base_low: float = 0.1
    base_high: float = 0.3
    season_amp: float = 0.05
    season_freq: float = 0.5
    effect_peak_offset: int = 3
    effect_scale: float = 0.4
    effect_decay: float = 0.3
    floor: float = 0.02

    def __post_init__(self):
        if self.num_units < 1:
            raise ValueError("num_units must be positive")
        if self.num_periods < 1:
            raise ValueError("num_periods must be positive")
        if not 1 <= self.treatment_start <= self.num_periods:
            raise ValueError(
                f"treatment_start must lie in [1, {self.num_periods}], got {self.treatment_start}"
            )
        if not 0.0 <= self.treated_fraction <= 1.0:
            raise ValueError("treated_fraction must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.base_low > self.base_high:
            raise ValueError("base_low must not exceed base_high")
        if not self.floor < self.base_low:
            raise ValueError("floor must be below base_low")

    def to_dict(self) -> dict:
        return asdict(self)


def treatment_effect(t: int, config: SimConfig) -> float:
    """Effect size at period ``t``; zero before the treatment start."""
    if t < config.treatment_start:
        return 0.0
    peak = config.treatment_start + config.effect_peak_offset
    return config.effect_scale * math.exp(-config.effect_decay * abs(t - peak))


def generate_panel(config: SimConfig) -> PanelDataset:
    rng = np.random.default_rng(config.seed)
    n, T = config.num_units, config.num_periods

    treated_units = (rng.random(n) < config.treated_fraction).astype(np.int64)
    baseline = rng.uniform(config.base_low, config.base_high, n)
    noise = rng.normal(0.0, config.noise_sd, n * T).reshape(n, T)

    periods = np.arange(1, T + 1)
    season = config.season_amp * np.sin(config.season_freq * periods)
    tau = np.array([treatment_effect(int(t), config) for t in periods])

    y = baseline[:, None] + season[None, :] + noise - treated_units[:, None] * tau[None, :]
    y = np.maximum(config.floor, y)

    return PanelDataset.from_arrays(
        unit=np.repeat(np.arange(1, n + 1), T),
        period=np.tile(periods, n),
        treated=np.repeat(treated_units, T),
        outcome=y.ravel(),
        treatment_start=config.treatment_start,
    )


def trend_table(panel: PanelDataset) -> pd.DataFrame:
    """Mean outcome per (period, treated group), columns ``Period,Treated,MeanOutcome``."""
    df = pd.DataFrame({"Period": panel.period, "Treated": panel.treated, "MeanOutcome": panel.outcome})
    out = df.groupby(["Period", "Treated"], as_index=False)["MeanOutcome"].mean()
    return out.sort_values(["Period", "Treated"]).reset_index(drop=True)
