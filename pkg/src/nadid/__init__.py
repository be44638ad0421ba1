"""Non-additive difference-in-differences toolkit."""

from .did import (
    DeltaSeries,
    DidEstimate,
    SigmoidSpec,
    delta_series,
    did_integral,
    did_ols,
    difference_table,
    estimate,
    nadid,
)
from .integrals import ValuedFunction, choquet, choquet_listing, sugeno
from .measure import (
    Capacity,
    GroundSet,
    SigmoidDistortion,
    ValidityReport,
    k_additive_truncate,
    make_sigmoid_capacity,
    make_uniform_capacity,
    mobius_transform,
    shapley_values,
    validate,
)
from .panel import PanelDataset, read_panel_csv, write_panel_csv
from .simulate import SimConfig, generate_panel, treatment_effect, trend_table

__version__ = "0.1.0"
