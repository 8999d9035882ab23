"""Improved equivariant estimation for order-restricted bivariate parameters.

Estimate the smaller or larger of two ordered location/scale parameters
with estimators that provably dominate the usual equivariant choices:
solve the conditional first-order equation for the per-ancillary optimum,
take its envelope over all admissible gaps, and clip any equivariant
estimator's shift or multiplier into that envelope.
"""

from .analysis import AnalysisReport, PairedDataset, analyze_paired, load_paired_csv
from .errors import OrderestError
from .estimators import (
    EquivariantEstimator,
    catalog_estimator,
    clip_improve,
    clip_improve_partial,
    custom_estimator,
    estimate_difference_probability,
)
from .families import (
    LARGER,
    MODEL_NAMES,
    SMALLER,
    BivariateModel,
    Theta,
    closed_form_bounds,
    closed_form_psi,
    conditional_density,
    make_model,
)
from .losses import (
    LOCATION,
    SCALE,
    ConditionReport,
    LossSpec,
    check_bowl_conditions,
    custom_loss,
    linex_loss,
    make_loss,
    squared_error_loss,
)
from .presets import PRESETS, run_preset
from .risksim import (
    DominanceReport,
    RiskCurve,
    RiskEstimate,
    dominance_report,
    read_risk_csv,
    risk_curve,
    simulate_risk,
    write_risk_csv,
    write_risk_svg,
)
from .solver import (
    PsiBounds,
    SolverOptions,
    check_lr_monotonicity,
    compute_bounds,
    make_psi_bounds,
    predicted_psi_direction,
    solve_equivariant_constant,
    solve_psi_lambda,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "BivariateModel",
    "ConditionReport",
    "DominanceReport",
    "EquivariantEstimator",
    "LARGER",
    "LOCATION",
    "LossSpec",
    "MODEL_NAMES",
    "OrderestError",
    "PRESETS",
    "PairedDataset",
    "PsiBounds",
    "RiskCurve",
    "RiskEstimate",
    "SCALE",
    "SMALLER",
    "SolverOptions",
    "Theta",
    "analyze_paired",
    "catalog_estimator",
    "check_bowl_conditions",
    "check_lr_monotonicity",
    "clip_improve",
    "clip_improve_partial",
    "closed_form_bounds",
    "closed_form_psi",
    "compute_bounds",
    "conditional_density",
    "custom_estimator",
    "custom_loss",
    "dominance_report",
    "estimate_difference_probability",
    "linex_loss",
    "load_paired_csv",
    "make_loss",
    "make_model",
    "make_psi_bounds",
    "predicted_psi_direction",
    "read_risk_csv",
    "risk_curve",
    "run_preset",
    "simulate_risk",
    "solve_equivariant_constant",
    "solve_psi_lambda",
    "squared_error_loss",
    "write_risk_csv",
    "write_risk_svg",
]
