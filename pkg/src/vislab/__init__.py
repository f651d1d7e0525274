"""Visibility in random obstacle fields.

Exact visibility laws, asymptotic rates and Monte Carlo verification for
three obstacle processes: Poisson balls, Poisson line cylinders, and the
Brownian sausage cloud.

The submodules split by process (`boolean`, `cylinders`,
`interlacements`) with the shared limit-law experiment in `limitlaw`;
this namespace re-exports the pieces most scripts need.
"""

from .boolean import BooleanParams, RadiusLaw, lambda_bm
from .cylinders import CylinderParams, lambda_pc
from .interlacements import (
    CapacityEstimate,
    InterlacementParams,
    TargetShape,
    WosConfig,
    capacity_asymptotic,
    conditional_survival_mc,
    estimate_capacity,
    lambda_bi,
)
from .limitlaw import (
    ExperimentConfig,
    ExperimentReport,
    ModelKind,
    exact_survival,
    ks_statistic,
    limit_rate,
    limit_survival,
    run_experiment,
    simulate_q_samples,
    visibility_window,
)
from .mathcore import RngStream, green_constant, unit_ball_volume
from .simharness import read_report_json, write_report_json, write_samples_csv

__version__ = "0.1.0"

__all__ = [
    "BooleanParams",
    "CapacityEstimate",
    "CylinderParams",
    "ExperimentConfig",
    "ExperimentReport",
    "InterlacementParams",
    "ModelKind",
    "RadiusLaw",
    "RngStream",
    "TargetShape",
    "WosConfig",
    "capacity_asymptotic",
    "conditional_survival_mc",
    "estimate_capacity",
    "exact_survival",
    "green_constant",
    "ks_statistic",
    "lambda_bi",
    "lambda_bm",
    "lambda_pc",
    "limit_rate",
    "limit_survival",
    "read_report_json",
    "run_experiment",
    "simulate_q_samples",
    "unit_ball_volume",
    "visibility_window",
    "write_report_json",
    "write_samples_csv",
    "__version__",
]