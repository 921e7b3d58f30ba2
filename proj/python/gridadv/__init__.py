"""Python access to the gridadv C++ core."""

import os as _os
import pathlib as _pathlib

_data = _pathlib.Path(__file__).with_name("data")
if _data.is_dir():
    _os.environ.setdefault("GRIDADV_DATA_DIR", str(_data))

from ._core import (
    AttackRegion,
    Grid,
    HarnessError,
    Model,
    RegionError,
    default_plan,
    load_case,
    load_model,
    load_region,
    localized_region,
    measurement_function,
    measurement_jacobian,
    nominal_weights,
    normalized_residuals,
    run_attack,
    run_pipeline,
    solve_powerflow,
    solve_sdp,
    wls_estimate,
)

__all__ = [
    "AttackRegion",
    "Grid",
    "HarnessError",
    "Model",
    "RegionError",
    "default_plan",
    "load_case",
    "load_model",
    "load_region",
    "localized_region",
    "measurement_function",
    "measurement_jacobian",
    "nominal_weights",
    "normalized_residuals",
    "run_attack",
    "run_pipeline",
    "solve_powerflow",
    "solve_sdp",
    "wls_estimate",
]
