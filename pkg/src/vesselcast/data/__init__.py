from .types import SceneFrame, VesselSample, WaterwayConfig, DENSITY_LEVELS
from .generate import (
    WindowError,
    ProjectionError,
    split_window,
    project_geo_to_pixels,
    plan_vessels,
    generate_scenario,
    apply_dark_vessels,
)
from .io import DatasetFormatError, read_dataset, write_dataset

__all__ = [
    "SceneFrame",
    "VesselSample",
    "WaterwayConfig",
    "DENSITY_LEVELS",
    "WindowError",
    "ProjectionError",
    "split_window",
    "project_geo_to_pixels",
    "plan_vessels",
    "generate_scenario",
    "apply_dark_vessels",
    "DatasetFormatError",
    "read_dataset",
    "write_dataset",
]
