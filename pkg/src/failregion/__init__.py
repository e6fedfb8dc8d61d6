"""Failure-region identification for numeric input domains.

Given one failure-causing input and a pass/fail oracle, the search
strategies here harvest additional failure-causing inputs hugging the
boundary of the failure region; the measurement layer scores the convex
hull of the harvest against a ground-truth region, and the harness runs
seeded experiment sweeps over region shape, size, compactness, and
rotation.
"""

from .errors import ConfigError, FailRegionError, InfeasibleRegionError, \
    InvalidDimensionError, NoFailureFoundError, OracleUnavailableError
from .geometry import InputDomain, axis_orientations, cosine_distance, \
    mirror_to_orthants, orthant_diagonal_orientations, rotate_in_plane, unit_domain
from .oracles import ExternalProgramOracle, OracleStats, RegionSpec, \
    SimulatedRegionOracle, derive_extents, place_region, unit_ball_volume
from .search import BoundaryHarvest, SearchConfig, find_first_failure, \
    next_dsb_orientation, run_dsb, run_fsb, run_strategy, search_boundary
from .measure import RegionMeasure, convex_hull_2d, hull_volume, \
    inequality_report, measure_run, point_in_hull, points_in_hull, polygon_area
from .harness import CSV_HEADER, ExperimentSetting, RunRecord, derive_run_seed, \
    parse_matrix, expand_settings, render_svg, run_setting, summarize_csv, sweep

__version__ = "0.1.0"

__all__ = [
    "BoundaryHarvest", "CSV_HEADER", "ConfigError", "ExperimentSetting",
    "ExternalProgramOracle", "FailRegionError", "InfeasibleRegionError",
    "InputDomain", "InvalidDimensionError", "NoFailureFoundError",
    "OracleStats", "OracleUnavailableError", "RegionMeasure", "RegionSpec",
    "RunRecord", "SearchConfig", "SimulatedRegionOracle", "axis_orientations",
    "convex_hull_2d", "cosine_distance", "derive_extents", "derive_run_seed",
    "expand_settings", "find_first_failure", "hull_volume",
    "inequality_report", "measure_run", "mirror_to_orthants",
    "next_dsb_orientation", "orthant_diagonal_orientations", "parse_matrix",
    "place_region", "point_in_hull", "points_in_hull", "polygon_area",
    "render_svg", "rotate_in_plane", "run_dsb", "run_fsb", "run_setting",
    "run_strategy", "search_boundary", "summarize_csv", "sweep",
    "unit_ball_volume", "unit_domain",
]
