"""explorebench: a deterministic 2D frontier-exploration workbench."""

from .grid import FREE, OCCUPIED, UNKNOWN
from .world import ClutterSpec, GroundTruth, add_clutter, generate_env, parse_env
from .mapping import KnownMap, Scan, cast_scan, integrate_scan
from .nav import DistanceField, Path, clearance_field, distance_field, extract_path
from .frontier import FrontierSet, detect_frontiers, window_filter
from .predictor import PlanningMap, predict
from .planners import (
    DISTANCE_ADVANTAGE,
    INFO_GAIN,
    NEAREST_FRONTIER,
    Decision,
    GainEstimate,
    PlannerConfig,
    estimate_gain,
    plan_distance_advantage,
    plan_info_gain,
    plan_nearest_frontier,
)
from .episode import EpisodeLog, metrics_resample, run_episode
from .harness import EnvSpec, ExperimentSpec, clutter_matrix, run_experiment, sweep_cp, sweep_lambda

__version__ = "0.1.0"

__all__ = [
    "FREE", "OCCUPIED", "UNKNOWN",
    "ClutterSpec", "GroundTruth", "add_clutter", "generate_env", "parse_env",
    "KnownMap", "Scan", "cast_scan", "integrate_scan",
    "DistanceField", "Path", "clearance_field", "distance_field", "extract_path",
    "FrontierSet", "detect_frontiers", "window_filter",
    "PlanningMap", "predict",
    "DISTANCE_ADVANTAGE", "INFO_GAIN", "NEAREST_FRONTIER",
    "Decision", "GainEstimate", "PlannerConfig",
    "estimate_gain", "plan_distance_advantage", "plan_info_gain", "plan_nearest_frontier",
    "EpisodeLog", "metrics_resample", "run_episode",
    "EnvSpec", "ExperimentSpec", "clutter_matrix", "run_experiment", "sweep_cp", "sweep_lambda",
]
