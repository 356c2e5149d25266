"""Tracking-error reachability: relative dynamics, value functions and the TEB."""

from .bound import (
    RolloutReport,
    TrackingBound,
    adversarial_rollouts,
    extract_teb,
    grid_kappa,
    minimised_value,
    sample_sublevel,
    select_level,
)
from .control import optimal_tracking_control, planar_control_batch, vertical_control_batch
from .grid import Axis, ValueGrid, params_hash
from .relative import (
    RelativeState,
    relative_derivative,
    relative_derivative_kinematic,
    relative_state,
    relative_state_batch,
    tracker_from_relative,
    tracker_from_relative_batch,
)
from .solver import (
    ConvergenceError,
    GameInfeasible,
    SolverSettings,
    default_axes,
    default_z_axes,
    solve_value,
    solve_z_subsystem,
    solve_z_value,
    z_extent,
)
from .synthesis import HJConfig, TrackingSystem, build_tracking, cache_key

__all__ = [
    "Axis",
    "ConvergenceError",
    "GameInfeasible",
    "HJConfig",
    "RelativeState",
    "RolloutReport",
    "SolverSettings",
    "TrackingBound",
    "TrackingSystem",
    "ValueGrid",
    "adversarial_rollouts",
    "build_tracking",
    "cache_key",
    "default_axes",
    "default_z_axes",
    "extract_teb",
    "grid_kappa",
    "minimised_value",
    "optimal_tracking_control",
    "params_hash",
    "planar_control_batch",
    "relative_derivative",
    "relative_derivative_kinematic",
    "relative_state",
    "relative_state_batch",
    "sample_sublevel",
    "select_level",
    "solve_value",
    "solve_z_subsystem",
    "solve_z_value",
    "tracker_from_relative",
    "tracker_from_relative_batch",
    "vertical_control_batch",
    "z_extent",
]
