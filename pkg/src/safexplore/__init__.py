"""Recursively feasible planning and safe exploration in unknown static environments."""

from .dynamics import PlannerModel, PlannerState, TerminalKind, TrackerModel, TrackerState, Trajectory
from .kernels import BACKEND
from .meta_graph import ReachGraph
from .scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario, shipped_scenario
from .sim import Outcome, RunResult, run, run_baseline_optimistic
from .world import Environment, KnowledgeMap, Label

__all__ = [
    "BACKEND",
    "Environment",
    "KnowledgeMap",
    "Label",
    "Outcome",
    "PlannerModel",
    "PlannerState",
    "ReachGraph",
    "RunResult",
    "ScenarioConfig",
    "ScenarioError",
    "TerminalKind",
    "TrackerModel",
    "TrackerState",
    "Trajectory",
    "load_scenario",
    "parse_scenario",
    "run",
    "run_baseline_optimistic",
    "shipped_scenario",
]
__version__ = "0.1.0"
