"""Scenario files: INI text with one section per concern.

Example::

    [environment]
    bounds = 0, 0, 30, 20
    home = 3, 10, 0
    goal = 27, 10, 0

    [obstacles]
    circle.a = 12, 4, 1.0
    row.wall = 9, 8.5, 17, 8.5, 0.5, 0.6    # x0, y0, x1, y1, radius, spacing

Every other section is optional and falls back to the defaults below.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dynamics import PlannerModel, PlannerState, TrackerModel
from .meta_graph import GraphConfig
from .reachability.synthesis import HJConfig
from .world import Environment


class ScenarioError(ValueError):
    """The scenario file is malformed or describes an infeasible setup."""


@dataclass(frozen=True)
class Schedule:
    tick: float = 0.1
    substep: float = 0.01
    expand_per_tick: int = 2
    consolidate_per_tick: int = 2
    sample_tries: int = 20
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    env: Environment
    planner: PlannerModel
    tracker: TrackerModel
    r_robot: float = 0.2
    z_p: float = 1.0
    z_clearance: float = 0.5
    sensing_range: float = 4.0
    sense_spacing: float = 0.5
    graph: GraphConfig = GraphConfig()
    epsilon: float = 0.1
    t_replan: float = 2.0
    seed: int = 0
    hj: HJConfig = HJConfig()
    hj_cache: str | None = None
    schedule: Schedule = Schedule()
    max_ticks: int = 20000
    goal_tolerance: float | None = None

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed, schedule=replace(self.schedule, seed=seed))


def _floats(text: str, n: int | None, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise ScenarioError(f"{what}: expected numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ScenarioError(f"{what}: expected {n} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise ScenarioError(f"{what}: non-finite value")
    return vals


def _row(x0, y0, x1, y1, radius, spacing):
    if spacing <= 0:
        raise ScenarioError("row spacing must be positive")
    length = math.hypot(x1 - x0, y1 - y0)
    n = int(math.floor(length / spacing + 1e-9)) + 1
    ts = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    return [(x0 + t * (x1 - x0), y0 + t * (y1 - y0), radius) for t in ts]


def _obstacles(cp: configparser.ConfigParser) -> list[tuple[float, float, float]]:
    out = []
    if not cp.has_section("obstacles"):
        return out
    for key, text in cp.items("obstacles"):
        kind = key.split(".", 1)[0]
        if kind == "circle":
            out.append(tuple(_floats(text, 3, f"obstacles.{key}")))
        elif kind == "row":
            out.extend(_row(*_floats(text, 6, f"obstacles.{key}")))
        else:
            raise ScenarioError(f"unknown obstacle kind in key {key!r} (use circle.* or row.*)")
    return out


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ScenarioError(f"{section}.{key}: cannot parse {raw!r}") from exc


def _optional_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def parse_scenario(text: str, name: str = "scenario") -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    if not cp.has_section("environment"):
        raise ScenarioError("missing [environment] section")
    for key in ("bounds", "home", "goal"):
        if not cp.has_option("environment", key):
            raise ScenarioError(f"missing environment.{key}")

    obs = _obstacles(cp)
    try:
        env = Environment(
            tuple(_floats(cp.get("environment", "bounds"), 4, "environment.bounds")),
            np.array([o[:2] for o in obs]).reshape(-1, 2),
            np.array([o[2] for o in obs]),
            PlannerState(*_floats(cp.get("environment", "home"), 3, "environment.home")),
            PlannerState(*_floats(cp.get("environment", "goal"), 3, "environment.goal")),
        )
        veh = "vehicle"
        g = _get(cp, veh, "g", float, 9.81)
        planner = PlannerModel(
            _get(cp, veh, "speed", float, 1.0),
            _get(cp, veh, "c_min", float, -1.0),
            _get(cp, veh, "c_max", float, 1.0),
        )
        half_pi = math.pi / 2
        tracker = TrackerModel(
            g,
            (_get(cp, veh, "pitch_min", float, half_pi - 0.35), _get(cp, veh, "pitch_max", float, half_pi + 0.35)),
            (_get(cp, veh, "roll_min", float, -0.35), _get(cp, veh, "roll_max", float, 0.35)),
            (_get(cp, veh, "thrust_min", float, g - 3.0), _get(cp, veh, "thrust_max", float, g + 3.0)),
        )
        pl = "planner"
        graph = GraphConfig(
            k=_get(cp, pl, "k", int, 5),
            angle_weight=_get(cp, pl, "angle_weight", _optional_float, None),
            sample_dt=_get(cp, pl, "sample_dt", float, 0.1),
        )
        hj_defaults = HJConfig()
        hj = HJConfig(
            **{
                f: _get(cp, "hj", f, type(getattr(hj_defaults, f)), getattr(hj_defaults, f))
                for f in hj_defaults.__dataclass_fields__
            }
        )
        sc = "schedule"
        schedule = Schedule(
            tick=_get(cp, sc, "tick", float, 0.1),
            substep=_get(cp, sc, "substep", float, 0.01),
            expand_per_tick=_get(cp, sc, "expand_per_tick", int, 2),
            consolidate_per_tick=_get(cp, sc, "consolidate_per_tick", int, 2),
            sample_tries=_get(cp, sc, "sample_tries", int, 20),
            seed=_get(cp, sc, "seed", int, 0),
        )
        cfg = ScenarioConfig(
            name=_get(cp, "scenario", "name", str, name),
            env=env,
            planner=planner,
            tracker=tracker,
            r_robot=_get(cp, veh, "r_robot", float, 0.2),
            z_p=_get(cp, veh, "z_p", float, 1.0),
            z_clearance=_get(cp, veh, "z_clearance", float, 0.5),
            sensing_range=_get(cp, "sensing", "range", float, 4.0),
            sense_spacing=_get(cp, "sensing", "record_spacing", float, 0.5),
            graph=graph,
            epsilon=_get(cp, pl, "epsilon", float, 0.1),
            t_replan=_get(cp, pl, "t_replan", float, 2.0),
            seed=_get(cp, pl, "seed", int, 0),
            hj=hj,
            hj_cache=_get(cp, "hj", "cache", str, None),
            schedule=schedule,
            max_ticks=_get(cp, "termination", "max_ticks", int, 20000),
            goal_tolerance=_get(cp, "termination", "goal_tolerance", _optional_float, None),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    _check(cfg)
    return cfg


def _check(cfg: ScenarioConfig) -> None:
    s = cfg.schedule
    if not (cfg.r_robot > 0 and cfg.sensing_range > 0 and cfg.t_replan > 0):
        raise ScenarioError("r_robot, sensing range and t_replan must be positive")
    if not 0 <= cfg.epsilon <= 1:
        raise ScenarioError("epsilon must lie in [0, 1]")
    if not (s.tick > 0 and 0 < s.substep <= s.tick):
        raise ScenarioError("need 0 < substep <= tick")
    ratio = s.tick / s.substep
    if abs(ratio - round(ratio)) > 1e-9:
        raise ScenarioError("tick must be a whole number of substeps")
    if min(s.expand_per_tick, s.consolidate_per_tick, s.sample_tries) < 0 or cfg.max_ticks <= 0:
        raise ScenarioError("schedule budgets must be non-negative and max_ticks positive")
    if cfg.graph.k < 1 or cfg.graph.sample_dt <= 0:
        raise ScenarioError("planner.k must be >= 1 and sample_dt positive")
    if cfg.planner.c_max <= 0:
        raise ScenarioError("c_max must be positive for the initial home loop")


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, path.stem)


def shipped_scenario(name: str) -> Path:
    """Path of a scenario bundled with the package (``open``, ``deadend``, ``enclosed_goal``)."""
    path = Path(__file__).parent / "scenarios" / f"{name}.cfg"
    if not path.exists():
        raise ScenarioError(f"no shipped scenario named {name!r}")
    return path
