"""End-to-end tracking synthesis: solve, select a level, cache the result."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..dynamics import PlannerModel, PlannerState, TrackerControl, TrackerModel, TrackerState
from .bound import RolloutReport, TrackingBound, grid_kappa, select_level
from .control import planar_control_batch, vertical_control_batch
from .grid import Axis, ValueGrid, params_hash
from .relative import relative_state_batch
from .solver import SolverSettings, default_axes, default_z_axes, solve_value, solve_z_value, z_extent

log = logging.getLogger(__name__)

SCHEME_VERSION = "upwind-1"


@dataclass(frozen=True)
class HJConfig:
    nodes: int = 31
    d_max: float = 3.0
    velocity_factor: float = 2.0
    residual_tol: float = 1e-8
    max_sweeps: int = 20_000
    z_nodes: int = 81
    z_max: float = 1.0
    vz_max: float = 2.0
    z_level: float = 0.0
    rollouts: int = 1000
    rollout_horizon: float = 10.0
    rollout_dt: float = 0.01
    seed: int = 0

    def axes(self, v: float) -> tuple[Axis, ...]:
        axes = default_axes(v, self.d_max, self.nodes)
        vel = self.velocity_factor * v
        return axes[:2] + (Axis(-vel, vel, self.nodes), Axis(-vel, vel, self.nodes))

    def z_axes(self) -> tuple[Axis, Axis]:
        return default_z_axes(self.z_nodes, self.z_max, self.vz_max)


def default_cache_dir() -> Path:
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "safexplore"


@dataclass(frozen=True)
class TrackingSystem:
    """Solved value functions, the chosen bound, and the tracking controller."""

    planner: PlannerModel
    tracker: TrackerModel
    grid: ValueGrid
    zgrid: ValueGrid
    bound: TrackingBound
    report: RolloutReport | None = None
    artefact: str | None = None

    def relative(self, s: TrackerState, p: PlannerState) -> np.ndarray:
        return relative_state_batch(s.as_array()[None], p.as_array()[None], self.planner.speed)[0]

    def value(self, rel) -> float:
        return float(self.grid.interp(np.asarray(rel, dtype=float)[None])[0])

    def control(self, s: TrackerState, p: PlannerState, z_ref: float = 0.0) -> TrackerControl:
        rel = self.relative(s, p)
        u12 = planar_control_batch(self.grid, rel[None], np.array([p.theta]), self.tracker)[0]
        u3 = vertical_control_batch(self.zgrid, np.array([[s.z - z_ref, s.vz]]), self.tracker)[0]
        return TrackerControl(float(u12[0]), float(u12[1]), float(u3))

    def relative_array(self, s: np.ndarray, p: PlannerState) -> np.ndarray:
        """Relative state for a raw ``(x, vx, y, vy, z, vz)`` tracker array."""
        return relative_state_batch(np.asarray(s, dtype=float)[None], p.as_array()[None], self.planner.speed)[0]

    def control_array(self, s: np.ndarray, p: PlannerState, z_ref: float = 0.0) -> np.ndarray:
        """Array form of :meth:`control`, returning ``(u1, u2, u3)``."""
        rel = self.relative_array(s, p)
        u12 = planar_control_batch(self.grid, rel[None], np.array([p.theta]), self.tracker)[0]
        u3 = vertical_control_batch(self.zgrid, np.array([[s[4] - z_ref, s[5]]]), self.tracker)[0]
        return np.array([u12[0], u12[1], u3])


def cache_key(planner: PlannerModel, tracker: TrackerModel, cfg: HJConfig) -> str:
    return params_hash(
        {
            "scheme": SCHEME_VERSION,
            "planner": [planner.speed, planner.c_min, planner.c_max],
            "tracker": [tracker.g, list(tracker.u1_bounds), list(tracker.u2_bounds), list(tracker.u3_bounds)],
            "hj": asdict(cfg),
        }
    )


def build_tracking(
    planner: PlannerModel,
    tracker: TrackerModel,
    cfg: HJConfig = HJConfig(),
    cache_dir: Path | str | None = None,
    use_cache: bool = True,
) -> TrackingSystem:
    """Solve (or load) both games and select the tracking bound.

    Artefacts are stored as ``planar-<key>.vgrid``, ``vertical-<key>.vgrid``
    and a ``planar-<key>.json`` sidecar with the bound, where ``<key>`` hashes
    every parameter that affects the result. ``cache_dir`` may instead name a
    ``.vgrid`` file, used as the planar artefact with the others beside it;
    the parameter hash is then checked against the file's metadata.
    """
    key = cache_key(planner, tracker, cfg)
    where = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    if where.suffix == ".vgrid":
        planar_path = where
        vertical_path = where.with_suffix(".z.vgrid")
        sidecar = where.with_suffix(".json")
    else:
        planar_path = where / f"planar-{key}.vgrid"
        vertical_path = where / f"vertical-{key}.vgrid"
        sidecar = where / f"planar-{key}.json"
    settings = SolverSettings(residual_tol=cfg.residual_tol, max_sweeps=cfg.max_sweeps)

    cached = use_cache and planar_path.exists() and vertical_path.exists() and sidecar.exists()
    if cached:
        info = json.loads(sidecar.read_text())
        cached = info.get("key") == key
        if not cached:
            log.warning("cached artefact %s was built for other parameters; re-solving", planar_path)
    if cached:
        log.info("loading cached tracking artefacts %s", key)
        report = RolloutReport(**{**info["report"], "worst_start": tuple(info["report"]["worst_start"])})
        return TrackingSystem(
            planner,
            tracker,
            ValueGrid.load(planar_path),
            ValueGrid.load(vertical_path),
            TrackingBound(**info["bound"]),
            report,
            str(planar_path),
        )

    log.info("solving the planar tracking game (%d nodes per axis)", cfg.nodes)
    grid = solve_value(cfg.axes(planner.speed), planner, tracker, settings)
    grid = ValueGrid(grid.axes, grid.values, grid.residual, {**grid.meta, "key": key})
    log.info("solving the vertical tracking game")
    zgrid = solve_z_value(tracker.u3_bounds, tracker.g, cfg.z_axes(), settings)
    ext = z_extent(zgrid, cfg.z_level)
    bound, report = select_level(
        grid,
        planner,
        tracker,
        rollouts=cfg.rollouts,
        horizon=cfg.rollout_horizon,
        dt=cfg.rollout_dt,
        seed=cfg.seed,
        z_extent=ext,
    )
    bound = TrackingBound(bound.radius, ext, bound.level, bound.kappa, grid_kappa(zgrid, ext))
    if use_cache:
        grid.save(planar_path)
        zgrid.save(vertical_path)
        sidecar.write_text(json.dumps({"key": key, "bound": asdict(bound), "report": asdict(report)}, indent=2))
    return TrackingSystem(planner, tracker, grid, zgrid, bound, report, str(planar_path) if use_cache else None)
