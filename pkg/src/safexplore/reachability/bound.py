"""Tracking error bound: level selection, disc extraction and rollout checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import PlannerModel, TrackerModel, propagate
from .control import planar_control_batch
from .grid import ValueGrid
from .relative import relative_state_batch, tracker_from_relative_batch


@dataclass(frozen=True)
class TrackingBound:
    """Planar disc and vertical half-height containing the tracking error.

    ``kappa`` and ``z_kappa`` are one grid-cell value variation of the planar
    and vertical value functions near the chosen sublevel sets; run-time
    checks allow that much slack on top of ``radius`` and ``z_extent``.
    """

    radius: float
    z_extent: float
    level: float
    kappa: float = 0.0
    z_kappa: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("TEB radius must be positive")
        if self.z_extent < 0:
            raise ValueError("z extent must be non-negative")

    @property
    def planar_tolerance(self) -> float:
        return self.radius + self.kappa

    @property
    def vertical_tolerance(self) -> float:
        return self.z_extent + self.z_kappa


LEVEL_RTOL = 1e-9


def _within(values, level):
    return values <= level + LEVEL_RTOL * max(1.0, abs(level))


def minimised_value(grid: ValueGrid) -> np.ndarray:
    """(d, psi) array of the value minimised over the velocity axes."""
    return grid.values.min(axis=(2, 3))


def extract_teb(grid: ValueGrid, level: float, z_extent: float = 0.0) -> TrackingBound:
    """Disc containing the planar projection of the sublevel set ``V <= level``.

    The radius is the largest node distance whose velocity-minimised value is
    within the level; ``level = inf`` gives the whole distance axis.
    """
    vmin = minimised_value(grid)
    if level < vmin.min():
        raise ValueError(f"level {level} is below the minimum value {vmin.min():.6g}")
    d = grid.axes[0].nodes()
    inside = _within(vmin, level).any(axis=1)
    radius = float(d[inside].max())
    if radius <= 0:
        raise ValueError(f"sublevel set at level {level} does not leave the origin")
    return TrackingBound(radius, z_extent, float(level), grid_kappa(grid, level))


def grid_kappa(grid: ValueGrid, level: float) -> float:
    """Largest value difference between adjacent nodes touching ``V <= level``."""
    V = grid.values
    inside = _within(V, level)
    kappa = 0.0
    for axis, ax in enumerate(grid.axes):
        if ax.periodic:
            nb = np.roll(V, -1, axis=axis)
            nb_in = np.roll(inside, -1, axis=axis)
            diff, touch = np.abs(nb - V), inside | nb_in
        else:
            hi = [slice(None)] * V.ndim
            lo = [slice(None)] * V.ndim
            hi[axis] = slice(1, None)
            lo[axis] = slice(None, -1)
            diff = np.abs(V[tuple(hi)] - V[tuple(lo)])
            touch = inside[tuple(hi)] | inside[tuple(lo)]
        if touch.any():
            kappa = max(kappa, float(diff[touch].max()))
    return kappa


@dataclass(frozen=True)
class RolloutReport:
    rollouts: int
    max_value: float
    max_distance: float
    worst_start: tuple[float, ...]

    def passes(self, bound: TrackingBound) -> bool:
        return (
            self.max_value <= bound.level + bound.kappa
            and self.max_distance <= bound.radius + bound.kappa
        )


def sample_sublevel(grid: ValueGrid, level: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` relative states with interpolated value <= ``level``; the first is the origin."""
    V = grid.values
    idx = np.argwhere(_within(V, level))
    if len(idx) == 0:
        raise ValueError(f"sublevel set at level {level} contains no grid node")
    lo = np.array([a.lo for a in grid.axes])
    step = np.array([a.step for a in grid.axes])
    box_lo = lo + step * (idx.min(axis=0) - 1)
    box_hi = lo + step * (idx.max(axis=0) + 1)
    psi = grid.axes[1]
    box_lo[0], box_lo[1], box_hi[1] = 0.0, psi.lo, psi.hi
    for a in (2, 3):
        box_lo[a] = max(box_lo[a], grid.axes[a].lo)
        box_hi[a] = min(box_hi[a], grid.axes[a].hi)
    box_hi[0] = min(box_hi[0], grid.axes[0].hi)
    out = [np.zeros((1, 4))]
    have = 1
    for _ in range(200):
        if have >= n:
            break
        cand = rng.uniform(box_lo, box_hi, size=(4 * n, 4))
        keep = cand[grid.interp(cand) <= level]
        out.append(keep)
        have += len(keep)
    pts = np.concatenate(out)
    if len(pts) < n:
        raise ValueError(f"could only sample {len(pts)} of {n} states inside the sublevel set")
    return pts[:n]


def adversarial_rollouts(
    grid: ValueGrid,
    starts: np.ndarray,
    planner: PlannerModel,
    tracker: TrackerModel,
    horizon: float = 10.0,
    dt: float = 0.01,
    rng: np.random.Generator | None = None,
) -> RolloutReport:
    """Closed-loop games in the full world frame from the given relative starts.

    The tracker plays :func:`planar_control_batch` with zero-order hold; the
    planner switches between its turn-rate endpoints with a per-rollout random
    persistence. The tracker's planar motion under constant input is
    integrated exactly.
    """
    rng = rng or np.random.default_rng(0)
    n = len(starts)
    v = planner.speed
    plan = np.zeros((n, 3))
    plan[:, 2] = rng.uniform(-math.pi, math.pi, n)
    track = tracker_from_relative_batch(starts, plan, v)
    ends = np.array([planner.c_min, planner.c_max])
    c = ends[rng.integers(0, 2, n)]
    switch_p = rng.uniform(0.01, 0.5, n)
    rel = relative_state_batch(track, plan, v)
    max_v = grid.interp(rel)
    max_d = rel[:, 0].copy()
    g = tracker.g
    for _ in range(int(round(horizon / dt))):
        u = planar_control_batch(grid, rel, plan[:, 2], tracker)
        ax = g * np.cos(u[:, 0])
        ay = -g * np.sin(u[:, 1])
        track[:, 0] += track[:, 1] * dt + 0.5 * ax * dt * dt
        track[:, 1] += ax * dt
        track[:, 2] += track[:, 3] * dt + 0.5 * ay * dt * dt
        track[:, 3] += ay * dt
        plan = propagate(plan, c, v, dt)
        flip = rng.random(n) < switch_p
        c = np.where(flip, ends[rng.integers(0, 2, n)], c)
        rel = relative_state_batch(track, plan, v)
        np.maximum(max_v, grid.interp(rel), out=max_v)
        np.maximum(max_d, rel[:, 0], out=max_d)
    worst = int(np.argmax(max_v))
    return RolloutReport(n, float(max_v.max()), float(max_d.max()), tuple(map(float, starts[worst])))


def candidate_levels(grid: ValueGrid) -> np.ndarray:
    """Distinct velocity-minimised node values above the minimum, ascending."""
    vals = np.sort(minimised_value(grid).ravel())
    keep = np.diff(vals, append=np.inf) > LEVEL_RTOL * np.maximum(1.0, np.abs(vals))
    vals = vals[keep]
    return vals[1:]


def select_level(
    grid: ValueGrid,
    planner: PlannerModel,
    tracker: TrackerModel,
    rollouts: int = 1000,
    horizon: float = 10.0,
    dt: float = 0.01,
    seed: int = 0,
    z_extent: float = 0.0,
    max_candidates: int = 10,
) -> tuple[TrackingBound, RolloutReport]:
    """Smallest candidate level whose sublevel set passes the rollout check.

    Raises
    ------
    RuntimeError
        If none of the first ``max_candidates`` levels passes.
    """
    reports = []
    for level in candidate_levels(grid)[:max_candidates]:
        bound = extract_teb(grid, float(level), z_extent)
        rng = np.random.default_rng(seed)
        starts = sample_sublevel(grid, bound.level, rollouts, rng)
        report = adversarial_rollouts(grid, starts, planner, tracker, horizon, dt, rng)
        if report.passes(bound):
            return bound, report
        reports.append((float(level), report))
    detail = "; ".join(f"level {lv:.4f}: max V {r.max_value:.4f}, max d {r.max_distance:.4f}" for lv, r in reports)
    raise RuntimeError(f"no candidate level passed the invariance check ({detail})")
