"""Monotone value iteration for the tracking-error games.

The planar game lives on (d, psi, vT, vN). Its value is the largest distance
the planner can force over all time when the tracker plays optimally, so the
iteration is ``V <- max(d, V + dt * H_num(V))`` run to a fixed point, with an
upwind numerical Hamiltonian ``H_num``. The vertical game is the same
construction on (z, vz) with cost ``|z|``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..dynamics import PlannerModel, TrackerModel
from .grid import Axis, ValueGrid

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """The value iteration did not reach its residual tolerance."""

    def __init__(self, message: str, residuals: list[float]):
        super().__init__(message)
        self.residuals = residuals


class GameInfeasible(ValueError):
    """The tracker cannot hold hover against the given control bounds."""


@dataclass(frozen=True)
class SolverSettings:
    residual_tol: float = 1e-6
    max_sweeps: int = 50_000
    cfl: float = 0.9
    log_every: int = 500


def default_axes(v: float, d_max: float = 3.0, n: int = 31) -> tuple[Axis, ...]:
    """(d, psi, vT, vN) axes; relative velocities span twice the planner speed."""
    vel = 2.0 * v
    return (
        Axis(0.0, d_max, n),
        Axis(-math.pi, math.pi, n, periodic=True),
        Axis(-vel, vel, n),
        Axis(-vel, vel, n),
    )


def game_params(planner: PlannerModel, tracker: TrackerModel) -> tuple[float, float, float, float]:
    """(speed, c_min, c_max, m) where m is the tracker's heading-independent authority."""
    m = tracker.planar_authority()
    if m <= 0:
        raise GameInfeasible("planar acceleration box does not contain the origin")
    return (float(planner.speed), float(planner.c_min), float(planner.c_max), float(m))


def _iterate(step_fn, V, settings: SolverSettings, label: str):
    out = np.empty_like(V)
    residuals = []
    for sweep in range(1, settings.max_sweeps + 1):
        res = step_fn(V, out)
        V, out = out, V
        residuals.append(res)
        if not math.isfinite(res):
            raise ConvergenceError(f"{label}: value iteration diverged at sweep {sweep}", residuals)
        if settings.log_every and sweep % settings.log_every == 0:
            log.info("%s sweep %d residual %.3e", label, sweep, res)
        if res < settings.residual_tol:
            return V, residuals
    tail = ", ".join(f"{r:.2e}" for r in residuals[-5:])
    raise ConvergenceError(
        f"{label}: residual {residuals[-1]:.3e} above tolerance {settings.residual_tol:.1e} "
        f"after {settings.max_sweeps} sweeps (last residuals: {tail})",
        residuals,
    )


def solve_value(
    axes: tuple[Axis, ...],
    planner: PlannerModel,
    tracker: TrackerModel,
    settings: SolverSettings = SolverSettings(),
    dt: float | None = None,
    initial: np.ndarray | None = None,
) -> ValueGrid:
    """Converged value of the planar tracking-error game.

    Parameters
    ----------
    axes
        Four axes (d, psi, vT, vN); psi must be periodic over a full turn and d
        must start at zero.
    planner, tracker
        Supply the reference speed, turn-rate interval and the tracker's
        control box. The planner's heading is treated as adversarial.
    dt
        Pseudo-time step. Defaults to ``settings.cfl`` times the monotonicity
        limit; an explicit value must not exceed that limit.
    initial
        Optional warm start. It must already satisfy ``V >= d``.

    Raises
    ------
    ConvergenceError
        If the residual does not fall below ``settings.residual_tol``.
    """
    if len(axes) != 4:
        raise ValueError("the planar game needs four axes")
    d_ax, psi_ax = axes[0], axes[1]
    if d_ax.lo != 0.0 or d_ax.periodic:
        raise ValueError("the distance axis must start at zero and not be periodic")
    if not psi_ax.periodic or not math.isclose(psi_ax.hi - psi_ax.lo, 2 * math.pi):
        raise ValueError("the bearing axis must be periodic over 2*pi")
    if axes[2].periodic or axes[3].periodic:
        raise ValueError("velocity axes must not be periodic")
    prm = game_params(planner, tracker)
    lo = tuple(a.lo for a in axes)
    step = tuple(a.step for a in axes)
    count = tuple(a.count for a in axes)
    dt_limit = 1.0 / kernels.hj_max_rate(lo, step, count, prm)
    if dt is None:
        dt = settings.cfl * dt_limit
    elif not 0 < dt <= dt_limit:
        raise ValueError(f"dt={dt} outside the monotone range (0, {dt_limit}]")
    cache = kernels.hj_cache(lo, step, count, prm)
    d = axes[0].nodes()[:, None, None, None]
    if initial is None:
        V = np.ascontiguousarray(np.broadcast_to(d, count), dtype=np.float64)
    else:
        V = np.ascontiguousarray(np.maximum(initial, d), dtype=np.float64)

    def step_fn(V, out):
        return kernels.hj_sweep(V, out, lo, step, count, prm, dt, cache)

    V, residuals = _iterate(step_fn, V, settings, "planar game")
    meta = {
        "game": "planar",
        "speed": prm[0],
        "c_min": prm[1],
        "c_max": prm[2],
        "authority": prm[3],
        "dt": dt,
        "sweeps": len(residuals),
        "backend": kernels.BACKEND,
    }
    return ValueGrid(axes, V, residuals[-1], meta)


# ---------------------------------------------------------------------------
# vertical subsystem


def default_z_axes(n: int = 81, z_max: float = 1.0, vz_max: float = 2.0) -> tuple[Axis, Axis]:
    return Axis(-z_max, z_max, n), Axis(-vz_max, vz_max, n)


def _extrapolated(V: np.ndarray) -> np.ndarray:
    P = np.pad(V, 1, mode="edge")
    P[0, 1:-1] = 2 * V[0] - V[1]
    P[-1, 1:-1] = 2 * V[-1] - V[-2]
    P[1:-1, 0] = 2 * V[:, 0] - V[:, 1]
    P[1:-1, -1] = 2 * V[:, -1] - V[:, -2]
    return P


def solve_z_value(
    u3_bounds: tuple[float, float],
    g: float,
    axes: tuple[Axis, Axis] | None = None,
    settings: SolverSettings = SolverSettings(),
) -> ValueGrid:
    """Value of the vertical game: the largest ``|z|`` reached under optimal thrust."""
    lo3, hi3 = u3_bounds
    if not lo3 < g < hi3:
        raise GameInfeasible(f"thrust interval {u3_bounds} must strictly contain g={g}")
    axes = axes or default_z_axes()
    z_ax, vz_ax = axes
    z = z_ax.nodes()[:, None]
    vz = vz_ax.nodes()[None, :]
    hz, hv = z_ax.step, vz_ax.step
    a_lo, a_hi = lo3 - g, hi3 - g
    dt = settings.cfl / float(np.max(np.abs(vz) / hz + max(-a_lo, a_hi) / hv))
    cost = np.abs(z) + 0 * vz

    def up(b, pm, pp):
        return np.maximum(b, 0.0) * pp + np.minimum(b, 0.0) * pm

    def step_fn(V, out):
        P = _extrapolated(V)
        pm_z = (V - P[:-2, 1:-1]) / hz
        pp_z = (P[2:, 1:-1] - V) / hz
        pm_v = (V - P[1:-1, :-2]) / hv
        pp_v = (P[1:-1, 2:] - V) / hv
        # thrust enters linearly; hover (zero net acceleration) is admissible
        thrust = np.minimum(np.minimum(up(a_lo, pm_v, pp_v), up(a_hi, pm_v, pp_v)), 0.0)
        np.maximum(cost, V + dt * (up(vz, pm_z, pp_z) + thrust), out=out)
        return float(np.max(np.abs(out - V)))

    V, residuals = _iterate(step_fn, cost.copy(), settings, "vertical game")
    meta = {"game": "vertical", "g": g, "u3_bounds": [lo3, hi3], "dt": dt, "sweeps": len(residuals)}
    return ValueGrid(axes, V, residuals[-1], meta)


def z_extent(zgrid: ValueGrid, level: float = 0.0) -> float:
    """Vertical tracking bound starting from the given value level.

    With the reference at the level-flight altitude and the tracker starting
    on it at rest, the bound is the value there (zero up to discretisation),
    clipped below by ``level``.
    """
    v0 = float(zgrid.interp([[0.0, 0.0]])[0])
    return max(level, v0)


def solve_z_subsystem(
    u3_bounds: tuple[float, float],
    g: float,
    level: float = 0.0,
    axes: tuple[Axis, Axis] | None = None,
    settings: SolverSettings = SolverSettings(),
) -> float:
    """Vertical tracking-error extent for a tracker holding the reference altitude."""
    return z_extent(solve_z_value(u3_bounds, g, axes, settings), level)
