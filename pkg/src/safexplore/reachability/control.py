"""Optimal tracking control read off a solved value function."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import TrackerControl, TrackerModel, _trig_candidates
from .grid import ValueGrid
from .relative import RelativeState

#: Below this gradient magnitude the Hamiltonian is flat in a control; the
#: controller then holds that channel at its hover value.
GRADIENT_DEADBAND = 1e-9


def _channel_argmin(weight: np.ndarray, candidates: np.ndarray, values: np.ndarray, neutral: float) -> np.ndarray:
    """Pick, per row, the candidate minimising ``weight * values``."""
    cost = weight[:, None] * values[None, :]
    pick = candidates[np.argmin(cost, axis=1)]
    return np.where(np.abs(weight) > GRADIENT_DEADBAND, pick, neutral)


def planar_control_batch(grid: ValueGrid, rel: np.ndarray, theta: np.ndarray, tracker: TrackerModel) -> np.ndarray:
    """(n, 2) pitch/roll minimising the Hamiltonian at each relative state.

    The acceleration enters the Hamiltonian as ``a . q`` with
    ``q = p_vT * t + p_vN * n`` in the world frame, so pitch and roll are
    chosen independently from their trig candidates.
    """
    rel = np.atleast_2d(np.asarray(rel, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (len(rel),))
    _, grad = grid.interp_grad(rel)
    p_t, p_n = grad[:, 2], grad[:, 3]
    ct, st = np.cos(theta), np.sin(theta)
    q_x = p_t * ct - p_n * st
    q_y = p_t * st + p_n * ct
    g = tracker.g
    u1_c = np.array(_trig_candidates(tracker.u1_bounds, math.cos))
    u2_c = np.array(_trig_candidates(tracker.u2_bounds, math.sin))
    hover1 = float(np.clip(math.pi / 2, *tracker.u1_bounds))
    hover2 = float(np.clip(0.0, *tracker.u2_bounds))
    out = np.empty((len(rel), 2))
    out[:, 0] = _channel_argmin(q_x, u1_c, g * np.cos(u1_c), hover1)
    out[:, 1] = _channel_argmin(q_y, u2_c, -g * np.sin(u2_c), hover2)
    return out


def vertical_control_batch(zgrid: ValueGrid | None, zv: np.ndarray, tracker: TrackerModel) -> np.ndarray:
    """Thrust minimising ``(u3 - g) * p_vz``; hover thrust without a vertical value."""
    zv = np.atleast_2d(np.asarray(zv, dtype=float))
    hover = float(np.clip(tracker.g, *tracker.u3_bounds))
    if zgrid is None:
        return np.full(len(zv), hover)
    _, grad = zgrid.interp_grad(zv)
    lo, hi = tracker.u3_bounds
    p = grad[:, 1]
    return np.where(p > GRADIENT_DEADBAND, lo, np.where(p < -GRADIENT_DEADBAND, hi, hover))


def optimal_tracking_control(
    grid: ValueGrid,
    r: RelativeState,
    theta: float,
    tracker: TrackerModel,
    zgrid: ValueGrid | None = None,
    z_err: float = 0.0,
    vz_err: float = 0.0,
) -> TrackerControl:
    """Tracker input minimising the Hamiltonian at ``r``.

    Parameters
    ----------
    grid
        Planar value function over (d, psi, vT, vN).
    r
        Current relative state.
    theta
        Reference heading; the planar input is optimised for the actual
        heading rather than the worst case used in the solve.
    zgrid, z_err, vz_err
        Optional vertical value function and the vertical error state.
    """
    u12 = planar_control_batch(grid, r.as_array()[None], np.array([theta]), tracker)[0]
    u3 = vertical_control_batch(zgrid, np.array([[z_err, vz_err]]), tracker)[0]
    return TrackerControl(float(u12[0]), float(u12[1]), float(u3))
