"""Relative state between the 6D tracker and the 3D planning reference.

The relative state is the tracker position and velocity expressed in the
planner's Frenet frame (tangent along the heading): distance ``d``, bearing
``psi``, and the relative velocity components ``vT`` / ``vN``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import PlannerState, TrackerControl, TrackerState, wrap_angle


@dataclass(frozen=True)
class RelativeState:
    d: float
    psi: float
    vT: float
    vN: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.d, self.psi, self.vT, self.vN)):
            raise ValueError("non-finite relative state")
        if self.d < 0:
            raise ValueError("distance must be non-negative")
        object.__setattr__(self, "psi", wrap_angle(float(self.psi)))

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.psi, self.vT, self.vN])


def relative_state(s: TrackerState, p: PlannerState, v: float) -> RelativeState:
    arr = relative_state_batch(s.as_array()[None], p.as_array()[None], v)[0]
    return RelativeState(*arr)


def relative_state_batch(tracker: np.ndarray, planner: np.ndarray, v: float) -> np.ndarray:
    """(n, 6) tracker states and (n, 3) planner states -> (n, 4) relative states."""
    c, s = np.cos(planner[:, 2]), np.sin(planner[:, 2])
    ex = tracker[:, 0] - planner[:, 0]
    ey = tracker[:, 2] - planner[:, 1]
    wx = tracker[:, 1] - v * c
    wy = tracker[:, 3] - v * s
    e_t = ex * c + ey * s
    e_n = -ex * s + ey * c
    d = np.hypot(e_t, e_n)
    psi = np.where(d > 0, np.arctan2(e_n, e_t), 0.0)
    out = np.empty((len(d), 4))
    out[:, 0] = d
    out[:, 1] = wrap_angle(psi)
    out[:, 2] = wx * c + wy * s
    out[:, 3] = -wx * s + wy * c
    return out


def tracker_from_relative(r, p: PlannerState, v: float, z: float = 0.0, vz: float = 0.0) -> TrackerState:
    """Inverse of ``relative_state`` for a given reference state."""
    r = r.as_array() if isinstance(r, RelativeState) else np.asarray(r, dtype=float)
    arr = tracker_from_relative_batch(r[None], p.as_array()[None], v)[0]
    arr[4], arr[5] = z, vz
    return TrackerState.from_array(arr)


def tracker_from_relative_batch(rel: np.ndarray, planner: np.ndarray, v: float) -> np.ndarray:
    c, s = np.cos(planner[:, 2]), np.sin(planner[:, 2])
    d, psi, vt, vn = rel.T
    e_t, e_n = d * np.cos(psi), d * np.sin(psi)
    out = np.zeros((len(rel), 6))
    out[:, 0] = planner[:, 0] + e_t * c - e_n * s
    out[:, 2] = planner[:, 1] + e_t * s + e_n * c
    out[:, 1] = v * c + vt * c - vn * s
    out[:, 3] = v * s + vt * s + vn * c
    return out


def relative_derivative(r: RelativeState, u: TrackerControl, c: float, theta: float) -> np.ndarray:
    """The relative dynamics exactly as printed in the source model.

    Kept for reference and for quantifying its mismatch against simulation;
    the solver uses :func:`relative_derivative_kinematic`.
    """
    psi, vt, vn = r.psi, r.vT, r.vN
    return np.array(
        [
            vt * math.cos(psi) + vn * math.sin(psi),
            -c - vt * math.sin(psi) + vn * math.cos(psi),
            u.u1 * math.cos(theta) - u.u2 * math.sin(theta) + c * vt,
            -u.u1 * math.sin(theta) - u.u2 * math.cos(theta) - c * vt,
        ]
    )


def relative_derivative_kinematic(
    r: RelativeState, u: TrackerControl, c: float, theta: float, v: float, g: float
) -> np.ndarray:
    """Relative dynamics derived from the 6D tracker and the Dubins reference.

    ``psi`` is undefined at ``d = 0``; its rate is reported as ``-c`` there.
    """
    d, psi, vt, vn = r.d, r.psi, r.vT, r.vN
    ax, ay = g * math.cos(u.u1), -g * math.sin(u.u2)
    a_t = ax * math.cos(theta) + ay * math.sin(theta)
    a_n = -ax * math.sin(theta) + ay * math.cos(theta)
    turn = (vn * math.cos(psi) - vt * math.sin(psi)) / d if d > 0 else 0.0
    return np.array(
        [
            vt * math.cos(psi) + vn * math.sin(psi),
            -c + turn,
            a_t + c * vn,
            a_n - c * (v + vt),
        ]
    )
