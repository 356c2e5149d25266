"""Analytic Dubins steering: shortest forward paths for the constant-speed car.

Segment parameters are stored in radius-normalised units (arc angle for turns,
length / R for straights), following the usual six-word construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Leg, PlannerState, Trajectory, propagate

WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")
_TWO_PI = 2.0 * math.pi


def _mod2pi(a: float) -> float:
    return a - _TWO_PI * math.floor(a / _TWO_PI)


def _word_params(word: str, alpha: float, beta: float, d: float):
    sa, sb = math.sin(alpha), math.sin(beta)
    ca, cb = math.cos(alpha), math.cos(beta)
    c_ab = math.cos(alpha - beta)
    if word == "LSL":
        p_sq = 2 + d * d - 2 * c_ab + 2 * d * (sa - sb)
        if p_sq < 0:
            return None
        tmp = math.atan2(cb - ca, d + sa - sb)
        return _mod2pi(tmp - alpha), math.sqrt(p_sq), _mod2pi(beta - tmp)
    if word == "RSR":
        p_sq = 2 + d * d - 2 * c_ab + 2 * d * (sb - sa)
        if p_sq < 0:
            return None
        tmp = math.atan2(ca - cb, d - sa + sb)
        return _mod2pi(alpha - tmp), math.sqrt(p_sq), _mod2pi(tmp - beta)
    if word == "LSR":
        p_sq = -2 + d * d + 2 * c_ab + 2 * d * (sa + sb)
        if p_sq < 0:
            return None
        p = math.sqrt(p_sq)
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        return _mod2pi(tmp - alpha), p, _mod2pi(tmp - _mod2pi(beta))
    if word == "RSL":
        p_sq = -2 + d * d + 2 * c_ab - 2 * d * (sa + sb)
        if p_sq < 0:
            return None
        p = math.sqrt(p_sq)
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        return _mod2pi(alpha - tmp), p, _mod2pi(beta - tmp)
    if word == "RLR":
        tmp = (6.0 - d * d + 2 * c_ab + 2 * d * (sa - sb)) / 8.0
        if abs(tmp) > 1:
            return None
        phi = math.atan2(ca - cb, d - sa + sb)
        p = _mod2pi(_TWO_PI - math.acos(tmp))
        t = _mod2pi(alpha - phi + _mod2pi(p / 2.0))
        return t, p, _mod2pi(alpha - beta - t + _mod2pi(p))
    if word == "LRL":
        tmp = (6.0 - d * d + 2 * c_ab + 2 * d * (sb - sa)) / 8.0
        if abs(tmp) > 1:
            return None
        phi = math.atan2(ca - cb, d + sa - sb)
        p = _mod2pi(_TWO_PI - math.acos(tmp))
        t = _mod2pi(-alpha - phi + p / 2.0)
        return t, p, _mod2pi(_mod2pi(beta) - alpha - t + _mod2pi(p))
    raise ValueError(f"unknown Dubins word {word!r}")


@dataclass(frozen=True)
class DubinsPath:
    start: PlannerState
    word: str
    params: tuple[float, float, float]  # normalised segment lengths
    radius: float

    @property
    def length(self) -> float:
        return sum(self.params) * self.radius

    def segments(self, v: float) -> list[tuple[float, float]]:
        """(duration, turn rate) for each non-empty segment at speed ``v``."""
        rate = v / self.radius
        out = []
        for letter, p in zip(self.word, self.params):
            if p <= 0:
                continue
            c = {"L": rate, "R": -rate, "S": 0.0}[letter]
            out.append((p * self.radius / v, c))
        return out

    def end_state(self) -> PlannerState:
        st = self.start.as_array()
        for dur, c in self.segments(1.0):
            st = propagate(st, c, 1.0, dur)
        return PlannerState.from_array(st)

    def sample(self, v: float, dt: float, t0: float = 0.0) -> Trajectory:
        """Timed samples with spacing <= ``dt``; segment switches are samples too."""
        segs = self.segments(v)
        times = [0.0]
        states = [self.start.as_array()]
        controls = []
        st = states[0]
        t = 0.0
        for dur, c in segs:
            n = max(1, int(math.ceil(dur / dt - 1e-9)))
            taus = np.linspace(0.0, dur, n + 1)[1:]
            pts = propagate(np.broadcast_to(st, (n, 3)), c, v, taus)
            times.extend(t + taus)
            states.extend(pts)
            controls.extend([c] * n)
            st = pts[-1]
            t += dur
        controls.append(0.0)
        return Trajectory(np.array(times) + t0, np.array(states), np.array(controls), v)


def dubins_candidates(p_from: PlannerState, p_to: PlannerState, radius: float) -> list[DubinsPath]:
    """Every geometrically valid word, in ``WORDS`` order."""
    if not radius > 0:
        raise ValueError("turn radius must be positive")
    dx, dy = p_to.x - p_from.x, p_to.y - p_from.y
    d = math.hypot(dx, dy) / radius
    theta = _mod2pi(math.atan2(dy, dx)) if d > 0 else 0.0
    alpha = _mod2pi(p_from.theta - theta)
    beta = _mod2pi(p_to.theta - theta)
    out = []
    for word in WORDS:
        params = _word_params(word, alpha, beta, d)
        if params is not None:
            out.append(DubinsPath(p_from, word, params, radius))
    return out


def dubins_path(p_from: PlannerState, p_to: PlannerState, radius: float) -> DubinsPath | None:
    if not radius > 0:
        raise ValueError("turn radius must be positive")
    if p_from.matches(p_to):
        return DubinsPath(p_from, "LSL", (0.0, 0.0, 0.0), radius)
    best = None
    for cand in dubins_candidates(p_from, p_to, radius):
        if best is None or cand.length < best.length:
            best = cand
    return best


def dubins_connect(
    p_from: PlannerState,
    p_to: PlannerState,
    radius: float,
    v: float,
    dt: float = 0.05,
    t0: float = 0.0,
    vertex_id: int | None = None,
) -> Trajectory | None:
    """Shortest Dubins trajectory from ``p_from`` to ``p_to``, timed at speed ``v``.

    The final sample is snapped to ``p_to`` exactly. Identical poses give a
    single-sample, zero-length trajectory.
    """
    path = dubins_path(p_from, p_to, radius)
    if path is None:
        return None
    if path.length == 0.0:
        traj = Trajectory(np.array([t0]), p_from.as_array()[None], np.zeros(1), v)
    else:
        traj = path.sample(v, dt, t0)
        traj.states[-1] = p_to.as_array()
    if vertex_id is not None:
        traj.legs = (Leg(len(traj) - 1, vertex_id),)
    return traj
