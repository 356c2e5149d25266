"""Planning model (3D Dubins car), tracking model (6D near-hover quadrotor),
fixed-step integration and the timed reference trajectory container.

State layouts
-------------
PlannerState : (x, y, theta)
TrackerState : (x, vx, y, vy, z, vz), the row order of the quadrotor model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Tolerance for matching two planner states (cycle closure, duplicate vertices).
POSITION_TOL = 1e-6
HEADING_TOL = 1e-6


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    wrapped = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class PlannerState:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        vals = (self.x, self.y, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite planner state {vals}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @classmethod
    def from_array(cls, arr) -> "PlannerState":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def matches(self, other: "PlannerState") -> bool:
        return (
            math.hypot(self.x - other.x, self.y - other.y) <= POSITION_TOL
            and abs(wrap_angle(self.theta - other.theta)) <= HEADING_TOL
        )


@dataclass(frozen=True)
class PlannerModel:
    """Constant-speed Dubins car with turn-rate interval [c_min, c_max]."""

    speed: float
    c_min: float
    c_max: float

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("planner speed must be positive")
        if not self.c_min < 0 < self.c_max:
            raise ValueError("turn-rate interval must bracket zero")

    @property
    def turn_radius(self) -> float:
        # min keeps both left and right turns inside the interval
        return self.speed / min(-self.c_min, self.c_max)

    @property
    def max_turn_rate(self) -> float:
        return max(-self.c_min, self.c_max)


@dataclass(frozen=True)
class TrackerState:
    x: float = 0.0
    vx: float = 0.0
    y: float = 0.0
    vy: float = 0.0
    z: float = 0.0
    vz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError("non-finite tracker state")

    @classmethod
    def from_array(cls, arr) -> "TrackerState":
        return cls(*(float(a) for a in arr))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.vx, self.y, self.vy, self.z, self.vz])


@dataclass(frozen=True)
class TrackerControl:
    u1: float  # pitch [rad]
    u2: float  # roll [rad]
    u3: float  # thrust acceleration [m/s^2]

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3])


@dataclass(frozen=True)
class TrackerModel:
    """Control box of the 6D model. The pitch interval must bracket pi/2
    (hover under ``vx_dot = g cos u1``) and the thrust interval must bracket g."""

    g: float
    u1_bounds: tuple[float, float]
    u2_bounds: tuple[float, float]
    u3_bounds: tuple[float, float]

    def __post_init__(self):
        for name in ("u1_bounds", "u2_bounds", "u3_bounds"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"empty interval {name}={lo, hi}")

    def contains(self, u: TrackerControl, tol: float = 1e-12) -> bool:
        return all(
            lo - tol <= val <= hi + tol
            for val, (lo, hi) in zip(
                (u.u1, u.u2, u.u3), (self.u1_bounds, self.u2_bounds, self.u3_bounds)
            )
        )

    @property
    def hover(self) -> TrackerControl:
        return TrackerControl(math.pi / 2, 0.0, self.g)

    def accel_box(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Planar acceleration box ([ax_lo, ax_hi], [ay_lo, ay_hi]) reachable by (u1, u2)."""
        ax = [self.g * math.cos(u) for u in _trig_candidates(self.u1_bounds, math.cos)]
        ay = [-self.g * math.sin(u) for u in _trig_candidates(self.u2_bounds, math.sin)]
        return (min(ax), max(ax)), (min(ay), max(ay))

    def planar_authority(self) -> float:
        """Radius of the largest origin-centred disc inside the acceleration box."""
        (axl, axh), (ayl, ayh) = self.accel_box()
        return max(0.0, min(axh, -axl, ayh, -ayl))

    def thrust_authority(self) -> float:
        lo, hi = self.u3_bounds
        return max(0.0, min(hi - self.g, self.g - lo))


def _trig_candidates(bounds: tuple[float, float], fn) -> list[float]:
    """Endpoints plus interior extrema of cos/sin on the interval."""
    lo, hi = bounds
    out = [lo, hi]
    offset = 0.0 if fn is math.cos else math.pi / 2
    k = math.ceil((lo - offset) / math.pi)
    while offset + k * math.pi <= hi:
        out.append(offset + k * math.pi)
        k += 1
    return out


def planner_derivative(p: PlannerState, c: float, v: float) -> np.ndarray:
    return np.array([v * math.cos(p.theta), v * math.sin(p.theta), c])


def tracker_derivative(s: TrackerState, u: TrackerControl, g: float) -> np.ndarray:
    """Right-hand side of the 6D model, in (x, vx, y, vy, z, vz) order."""
    return np.array(
        [
            s.vx,
            g * math.cos(u.u1),
            s.vy,
            -g * math.sin(u.u2),
            s.vz,
            u.u3 - g,
        ]
    )


def tracker_derivative_array(state: np.ndarray, u: np.ndarray, g: float) -> np.ndarray:
    """Batched tracker derivative; ``state`` is (..., 6) and ``u`` is (..., 3)."""
    out = np.empty_like(state)
    out[..., 0] = state[..., 1]
    out[..., 1] = g * np.cos(u[..., 0])
    out[..., 2] = state[..., 3]
    out[..., 3] = -g * np.sin(u[..., 1])
    out[..., 4] = state[..., 5]
    out[..., 5] = u[..., 2] - g
    return out


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate(states: np.ndarray, c, v: float, tau) -> np.ndarray:
    """Closed-form flow of the planning model under constant turn rate.

    ``states`` is (..., 3); ``c`` and ``tau`` broadcast against its leading shape.
    """
    states = np.asarray(states, dtype=float)
    c = np.asarray(c, dtype=float)
    tau = np.asarray(tau, dtype=float)
    x, y, th = states[..., 0], states[..., 1], states[..., 2]
    turning = np.abs(c) > 1e-12
    safe_c = np.where(turning, c, 1.0)
    th1 = th + c * tau
    arc_x = x + (v / safe_c) * (np.sin(th1) - np.sin(th))
    arc_y = y - (v / safe_c) * (np.cos(th1) - np.cos(th))
    line_x = x + v * tau * np.cos(th)
    line_y = y + v * tau * np.sin(th)
    out = np.empty(np.broadcast(x, c, tau).shape + (3,))
    out[..., 0] = np.where(turning, arc_x, line_x)
    out[..., 1] = np.where(turning, arc_y, line_y)
    out[..., 2] = wrap_angle(th1)
    return out


class TerminalKind(str, enum.Enum):
    GOAL = "GoalTerminal"
    HOME_CYCLE = "HomeCycle"


@dataclass(frozen=True)
class Leg:
    """A trajectory section ending at graph vertex ``vertex_id`` at sample ``end_index``."""

    end_index: int
    vertex_id: int


@dataclass
class Trajectory:
    """Timed planner reference.

    ``controls[k]`` is the turn rate held on ``[times[k], times[k+1])``; the
    last entry is unused. A ``HOME_CYCLE`` trajectory repeats the samples from
    ``cycle_start`` to the end forever; its last state equals the state at
    ``cycle_start``.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    speed: float
    terminal_kind: TerminalKind | None = None
    cycle_start: int | None = None
    legs: tuple[Leg, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 3)
        self.controls = np.asarray(self.controls, dtype=float)
        if not (len(self.times) == len(self.states) == len(self.controls)) or len(self.times) == 0:
            raise ValueError("trajectory arrays must be non-empty and aligned")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("non-finite trajectory state")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def start_time(self) -> float:
        return float(self.times[0])

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    @property
    def start(self) -> PlannerState:
        return PlannerState.from_array(self.states[0])

    @property
    def end(self) -> PlannerState:
        return PlannerState.from_array(self.states[-1])

    @property
    def max_spacing(self) -> float:
        return float(np.max(np.diff(self.times))) if len(self) > 1 else 0.0

    @property
    def cycle_period(self) -> float:
        if self.cycle_start is None:
            return 0.0
        return self.end_time - float(self.times[self.cycle_start])

    def _local_time(self, t: float) -> float:
        if t > self.end_time and self.cycle_start is not None and self.cycle_period > 0:
            t0 = float(self.times[self.cycle_start])
            t = t0 + math.fmod(t - t0, self.cycle_period)
        return t

    def state_at(self, t: float) -> PlannerState:
        """Exact reference state at time ``t`` (wrapping into the cycle if periodic)."""
        t = self._local_time(t)
        if t < self.start_time - 1e-12:
            raise ValueError(f"time {t} precedes trajectory start {self.start_time}")
        if t >= self.end_time:
            if t > self.end_time + 1e-9:
                raise ValueError(f"time {t} beyond trajectory end {self.end_time}")
            return self.end
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        st = propagate(self.states[k], self.controls[k], self.speed, t - self.times[k])
        return PlannerState.from_array(st)

    def control_at(self, t: float) -> float:
        t = self._local_time(t)
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self) - 1))
        if k == len(self) - 1 and self.cycle_start is not None:
            k = self.cycle_start
        return float(self.controls[k])

    def shifted(self, t0: float) -> "Trajectory":
        return Trajectory(
            self.times - self.times[0] + t0,
            self.states.copy(),
            self.controls.copy(),
            self.speed,
            self.terminal_kind,
            self.cycle_start,
            self.legs,
        )

    def slice(self, t_from: float, t_to: float | None = None) -> "Trajectory":
        """Sub-trajectory on ``[t_from, t_to]``, with exact end states (no cycle wrap)."""
        t_to = self.end_time if t_to is None else t_to
        if not self.start_time - 1e-12 <= t_from <= t_to <= self.end_time + 1e-12:
            raise ValueError("slice bounds outside trajectory")
        inner = (self.times > t_from + 1e-12) & (self.times < t_to - 1e-12)
        idx = np.nonzero(inner)[0]
        first = self.state_at(t_from).as_array()
        c_first = self.control_at(t_from) if t_from < self.end_time else 0.0
        times = [t_from, *self.times[idx]]
        states = [first, *self.states[idx]]
        controls = [c_first, *self.controls[idx]]
        if t_to - t_from > 1e-12:
            times.append(t_to)
            states.append(self.state_at(t_to).as_array())
            controls.append(0.0)
        return Trajectory(np.array(times), np.array(states), np.array(controls), self.speed)

    def is_periodic(self) -> bool:
        if self.cycle_start is None:
            return False
        a = PlannerState.from_array(self.states[self.cycle_start])
        return a.matches(self.end) and self.cycle_period > 0

    def polyline(self, stride: int = 1) -> list[list[float]]:
        idx = list(range(0, len(self), max(1, stride)))
        if idx[-1] != len(self) - 1:
            idx.append(len(self) - 1)
        return [[round(float(self.states[i, 0]), 4), round(float(self.states[i, 1]), 4)] for i in idx]


def concatenate(parts: Sequence[Trajectory], t0: float | None = None) -> Trajectory:
    """Join trajectories end to start; each part is re-timed to follow the previous.

    The junction sample keeps the state of the earlier part and takes the
    control of the later one. Consecutive parts must meet within the
    state-matching tolerance.
    """
    parts = [p for p in parts if p is not None]
    if not parts:
        raise ValueError("nothing to concatenate")
    t = parts[0].start_time if t0 is None else t0
    times: list[np.ndarray] = []
    states: list[np.ndarray] = []
    controls: list[np.ndarray] = []
    for part in parts:
        rel = part.times - part.times[0] + t
        if times:
            prev = PlannerState.from_array(states[-1][-1])
            if not prev.matches(part.start):
                raise ValueError(f"parts do not meet: {prev} then {part.start}")
            if len(part) == 1:
                continue
            controls[-1][-1] = part.controls[0]
            rel, st, ct = rel[1:], part.states[1:], part.controls[1:].copy()
        else:
            st, ct = part.states, part.controls.copy()
        times.append(rel)
        states.append(st)
        controls.append(ct)
        t = float(rel[-1])
    return Trajectory(np.concatenate(times), np.concatenate(states), np.concatenate(controls), parts[0].speed)


def integrate_planner(
    p0: PlannerState,
    control,
    dt: float,
    horizon: float,
    v: float,
    t0: float = 0.0,
) -> Trajectory:
    """Fixed-step RK4 integration of the planning model.

    ``control`` is a constant turn rate or a sequence of ``(duration, c)``
    pieces; the last piece is held past the end of the sequence.
    """
    vals = (dt, horizon, v, t0, p0.x, p0.y, p0.theta)
    if not all(math.isfinite(x) for x in vals):
        raise ValueError("non-finite integration input")
    if dt <= 0 or horizon < 0:
        raise ValueError("need dt > 0 and horizon >= 0")
    if isinstance(control, (int, float)):
        pieces = [(horizon, float(control))]
    else:
        pieces = [(float(d), float(c)) for d, c in control]
        if not pieces or not all(math.isfinite(d) and math.isfinite(c) for d, c in pieces):
            raise ValueError("invalid control pieces")

    # sample grid: regular steps plus every control switch
    switches = np.cumsum([d for d, _ in pieces])[:-1]
    n = int(math.ceil(horizon / dt - 1e-9))
    grid = np.linspace(0.0, horizon, n + 1) if n > 0 else np.array([0.0])
    rel = np.unique(np.concatenate([grid, switches[(switches > 0) & (switches < horizon)]]))
    bounds = np.concatenate([[0.0], np.cumsum([d for d, _ in pieces])])

    def c_of(t):
        k = int(np.searchsorted(bounds, t, side="right") - 1)
        return pieces[min(max(k, 0), len(pieces) - 1)][1]

    states = np.empty((len(rel), 3))
    controls = np.empty(len(rel))
    x = p0.as_array()
    states[0] = x
    for i in range(len(rel) - 1):
        c = c_of(rel[i])
        controls[i] = c
        h = rel[i + 1] - rel[i]

        def f(s, c=c):
            return np.array([v * math.cos(s[2]), v * math.sin(s[2]), c])

        x = rk4_step(f, x, h)
        x[2] = wrap_angle(x[2])
        states[i + 1] = x
    controls[-1] = c_of(rel[-1])
    return Trajectory(rel + t0, states, controls, v)
