"""Trajectory service: route through unvisited viable states, or to the goal.

Every response starts on the trajectory currently being executed, finishes
its current leg to a graph vertex, then follows stored ``G_B`` edges. Unless
the goal is reachable, it ends in a periodic cycle through home, so the
reference always has a safe continuation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Leg, PlannerState, TerminalKind, Trajectory, concatenate
from .meta_graph import Edge, ReachGraph, shortest_path
from .world import KnowledgeMap, RobustFootprint, trajectory_safe


class ViabilityError(RuntimeError):
    """The executing reference is not on a chain of viable vertices."""


@dataclass
class ExplorationPolicy:
    epsilon: float = 0.1
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.rng = np.random.default_rng(self.seed)


@dataclass(frozen=True)
class PlanResponse:
    t: float
    trajectory: Trajectory
    terminal_kind: TerminalKind
    target_id: int | None
    via_id: int
    fallback: bool = False

    def to_record(self) -> dict:
        return {
            "t": self.t,
            "terminal_kind": self.terminal_kind.value,
            "target_id": self.target_id,
            "via_id": self.via_id,
            "fallback": self.fallback,
            "cycle_start": self.trajectory.cycle_start,
            "polyline": self.trajectory.polyline(5),
        }


def select_unvisited(g: ReachGraph, goal: PlannerState, policy: ExplorationPolicy) -> int | None:
    """Greedy-to-goal choice among unvisited ``G_B`` vertices, uniform with probability epsilon."""
    ids = [v.id for v in g.vertices if v.in_backward_set and not v.visited]
    explore = policy.rng.random() < policy.epsilon
    if not ids:
        return None
    if explore:
        return ids[int(policy.rng.integers(len(ids)))]
    pts = np.array([[g.vertices[i].state.x, g.vertices[i].state.y] for i in ids])
    dist = np.hypot(pts[:, 0] - goal.x, pts[:, 1] - goal.y)
    order = np.lexsort((np.array(ids), dist))
    return ids[int(order[0])]


def mark_visited(g: ReachGraph, ids) -> None:
    for i in ids:
        g.vertices[int(i)].visited = True


def next_leg(traj: Trajectory, t: float) -> tuple[float, int]:
    """Local time and vertex id of the first leg end at or after ``t``."""
    local = traj._local_time(t)
    for leg in traj.legs:
        t_end = float(traj.times[leg.end_index])
        if t_end >= local - 1e-9:
            return max(t_end, local), leg.vertex_id
    raise ViabilityError(f"no leg of the executing trajectory ends after t={t:.3f}")


def _route(g: ReachGraph, a: int, b: int) -> list[Edge]:
    """Shortest path a -> b, through home when there is no direct route."""
    path = shortest_path(g, a, b)
    if path is None:
        first = shortest_path(g, a, g.home_id)
        second = shortest_path(g, g.home_id, b)
        if first is None or second is None:
            raise ViabilityError(f"no viable route from vertex {a} to vertex {b}")
        path = first + second
    return path


def assemble(prefix: Trajectory, prefix_vertex: int, paths: list[list[Edge]], t0: float) -> tuple[Trajectory, list[int]]:
    """Concatenate a prefix and edge paths, returning the trajectory and the
    sample index where each path starts."""
    parts = [prefix]
    legs = [Leg(len(prefix) - 1, prefix_vertex)]
    count = len(prefix)
    starts = []
    for path in paths:
        starts.append(count - 1)
        for edge in path:
            tr = edge.trajectory
            if len(tr) > 1:
                parts.append(tr)
                count += len(tr) - 1
            legs.append(Leg(count - 1, edge.to_id))
    traj = concatenate(parts, t0)
    traj.legs = tuple(legs)
    return traj, starts


def request_trajectory(
    g: ReachGraph,
    current: Trajectory,
    t: float,
    policy: ExplorationPolicy,
    kmap: KnowledgeMap,
    fp: RobustFootprint,
    check: bool = True,
) -> PlanResponse:
    """Plan from the reference state ``current.state_at(t)``.

    Raises
    ------
    ViabilityError
        If the vertex ending the current leg is not in ``G_B`` or the new
        trajectory fails the safety check.
    """
    t_leg, v_next = next_leg(current, t)
    if not g.vertices[v_next].in_backward_set:
        raise ViabilityError(f"current leg ends at vertex {v_next}, which is not in G_B")
    local = current._local_time(t)
    prefix = current.slice(local, t_leg).shifted(t)

    goal_id = g.goal_id
    if goal_id is not None and g.vertices[goal_id].in_backward_set:
        traj, _ = assemble(prefix, v_next, [_route(g, v_next, goal_id)], t)
        traj.terminal_kind = TerminalKind.GOAL
        response = PlanResponse(t, traj, TerminalKind.GOAL, goal_id, v_next)
    else:
        goal_state = g.goal_state if g.goal_state is not None else g.vertices[g.home_id].state
        target = select_unvisited(g, goal_state, policy)
        if target is None:
            kind = current.terminal_kind or TerminalKind.HOME_CYCLE
            return PlanResponse(t, current, kind, None, v_next, fallback=True)
        home = g.home_id
        out_leg = _route(g, v_next, target)
        back = _route(g, target, home)
        loop_out = _route(g, home, target)
        traj, starts = assemble(prefix, v_next, [out_leg, back, loop_out, back], t)
        traj.terminal_kind = TerminalKind.HOME_CYCLE
        traj.cycle_start = starts[2]
        if not traj.is_periodic():
            raise ViabilityError("assembled home cycle does not close")
        response = PlanResponse(t, traj, TerminalKind.HOME_CYCLE, target, v_next)

    if check and not trajectory_safe(response.trajectory, fp, kmap):
        raise ViabilityError(f"response at t={t:.3f} fails the safety check")
    return response
