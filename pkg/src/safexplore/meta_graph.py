"""Forward/backward reachability graph over planner states.

``G_F`` holds every vertex reachable from home along known-safe trajectories.
``G_B`` is the subset from which home or the goal can be reached again; a
vertex's ``in_backward_set`` flag marks membership. Both sets only grow.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dubins import dubins_connect
from .dynamics import HEADING_TOL, POSITION_TOL, PlannerModel, PlannerState, Trajectory, wrap_angle
from .world import KnowledgeMap, RobustFootprint, footprint_free, trajectory_safe

INF = math.inf


@dataclass
class Vertex:
    id: int
    state: PlannerState
    in_backward_set: bool = False
    visited: bool = False
    cost_from_home: float = INF
    cost_to_home: float = INF
    cost_to_goal: float = INF


@dataclass(frozen=True)
class Edge:
    id: int
    from_id: int
    to_id: int
    trajectory: Trajectory
    cost: float
    knowledge_stamp: float


@dataclass(frozen=True)
class GraphConfig:
    """Connection parameters.

    ``angle_weight`` scales heading differences in the nearest-neighbour
    metric; ``None`` uses the planner's turn radius.
    """

    k: int = 5
    angle_weight: float | None = None
    sample_dt: float = 0.1


class ReachGraph:
    """Single-writer store for ``G_F`` / ``G_B`` with incremental costs."""

    def __init__(self, home: PlannerState, planner: PlannerModel, config: GraphConfig = GraphConfig()):
        self.planner = planner
        self.config = config
        self.alpha = planner.turn_radius if config.angle_weight is None else config.angle_weight
        self.vertices: list[Vertex] = []
        self.edges: list[Edge] = []
        self.out_edges: list[list[int]] = []
        self.in_edges: list[list[int]] = []
        self.goal_id: int | None = None
        self.goal_state: PlannerState | None = None
        self.promotions: list[int] = []  # vertex ids in the order they joined G_B
        self._xyz = np.zeros((16, 3))
        self.home_id = self._add_vertex(home)
        home_v = self.vertices[self.home_id]
        home_v.cost_from_home = 0.0
        home_v.cost_to_home = 0.0
        home_v.visited = True
        self._promote(self.home_id)

    # -- structure -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.vertices)

    def _add_vertex(self, state: PlannerState) -> int:
        vid = len(self.vertices)
        self.vertices.append(Vertex(vid, state))
        self.out_edges.append([])
        self.in_edges.append([])
        if vid >= len(self._xyz):
            self._xyz = np.vstack([self._xyz, np.zeros_like(self._xyz)])
        self._xyz[vid] = (state.x, state.y, state.theta)
        return vid

    def _add_edge(self, u: int, v: int, traj: Trajectory, stamp: float) -> Edge:
        edge = Edge(len(self.edges), u, v, traj, float(traj.duration), float(stamp))
        self.edges.append(edge)
        self.out_edges[u].append(edge.id)
        self.in_edges[v].append(edge.id)
        return edge

    def has_edge(self, u: int, v: int) -> bool:
        return any(self.edges[e].to_id == v for e in self.out_edges[u])

    def _promote(self, vid: int) -> None:
        if not self.vertices[vid].in_backward_set:
            self.vertices[vid].in_backward_set = True
            self.promotions.append(vid)

    def set_goal(self, goal: PlannerState) -> None:
        self.goal_state = goal

    @property
    def backward_ids(self) -> list[int]:
        return sorted(self.promotions)

    def matching_vertex(self, state: PlannerState) -> int | None:
        n = len(self.vertices)
        pts = self._xyz[:n]
        close = np.hypot(pts[:, 0] - state.x, pts[:, 1] - state.y) <= POSITION_TOL
        close &= np.abs(wrap_angle(pts[:, 2] - state.theta)) <= HEADING_TOL
        hits = np.flatnonzero(close)
        return int(hits[0]) if len(hits) else None

    def nearest(self, state: PlannerState, k: int, candidates: list[int] | None = None) -> list[int]:
        """Up to ``k`` vertex ids nearest to ``state`` in the (x, y, alpha*theta) metric.

        Ties are broken by the smaller id.
        """
        n = len(self.vertices)
        ids = np.arange(n) if candidates is None else np.asarray(candidates, dtype=int)
        if len(ids) == 0:
            return []
        pts = self._xyz[ids]
        dth = wrap_angle(pts[:, 2] - state.theta)
        dist = (pts[:, 0] - state.x) ** 2 + (pts[:, 1] - state.y) ** 2 + (self.alpha * dth) ** 2
        order = np.lexsort((ids, dist))[:k]
        return [int(i) for i in ids[order]]

    def ancestors(self, vid: int) -> set[int]:
        """Vertices with a directed path to ``vid`` (excluding ``vid``)."""
        seen = {vid}
        queue = deque([vid])
        while queue:
            u = queue.popleft()
            for e in self.in_edges[u]:
                w = self.edges[e].from_id
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        seen.discard(vid)
        return seen

    def promote_with_ancestors(self, vid: int) -> None:
        """Add ``vid`` and every ancestor to ``G_B``.

        ``G_B`` is closed under ancestors, so the search stops at vertices
        already inside it.
        """
        if self.vertices[vid].in_backward_set:
            return
        found = {vid}
        queue = deque([vid])
        while queue:
            u = queue.popleft()
            for e in self.in_edges[u]:
                w = self.edges[e].from_id
                if w not in found and not self.vertices[w].in_backward_set:
                    found.add(w)
                    queue.append(w)
        self._promote(vid)
        for a in sorted(found - {vid}):
            self._promote(a)

    def connect(self, p_from: PlannerState, p_to: PlannerState, to_id: int | None = None) -> Trajectory | None:
        return dubins_connect(
            p_from, p_to, self.planner.turn_radius, self.planner.speed, self.config.sample_dt, 0.0, to_id
        )

    def to_record(self) -> dict:
        return {
            "vertices": [
                {
                    "id": v.id,
                    "state": [v.state.x, v.state.y, v.state.theta],
                    "in_backward_set": v.in_backward_set,
                    "visited": v.visited,
                    "cost_from_home": _json_cost(v.cost_from_home),
                    "cost_to_home": _json_cost(v.cost_to_home),
                    "cost_to_goal": _json_cost(v.cost_to_goal),
                }
                for v in self.vertices
            ],
            "edges": [
                {"id": e.id, "from": e.from_id, "to": e.to_id, "cost": e.cost, "polyline": e.trajectory.polyline(5)}
                for e in self.edges
            ],
            "home_id": self.home_id,
            "goal_id": self.goal_id,
        }


def _json_cost(c: float):
    return None if math.isinf(c) else c


# -- costs -------------------------------------------------------------------


def _relax_forward(g: ReachGraph, seeds: list[int]) -> None:
    heap = [(g.vertices[s].cost_from_home, s) for s in seeds]
    heapq.heapify(heap)
    while heap:
        c, u = heapq.heappop(heap)
        if c > g.vertices[u].cost_from_home:
            continue
        for e in g.out_edges[u]:
            edge = g.edges[e]
            nc = c + edge.cost
            if nc < g.vertices[edge.to_id].cost_from_home:
                g.vertices[edge.to_id].cost_from_home = nc
                heapq.heappush(heap, (nc, edge.to_id))


def _relax_backward(g: ReachGraph, seeds: list[int], attr: str) -> None:
    heap = [(getattr(g.vertices[s], attr), s) for s in seeds]
    heapq.heapify(heap)
    while heap:
        c, u = heapq.heappop(heap)
        if c > getattr(g.vertices[u], attr):
            continue
        for e in g.in_edges[u]:
            edge = g.edges[e]
            nc = c + edge.cost
            w = g.vertices[edge.from_id]
            if nc < getattr(w, attr):
                setattr(w, attr, nc)
                heapq.heappush(heap, (nc, edge.from_id))


def update_costs(g: ReachGraph, changed: list[Edge]) -> None:
    """Restore exact shortest-path costs after inserting ``changed`` edges.

    Edge insertions can only lower costs, so relaxing outward from each new
    edge's endpoints is enough.
    """
    fwd, back_home, back_goal = [], [], []
    for edge in changed:
        head, tail = g.vertices[edge.to_id], g.vertices[edge.from_id]
        if tail.cost_from_home + edge.cost < head.cost_from_home:
            head.cost_from_home = tail.cost_from_home + edge.cost
            fwd.append(head.id)
        if head.cost_to_home + edge.cost < tail.cost_to_home:
            tail.cost_to_home = head.cost_to_home + edge.cost
            back_home.append(tail.id)
        if head.cost_to_goal + edge.cost < tail.cost_to_goal:
            tail.cost_to_goal = head.cost_to_goal + edge.cost
            back_goal.append(tail.id)
    if fwd:
        _relax_forward(g, fwd)
    if back_home:
        _relax_backward(g, back_home, "cost_to_home")
    if back_goal:
        _relax_backward(g, back_goal, "cost_to_goal")


def recompute_costs(g: ReachGraph) -> list[tuple[float, float, float]]:
    """From-scratch costs (cost_from_home, cost_to_home, cost_to_goal) per vertex."""
    n = len(g)

    def dijkstra(src, forward):
        dist = [INF] * n
        if src is None:
            return dist
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            c, u = heapq.heappop(heap)
            if c > dist[u]:
                continue
            for e in g.out_edges[u] if forward else g.in_edges[u]:
                edge = g.edges[e]
                w = edge.to_id if forward else edge.from_id
                if c + edge.cost < dist[w]:
                    dist[w] = c + edge.cost
                    heapq.heappush(heap, (dist[w], w))
        return dist

    a = dijkstra(g.home_id, True)
    b = dijkstra(g.home_id, False)
    c = dijkstra(g.goal_id, False)
    return list(zip(a, b, c))


# -- operations ----------------------------------------------------------------


def sample_candidate(kmap: KnowledgeMap, fp: RobustFootprint, rng: np.random.Generator) -> PlannerState | None:
    """Uniform draw over the bounds; returned only if its footprint is FREE."""
    xmin, ymin, xmax, ymax = kmap.bounds
    x = rng.uniform(xmin, xmax)
    y = rng.uniform(ymin, ymax)
    theta = math.pi - rng.uniform(0.0, 2 * math.pi)
    p = PlannerState(x, y, theta)
    return p if footprint_free(p, fp, kmap) else None


def _mark_goal(g: ReachGraph, vid: int) -> list[Edge]:
    """The goal is a target of the backward set: it and its ancestors join G_B."""
    g.goal_id = vid
    g.vertices[vid].cost_to_goal = 0.0
    _relax_backward(g, [vid], "cost_to_goal")
    g.promote_with_ancestors(vid)
    return []


def outbound_expand(
    g: ReachGraph, p_new: PlannerState, kmap: KnowledgeMap, fp: RobustFootprint, k: int | None = None
) -> bool:
    """Connect ``p_new`` into ``G_F`` from one of its ``k`` nearest vertices.

    Candidates matching an existing vertex are rejected. Reaching the goal
    state also adds it to ``G_B``.
    """
    k = g.config.k if k is None else k
    if g.matching_vertex(p_new) is not None:
        return False
    is_goal = g.goal_state is not None and g.goal_id is None and p_new.matches(g.goal_state)
    vid = len(g)
    for parent in g.nearest(p_new, k):
        traj = g.connect(g.vertices[parent].state, p_new, vid)
        if traj is None or not trajectory_safe(traj, fp, kmap):
            continue
        g._add_vertex(p_new)
        edge = g._add_edge(parent, vid, traj, kmap.time)
        update_costs(g, [edge])
        if is_goal:
            _mark_goal(g, vid)
        return True
    return False


def inbound_consolidate(
    g: ReachGraph, v_id: int, kmap: KnowledgeMap, fp: RobustFootprint, k: int | None = None
) -> bool:
    """Try to return from ``v_id`` to one of its ``k`` nearest ``G_B`` vertices.

    On success ``v_id`` and all its ancestors join ``G_B``.
    """
    k = g.config.k if k is None else k
    v = g.vertices[v_id]
    if v.in_backward_set:
        return True
    targets = [t for t in g.nearest(v.state, k + 1, g.backward_ids) if t != v_id][:k]
    for t in targets:
        if g.has_edge(v_id, t):
            continue
        traj = g.connect(v.state, g.vertices[t].state, t)
        if traj is None or not trajectory_safe(traj, fp, kmap):
            continue
        edge = g._add_edge(v_id, t, traj, kmap.time)
        update_costs(g, [edge])
        g.promote_with_ancestors(v_id)
        return True
    return False


def shortest_path(g: ReachGraph, from_id: int, to_id: int) -> list[Edge] | None:
    """Minimum-duration directed edge path; ties resolved towards smaller vertex ids."""
    n = len(g)
    if not (0 <= from_id < n and 0 <= to_id < n):
        raise IndexError("vertex id out of range")
    if from_id == to_id:
        return []
    dist = [INF] * n
    prev: list[int | None] = [None] * n
    dist[from_id] = 0.0
    heap = [(0.0, from_id)]
    while heap:
        c, u = heapq.heappop(heap)
        if c > dist[u]:
            continue
        if u == to_id:
            break
        for e in sorted(g.out_edges[u], key=lambda e: g.edges[e].to_id):
            edge = g.edges[e]
            nc = c + edge.cost
            if nc < dist[edge.to_id]:
                dist[edge.to_id] = nc
                prev[edge.to_id] = e
                heapq.heappush(heap, (nc, edge.to_id))
    if math.isinf(dist[to_id]):
        return None
    path = []
    node = to_id
    while node != from_id:
        edge = g.edges[prev[node]]
        path.append(edge)
        node = edge.from_id
    return path[::-1]


def path_cost(path: list[Edge]) -> float:
    return float(sum(e.cost for e in path))
