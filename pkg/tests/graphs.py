"""Random graph builders shared by the graph tests and the acceptance suite."""


from conftest import open_box, sensed_everywhere
from safexplore.dynamics import PlannerModel, PlannerState, Trajectory
from safexplore.meta_graph import ReachGraph, inbound_consolidate, outbound_expand, sample_candidate
from safexplore.world import RobustFootprint

PLANNER = PlannerModel(1.0, -1.0, 1.0)
FP = RobustFootprint(0.4)


def stub(a: PlannerState, b: PlannerState, cost: float) -> Trajectory:
    return Trajectory([0.0, cost], [a.as_array(), b.as_array()], [0.0, 0.0], 1.0)


def abstract_graph(rng, n, edges):
    """Graph with random vertex states and stub edges of the given costs."""
    g = ReachGraph(PlannerState(0, 0, 0), PLANNER)
    for _ in range(n - 1):
        g._add_vertex(PlannerState(*rng.uniform(0, 10, 2), 0.0))
    for u, v, c in edges:
        g._add_edge(u, v, stub(g.vertices[u].state, g.vertices[v].state, c), 0.0)
    return g


def sparse_edges(rng, n, extra):
    """Random spanning out-tree from vertex 0 plus ``extra`` random edges."""
    edges = [(int(rng.integers(0, v)), v, float(rng.uniform(0.5, 5))) for v in range(1, n)]
    for _ in range(extra):
        u, v = (int(i) for i in rng.integers(0, n, 2))
        if u != v:
            edges.append((u, v, float(rng.uniform(0.5, 5))))
    return edges


def grown_graph(rng, steps=60):
    env = open_box(obstacles=[(*rng.uniform(3, 7, 2), rng.uniform(0.3, 1.0)) for _ in range(int(rng.integers(0, 4)))])
    kmap = sensed_everywhere(env)
    g = ReachGraph(env.home, PLANNER)
    g.set_goal(env.goal)
    for i in range(steps):
        p = env.goal if i == steps // 2 else sample_candidate(kmap, FP, rng)
        if p is not None:
            outbound_expand(g, p, kmap, FP)
        if len(g) > 1 and rng.random() < 0.5:
            inbound_consolidate(g, int(rng.integers(0, len(g))), kmap, FP)
    return g, kmap
