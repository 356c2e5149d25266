import json
import math

import numpy as np
import pytest

from conftest import open_box, sensed_everywhere
from graphs import FP, PLANNER, abstract_graph, grown_graph, sparse_edges, stub
from oracles import dijkstra_all, enumerate_shortest, reverse_bfs
from safexplore.dynamics import PlannerState
from safexplore.meta_graph import (
    ReachGraph,
    inbound_consolidate,
    outbound_expand,
    path_cost,
    recompute_costs,
    sample_candidate,
    shortest_path,
    update_costs,
)
from safexplore.world import KnowledgeMap, RobustFootprint


def test_home_starts_in_both_sets():
    g = ReachGraph(PlannerState(1, 1, 0), PLANNER)
    v = g.vertices[g.home_id]
    assert v.in_backward_set and v.visited
    assert v.cost_from_home == 0 and v.cost_to_home == 0
    assert g.backward_ids == [g.home_id]


def test_expand_rejects_duplicates_and_unsafe():
    env = open_box()
    kmap = sensed_everywhere(env)
    g = ReachGraph(env.home, PLANNER)
    assert outbound_expand(g, PlannerState(4, 5, 0), kmap, FP)
    assert not outbound_expand(g, PlannerState(4, 5, 0), kmap, FP)
    assert not outbound_expand(g, PlannerState(9.9, 5, 0), kmap, FP)
    assert len(g) == 2
    assert g.vertices[1].cost_from_home == pytest.approx(2.0, abs=1e-9)
    assert not g.vertices[1].in_backward_set


def test_chain_promotes_every_ancestor():
    env = open_box()
    kmap = sensed_everywhere(env)
    g = ReachGraph(env.home, PLANNER)
    for x in (3.5, 5.0, 6.5):
        assert outbound_expand(g, PlannerState(x, 5, 0), kmap, FP, k=1)
    last = len(g) - 1
    # nothing but home is in G_B until the tip finds a way back
    assert g.backward_ids == [g.home_id]
    assert inbound_consolidate(g, last, kmap, FP)
    assert g.backward_ids == list(range(len(g)))
    assert math.isfinite(g.vertices[1].cost_to_home)


def test_goal_expansion_joins_backward_set():
    env = open_box()
    kmap = sensed_everywhere(env)
    g = ReachGraph(env.home, PLANNER)
    g.set_goal(env.goal)
    assert outbound_expand(g, PlannerState(5, 5, 0), kmap, FP)
    assert outbound_expand(g, env.goal, kmap, FP)
    assert g.goal_id == 2
    assert g.vertices[2].in_backward_set and g.vertices[1].in_backward_set
    assert g.vertices[0].cost_to_goal == pytest.approx(6.0, abs=1e-9)


def test_parallel_routes_pick_cheaper():
    rng = np.random.default_rng(0)
    g = abstract_graph(rng, 4, [(0, 1, 1.0), (1, 3, 2.0), (0, 2, 1.0), (2, 3, 4.0)])
    path = shortest_path(g, 0, 3)
    assert [e.to_id for e in path] == [1, 3]
    assert path_cost(path) == 3.0
    assert shortest_path(g, 3, 0) is None
    assert shortest_path(g, 2, 2) == []
    with pytest.raises(IndexError):
        shortest_path(g, 0, 9)


def test_shortest_path_matches_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(2, 51))
        edges = sparse_edges(rng, n, n // 5)
        g = abstract_graph(rng, n, edges)
        src, dst = (int(i) for i in rng.integers(0, n, 2))
        want = enumerate_shortest(n, edges, src, dst)
        path = shortest_path(g, src, dst)
        if math.isinf(want):
            assert path is None
            continue
        assert path_cost(path) == pytest.approx(want)
        assert path[0].from_id == src if path else src == dst
        assert all(a.to_id == b.from_id for a, b in zip(path, path[1:]))


def test_incremental_costs_match_recompute():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(5, 40))
        g = abstract_graph(rng, n, [])
        g.goal_id = n - 1
        g.vertices[n - 1].cost_to_goal = 0.0
        for u, v, c in sparse_edges(rng, n, 2 * n)[::-1]:
            edge = g._add_edge(u, v, stub(g.vertices[u].state, g.vertices[v].state, c), 0.0)
            update_costs(g, [edge])
            got = [(v.cost_from_home, v.cost_to_home, v.cost_to_goal) for v in g.vertices]
            np.testing.assert_allclose(got, recompute_costs(g))
        triples = [(e.from_id, e.to_id, e.cost) for e in g.edges]
        np.testing.assert_allclose([v.cost_from_home for v in g.vertices], dijkstra_all(n, triples, 0))
        np.testing.assert_allclose([v.cost_to_goal for v in g.vertices], dijkstra_all(n, triples, n - 1, reverse=True))


def test_backward_flags_match_reverse_bfs():
    rng = np.random.default_rng(11)
    for _ in range(50):
        g, kmap = grown_graph(rng)
        # consolidate until nothing changes
        changed = True
        while changed:
            before = len(g.promotions)
            for vid in range(len(g)):
                inbound_consolidate(g, vid, kmap, FP)
            changed = len(g.promotions) != before
        targets = [g.home_id] + ([g.goal_id] if g.goal_id is not None else [])
        want = reverse_bfs(len(g), [(e.from_id, e.to_id) for e in g.edges], targets)
        assert {v.id for v in g.vertices if v.in_backward_set} == want
        got = [(v.cost_from_home, v.cost_to_home, v.cost_to_goal) for v in g.vertices]
        np.testing.assert_allclose(got, recompute_costs(g))


def test_backward_set_is_closed_under_ancestors_during_growth():
    rng = np.random.default_rng(5)
    for _ in range(10):
        g, _ = grown_graph(rng, 40)
        for v in g.vertices:
            if v.in_backward_set:
                assert all(g.vertices[a].in_backward_set for a in g.ancestors(v.id))


def test_sample_acceptance_matches_eroded_area():
    rng = np.random.default_rng(1)
    kmap = KnowledgeMap((0, 0, 10, 10), np.array([[5.0, 5.0, 4.0]]))
    fp = RobustFootprint(0.5)
    n = 100_000
    hits = 0
    for _ in range(n):
        p = sample_candidate(kmap, fp, rng)
        if p is not None:
            hits += 1
            assert math.hypot(p.x - 5, p.y - 5) <= 3.5 + 1e-9
            assert -math.pi < p.theta <= math.pi
    expect = math.pi * 3.5**2 / 100.0
    assert abs(hits / n - expect) < 0.02 * expect


def test_vertices_fill_free_space_densely():
    env = open_box()
    kmap = sensed_everywhere(env)
    rng = np.random.default_rng(2)
    g = ReachGraph(env.home, PLANNER)
    probes = rng.uniform(1, 9, (400, 2))
    medians = []
    for target in (25, 50, 100, 200):
        while len(g) < target:
            p = sample_candidate(kmap, FP, rng)
            if p is not None:
                outbound_expand(g, p, kmap, FP)
        pts = np.array([[v.state.x, v.state.y] for v in g.vertices])
        d = np.hypot(*(probes[:, None, :] - pts[None]).transpose(2, 0, 1)).min(axis=1)
        medians.append(float(np.median(d)))
    assert all(b <= a for a, b in zip(medians, medians[1:]))
    assert medians[-1] < 0.5 * medians[0]


def test_nearest_tie_breaks_by_id():
    g = ReachGraph(PlannerState(0, 0, 0), PLANNER)
    g._add_vertex(PlannerState(1, 0, 0))
    g._add_vertex(PlannerState(-1, 0, 0))
    assert g.nearest(PlannerState(0, 0, 0), 3) == [0, 1, 2]
    assert g.nearest(PlannerState(0.9, 0, 0), 1) == [1]


def test_record_is_json_ready():
    env = open_box()
    kmap = sensed_everywhere(env)
    g = ReachGraph(env.home, PLANNER)
    outbound_expand(g, PlannerState(4, 5, 0), kmap, FP)
    rec = json.loads(json.dumps(g.to_record()))
    assert rec["vertices"][1]["cost_to_home"] is None
    assert rec["edges"][0]["from"] == 0 and rec["edges"][0]["to"] == 1
