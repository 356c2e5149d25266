"""Independent reference implementations used by the test suite.

None of these import the code under test beyond plain data types; each is
a slow but obviously-correct way to compute the same quantity.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque

import numpy as np
from scipy.optimize import least_squares

# ---------------------------------------------------------------------------
# Dubins shortest path by dense control search


def _advance(x, y, th, kind, s, R):
    """Pose after driving a segment of arc length ``s`` (arrays allowed)."""
    if kind == "S":
        return x + s * np.cos(th), y + s * np.sin(th), th
    sign = 1.0 if kind == "L" else -1.0
    cx = x - sign * R * np.sin(th)
    cy = y + sign * R * np.cos(th)
    th2 = th + sign * s / R
    return cx + sign * R * np.sin(th2), cy - sign * R * np.cos(th2), th2


def _wrap(a):
    return np.mod(a + np.pi, 2 * np.pi) - np.pi


def _residual(seq, lengths, start, goal, R):
    x, y, th = start
    for kind, s in zip(seq, lengths):
        x, y, th = _advance(x, y, th, kind, s, R)
    return np.array([x - goal[0], y - goal[1], R * _wrap(th - goal[2])])


def dubins_search_length(start, goal, R, n=120, polish=3):
    """Shortest three-piece bang/zero/bang path by exhaustive control search.

    Every sequence of three constant turn rates from {+1/R, 0, -1/R} is
    searched on an ``n x n`` lattice of the first two durations, with the
    third duration fixed by the heading error; the best lattice points are
    then refined with a local least-squares solve. Returns the shortest
    exact solution found.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    dist = math.hypot(goal[0] - start[0], goal[1] - start[1])
    s_max = dist + 2 * math.pi * R
    coarse = 4.0 * (2 * math.pi * R + s_max) / n
    best = math.inf
    for seq in itertools.product("LSR", repeat=3):
        g1 = np.linspace(0, 2 * math.pi * R if seq[0] != "S" else s_max, n)
        g2 = np.linspace(0, 2 * math.pi * R if seq[1] != "S" else s_max, n)
        S1, S2 = np.meshgrid(g1, g2, indexing="ij")
        x, y, th = _advance(start[0], start[1], start[2], seq[0], S1, R)
        x, y, th = _advance(x, y, th, seq[1], S2, R)
        if seq[2] == "S":
            S3 = np.maximum(0.0, (goal[0] - x) * np.cos(th) + (goal[1] - y) * np.sin(th))
        else:
            sign = 1.0 if seq[2] == "L" else -1.0
            S3 = R * np.mod(sign * (goal[2] - th), 2 * math.pi)
        S3 = np.broadcast_to(S3, S1.shape)
        xe, ye, the = _advance(x, y, th, seq[2], S3, R)
        err = np.hypot(xe - goal[0], ye - goal[1]) + R * np.abs(_wrap(the - goal[2]))
        if err.min() > coarse:  # no lattice point near a solution of this sequence
            continue
        for flat in np.argsort(err, axis=None)[:polish]:
            i, j = np.unravel_index(flat, err.shape)
            x0 = np.array([S1[i, j], S2[i, j], S3[i, j]])
            sol = least_squares(
                lambda L: _residual(seq, L, start, goal, R), x0, bounds=(0, np.inf), xtol=1e-14, ftol=1e-14, gtol=1e-14
            )
            if np.linalg.norm(sol.fun) < 1e-7:
                best = min(best, float(np.sum(sol.x)))
    return best


# ---------------------------------------------------------------------------
# graphs


def reverse_bfs(n, edges, targets):
    """Vertices with a directed path to any target (targets included)."""
    rev = [[] for _ in range(n)]
    for u, v in edges:
        rev[v].append(u)
    seen = set(targets)
    queue = deque(targets)
    while queue:
        u = queue.popleft()
        for w in rev[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def enumerate_shortest(n, edges, src, dst):
    """Minimum path cost by enumerating every simple path (edges: (u, v, cost))."""
    if src == dst:
        return 0.0
    out = [[] for _ in range(n)]
    for u, v, c in edges:
        out[u].append((v, c))
    best = math.inf
    stack = [(src, 0.0, frozenset([src]))]
    while stack:
        u, cost, seen = stack.pop()
        for v, c in out[u]:
            if v in seen:
                continue
            if v == dst:
                best = min(best, cost + c)
            else:
                stack.append((v, cost + c, seen | {v}))
    return best


def dijkstra_all(n, edges, src, reverse=False):
    out = [[] for _ in range(n)]
    for u, v, c in edges:
        if reverse:
            out[v].append((u, c))
        else:
            out[u].append((v, c))
    dist = [math.inf] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, c in out[u]:
            if d + c < dist[v]:
                dist[v] = d + c
                heapq.heappush(heap, (d + c, v))
    return dist


# ---------------------------------------------------------------------------
# geometry


def disc_samples(x, y, r, n_boundary=1024, n_interior=3072):
    """4096 points: evenly spaced on the boundary plus a sunflower interior."""
    ang = 2 * np.pi * np.arange(n_boundary) / n_boundary
    j = np.arange(n_interior) + 0.5
    rr = r * np.sqrt(j / n_interior)
    aa = j * math.pi * (3 - math.sqrt(5))
    return np.vstack([np.c_[x + r * np.cos(ang), y + r * np.sin(ang)], np.c_[x + rr * np.cos(aa), y + rr * np.sin(aa)]])


def points_free(P, bounds, disks, centers, radii):
    """Point-wise FREE test: inside bounds, inside a sensed disk, outside obstacles."""
    P = np.atleast_2d(P)
    xmin, ymin, xmax, ymax = bounds
    ok = (P[:, 0] >= xmin) & (P[:, 0] <= xmax) & (P[:, 1] >= ymin) & (P[:, 1] <= ymax)
    if len(disks):
        disks = np.asarray(disks)
        ok &= np.any(np.hypot(P[:, None, 0] - disks[None, :, 0], P[:, None, 1] - disks[None, :, 1]) <= disks[None, :, 2], axis=1)
    else:
        ok &= False
    if len(radii):
        ok &= np.all(np.hypot(P[:, None, 0] - centers[None, :, 0], P[:, None, 1] - centers[None, :, 1]) > radii[None, :], axis=1)
    return ok


# ---------------------------------------------------------------------------
# vertical braking game


def braking_value(z, vz, a):
    """Max |z| over time when the tracker brakes at full authority ``a``."""
    z = np.asarray(z, dtype=float)
    vz = np.asarray(vz, dtype=float)
    peak = z + vz * np.abs(vz) / (2 * a)
    return np.maximum(np.abs(z), np.abs(peak))
