import math

import numpy as np
import pytest

from conftest import default_tracker
from safexplore.dynamics import PlannerModel, PlannerState, TrackerControl, TrackerState
from safexplore.reachability import (
    RelativeState,
    default_axes,
    optimal_tracking_control,
    planar_control_batch,
    relative_derivative_kinematic,
    solve_value,
    vertical_control_batch,
)

PLANNER = PlannerModel(1.0, -1.0, 1.0)


@pytest.fixture(scope="module")
def small():
    return solve_value(default_axes(1.0, 3.0, 9), PLANNER, default_tracker())


def _hamiltonian_u_part(grid, rel, theta, u1, u2, g):
    """Control-dependent part of the Hamiltonian, gradient by plain central differences."""
    h = np.array([a.step for a in grid.axes])
    p = np.empty(4)
    for a in (2, 3):
        e = np.zeros(4)
        e[a] = h[a]
        lo, hi = max(rel[a] - h[a], grid.axes[a].lo), min(rel[a] + h[a], grid.axes[a].hi)
        up, dn = rel.copy(), rel.copy()
        up[a], dn[a] = hi, lo
        p[a] = (grid.interp(up[None])[0] - grid.interp(dn[None])[0]) / (hi - lo)
    ax, ay = g * np.cos(u1), -g * np.sin(u2)
    a_t = ax * math.cos(theta) + ay * math.sin(theta)
    a_n = -ax * math.sin(theta) + ay * math.cos(theta)
    return p[2] * a_t + p[3] * a_n


def test_controls_within_bounds(small, rng):
    tr = default_tracker()
    rel = np.c_[rng.uniform(0, 3, 200), rng.uniform(-3, 3, 200), rng.uniform(-2, 2, (200, 2))]
    u = planar_control_batch(small, rel, rng.uniform(-3, 3, 200), tr)
    assert np.all((u[:, 0] >= tr.u1_bounds[0]) & (u[:, 0] <= tr.u1_bounds[1]))
    assert np.all((u[:, 1] >= tr.u2_bounds[0]) & (u[:, 1] <= tr.u2_bounds[1]))


def test_control_minimises_hamiltonian_against_brute_force(small, rng):
    tr = default_tracker()
    U1, U2 = np.meshgrid(np.linspace(*tr.u1_bounds, 201), np.linspace(*tr.u2_bounds, 201), indexing="ij")
    idx = [tuple(rng.integers(0, n) for n in small.values.shape) for _ in range(40)]
    for node in idx:
        rel = np.array([a.nodes()[i] for a, i in zip(small.axes, node)])
        theta = rng.uniform(-math.pi, math.pi)
        u = optimal_tracking_control(small, RelativeState(*rel), theta, tr)
        got = _hamiltonian_u_part(small, rel, theta, u.u1, u.u2, tr.g)
        brute = _hamiltonian_u_part(small, rel, theta, U1, U2, tr.g).min()
        assert got <= brute + 1e-9


def test_origin_control_does_not_raise_value(tracking):
    tr = default_tracker()
    for theta in np.linspace(-3, 3, 7):
        r = RelativeState(0, 0, 0, 0)
        u = optimal_tracking_control(tracking.grid, r, theta, tr)
        rate = relative_derivative_kinematic(r, u, 0.0, theta, 1.0, tr.g)
        nxt = np.maximum(r.as_array() + 0.01 * rate, [0, -np.inf, -np.inf, -np.inf])
        assert tracking.grid.interp(nxt[None])[0] <= tracking.bound.level + tracking.bound.kappa


def test_boundary_states_are_clamped(small):
    tr = default_tracker()
    u = optimal_tracking_control(small, RelativeState(10.0, 0.0, 5.0, -5.0), 0.3, tr)
    assert tr.contains(u)


def test_vertical_control_brakes():
    tr = default_tracker()
    lo, hi = tr.u3_bounds
    assert vertical_control_batch(None, np.array([[0.3, 0.2]]), tr)[0] == pytest.approx(tr.g)


def test_vertical_control_from_value(tracking):
    tr = default_tracker()
    # above the reference and climbing: push down; below and sinking: push up
    up = vertical_control_batch(tracking.zgrid, np.array([[0.2, 0.5]]), tr)[0]
    down = vertical_control_batch(tracking.zgrid, np.array([[-0.2, -0.5]]), tr)[0]
    assert up == pytest.approx(tr.u3_bounds[0])
    assert down == pytest.approx(tr.u3_bounds[1])


def test_system_control_array_matches_scalar(tracking):
    s = TrackerState(0.05, 0.9, -0.03, 0.1, 1.02, -0.01)
    p = PlannerState(0, 0, 0.2)
    u = tracking.control(s, p, z_ref=1.0)
    arr = tracking.control_array(s.as_array(), p, z_ref=1.0)
    np.testing.assert_allclose(arr, u.as_array())
    assert isinstance(u, TrackerControl)
