import math
import struct

import numpy as np
import pytest

from safexplore.reachability import Axis, ValueGrid, params_hash
from safexplore.reachability.grid import MAGIC


def _grid(rng):
    axes = (Axis(0, 3, 5), Axis(-math.pi, math.pi, 6, periodic=True), Axis(-2, 2, 4), Axis(-2, 2, 3))
    return ValueGrid(axes, rng.normal(size=(5, 6, 4, 3)), 1.5e-9, {"k": "v"})


def test_axis_nodes():
    a = Axis(0.0, 2.0, 5)
    np.testing.assert_allclose(a.nodes(), [0, 0.5, 1, 1.5, 2])
    p = Axis(-math.pi, math.pi, 4, periodic=True)
    assert p.step == pytest.approx(math.pi / 2)
    assert p.nodes()[-1] < math.pi


def test_axis_validation():
    with pytest.raises(ValueError):
        Axis(0, 1, 1)
    with pytest.raises(ValueError):
        Axis(1, 1, 3)


def test_shape_checked(rng):
    with pytest.raises(ValueError):
        ValueGrid((Axis(0, 1, 3),), np.zeros(4))


def test_values_are_read_only(rng):
    g = _grid(rng)
    with pytest.raises(ValueError):
        g.values[0, 0, 0, 0] = 1.0


def test_save_load_round_trip(tmp_path, rng):
    g = _grid(rng)
    path = tmp_path / "a.vgrid"
    g.save(path)
    back = ValueGrid.load(path)
    assert back.axes == g.axes
    assert back.residual == g.residual
    assert back.meta == g.meta
    np.testing.assert_array_equal(back.values, g.values)


def test_header_layout(tmp_path, rng):
    g = _grid(rng)
    path = tmp_path / "a.vgrid"
    g.save(path)
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert struct.unpack_from("<q", raw, 8)[0] == 4
    lo, hi, count, periodic = struct.unpack_from("<ddqq", raw, 16 + 32)
    assert (lo, hi, count, periodic) == (-math.pi, math.pi, 6, 1)
    payload = np.frombuffer(raw[-g.values.size * 8 :], dtype="<f8")
    np.testing.assert_array_equal(payload, g.values.ravel())


def test_load_rejects_bad_files(tmp_path, rng):
    bad = tmp_path / "bad.vgrid"
    bad.write_bytes(b"NOTAGRID" + b"\0" * 32)
    with pytest.raises(ValueError):
        ValueGrid.load(bad)
    good = tmp_path / "good.vgrid"
    _grid(rng).save(good)
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ValueError):
        ValueGrid.load(good)


def test_interp_reproduces_nodes_and_linear_functions():
    axes = (Axis(0, 2, 5), Axis(-1, 1, 3), Axis(0, 1, 4), Axis(-3, 3, 7))
    mesh = np.meshgrid(*[a.nodes() for a in axes], indexing="ij")
    f = 1.0 + 2 * mesh[0] - mesh[1] + 0.5 * mesh[2] + 0.25 * mesh[3]
    g = ValueGrid(axes, f)
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    np.testing.assert_allclose(g.interp(pts), f.ravel(), atol=1e-12)
    rng = np.random.default_rng(0)
    q = rng.uniform([0, -1, 0, -3], [2, 1, 1, 3], (100, 4))
    expect = 1 + 2 * q[:, 0] - q[:, 1] + 0.5 * q[:, 2] + 0.25 * q[:, 3]
    val, grad = g.interp_grad(q)
    np.testing.assert_allclose(val, expect, atol=1e-12)
    np.testing.assert_allclose(grad, np.tile([2, -1, 0.5, 0.25], (100, 1)), atol=1e-10)


def test_interp_periodic_axis_wraps():
    ax = (Axis(0, 1, 2), Axis(-math.pi, math.pi, 8, periodic=True))
    vals = np.tile(np.cos(ax[1].nodes()), (2, 1))
    g = ValueGrid(ax, vals)
    a = g.interp([[0.5, 0.3]])
    b = g.interp([[0.5, 0.3 + 2 * math.pi]])
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_interp_clamps_outside_box():
    ax = (Axis(0, 1, 3), Axis(0, 1, 3))
    g = ValueGrid(ax, np.arange(9.0).reshape(3, 3))
    np.testing.assert_allclose(g.interp([[5.0, -5.0]]), g.interp([[1.0, 0.0]]))
    val, grad = g.interp_grad([[1.0, 1.0]])
    assert np.all(np.isfinite(grad))


def test_params_hash_is_order_independent():
    assert params_hash({"a": 1, "b": [1, 2]}) == params_hash({"b": [1, 2], "a": 1})
    assert params_hash({"a": 1}) != params_hash({"a": 2})
