"""Pure-Python/numpy implementations of the hot kernels.

These define the reference semantics; ``_core.pyx`` mirrors them in Cython.
Grid axes for the 4D relative value function are (d, psi, vT, vN) with psi
periodic.
"""

from __future__ import annotations

import math

import numpy as np


def _node_coords(lo, step, count):
    return [lo[a] + step[a] * np.arange(count[a]) for a in range(4)]


def hj_drifts(lo, step, count, prm):
    """Uncontrolled rates (d_dot, psi turn term) on the node grid."""
    d, psi, vt, vn = np.meshgrid(*_node_coords(lo, step, count), indexing="ij", sparse=True)
    cos_p, sin_p = np.cos(psi), np.sin(psi)
    d_dot = vt * cos_p + vn * sin_p
    with np.errstate(divide="ignore", invalid="ignore"):
        turn = np.where(d > 0, (vn * cos_p - vt * sin_p) / np.where(d > 0, d, 1.0), 0.0)
    return d_dot, turn


def hj_max_rate(lo, step, count, prm):
    """max over nodes of sum_a |f_a| / step_a; the upwind sweep is monotone for
    ``dt <= 1 / hj_max_rate``."""
    v, c_lo, c_hi, m = prm[:4]
    _, _, vt, vn = np.meshgrid(*_node_coords(lo, step, count), indexing="ij", sparse=True)
    d_dot, turn = hj_drifts(lo, step, count, prm)
    c_abs = max(abs(c_lo), abs(c_hi))
    total = (
        np.abs(d_dot) / step[0]
        + np.maximum(np.abs(turn - c_lo), np.abs(turn - c_hi)) / step[1]
        + (c_abs * np.abs(vn) + m) / step[2]
        + (c_abs * np.abs(v + vt) + m) / step[3]
    )
    return float(np.max(total))


def _pad(V, count):
    """Ghost layers along d: the origin reflection at d=0 (the node at
    distance step[0] and bearing psi+pi), linear extrapolation at d_max."""
    nd, npsi = count[0], count[1]
    shift = npsi / 2.0
    k0 = int(math.floor(shift))
    frac = shift - k0
    row1 = V[1]
    ghost_lo = (1 - frac) * np.roll(row1, -k0, axis=0) + frac * np.roll(row1, -(k0 + 1), axis=0)
    ghost_hi = 2 * V[nd - 1] - V[nd - 2]
    return np.concatenate([ghost_lo[None], V, ghost_hi[None]], axis=0)


def _up(b, pm, pp):
    """Upwind product b * p: forward difference for b > 0, backward otherwise."""
    return np.maximum(b, 0.0) * pp + np.minimum(b, 0.0) * pm


def velocity_term(b_t, b_n, m, pm_t, pp_t, pm_n, pp_n):
    """min over w in the disc of radius m about (b_t, b_n) of the upwinded w . p.

    This is the exact Godunov minimum for the velocity axes: the tracker's
    acceleration shifts the planner-induced drift anywhere in the disc. The
    minimum is attained at w = 0, at an end of an axis chord of the disc, or at
    the tangent point of a sign-consistent quadrant.
    """
    big = np.inf
    best = np.where(b_t * b_t + b_n * b_n <= m * m, 0.0, big)
    # chords along w_N = 0 and w_T = 0
    for b_on, b_off, pm, pp in ((b_t, b_n, pm_t, pp_t), (b_n, b_t, pm_n, pp_n)):
        half_sq = m * m - b_off * b_off
        ok = half_sq >= 0
        half = np.sqrt(np.where(ok, half_sq, 0.0))
        for w in (b_on - half, b_on + half):
            best = np.where(ok, np.minimum(best, _up(w, pm, pp)), best)
    # quadrant tangent points
    for q_t, s_t in ((pp_t, 1.0), (pm_t, -1.0)):
        for q_n, s_n in ((pp_n, 1.0), (pm_n, -1.0)):
            norm = np.hypot(q_t, q_n)
            safe = np.where(norm > 0, norm, 1.0)
            w_t = b_t - m * q_t / safe
            w_n = b_n - m * q_n / safe
            ok = (norm > 0) & (s_t * w_t >= 0) & (s_n * w_n >= 0)
            best = np.where(ok, np.minimum(best, q_t * b_t + q_n * b_n - m * norm), best)
    return best


def hj_sweep(V, out, lo, step, count, prm, dt, cache=None):
    """One monotone upwind step of the max-over-time distance game.

    For each planner turn rate in {c_lo, c_hi, 0 clipped to the interval} the
    tracker's best response is taken exactly (see :func:`velocity_term`); the
    planner keeps the worst. Writes the update into ``out`` and returns
    max |out - V|.
    """
    v, c_lo, c_hi, m = prm[:4]
    if cache is None:
        cache = hj_drifts(lo, step, count, prm)
    d_dot, turn = cache
    d, _, vt, vn = np.meshgrid(*_node_coords(lo, step, count), indexing="ij", sparse=True)

    Vd = _pad(V, count)
    pm_d = (V - Vd[:-2]) / step[0]
    pp_d = (Vd[2:] - V) / step[0]
    pm_p = (V - np.roll(V, 1, axis=1)) / step[1]
    pp_p = (np.roll(V, -1, axis=1) - V) / step[1]

    def nonperiodic(axis):
        n = count[axis]
        lo_g = 2 * np.take(V, [0], axis=axis) - np.take(V, [1], axis=axis)
        hi_g = 2 * np.take(V, [n - 1], axis=axis) - np.take(V, [n - 2], axis=axis)
        P = np.concatenate([lo_g, V, hi_g], axis=axis)
        sl_m = [slice(None)] * 4
        sl_p = [slice(None)] * 4
        sl_m[axis] = slice(0, n)
        sl_p[axis] = slice(2, n + 2)
        return (V - P[tuple(sl_m)]) / step[axis], (P[tuple(sl_p)] - V) / step[axis]

    pm_t, pp_t = nonperiodic(2)
    pm_n, pp_n = nonperiodic(3)

    planner = None
    for c in (c_lo, c_hi, min(max(0.0, c_lo), c_hi)):
        b_t = c * vn + 0 * V
        b_n = -c * (v + vt) + 0 * V
        term = _up(turn - c, pm_p, pp_p) + velocity_term(b_t, b_n, m, pm_t, pp_t, pm_n, pp_n)
        planner = term if planner is None else np.maximum(planner, term)

    new = V + dt * (_up(d_dot, pm_d, pp_d) + planner)
    np.maximum(new, np.broadcast_to(d, new.shape), out=new)
    new[0] = np.max(new[0], axis=0, keepdims=True)
    out[...] = new
    return float(np.max(np.abs(out - V)))


def _axis_locate(x, lo, step, n, periodic):
    if periodic:
        period = step * n
        u = np.mod(x - lo, period) / step
        i0 = np.floor(u).astype(np.int64)
        w = u - i0
        i0 = np.mod(i0, n)
        i1 = np.mod(i0 + 1, n)
    else:
        u = np.clip((x - lo) / step, 0.0, n - 1)
        i0 = np.minimum(np.floor(u).astype(np.int64), n - 2)
        w = u - i0
        i1 = i0 + 1
    return i0, i1, w


def interp(V, lo, step, count, periodic, pts):
    """Multilinear interpolation of an N-d grid at points ``pts`` (n, N), with clamping."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ndim = V.ndim
    locs = [_axis_locate(pts[:, a], lo[a], step[a], count[a], periodic[a]) for a in range(ndim)]
    out = np.zeros(len(pts))
    for corner in range(1 << ndim):
        idx = []
        wt = np.ones(len(pts))
        for a in range(ndim):
            i0, i1, w = locs[a]
            if corner >> a & 1:
                idx.append(i1)
                wt = wt * w
            else:
                idx.append(i0)
                wt = wt * (1 - w)
        out += wt * V[tuple(idx)]
    return out


def interp_grad(V, lo, step, count, periodic, pts):
    """Interpolated values and central-difference gradients (one-sided at faces)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ndim = V.ndim
    vals = interp(V, lo, step, count, periodic, pts)
    grads = np.empty((len(pts), ndim))
    for a in range(ndim):
        h = step[a]
        if periodic[a]:
            up = pts.copy()
            dn = pts.copy()
            up[:, a] += h
            dn[:, a] -= h
            grads[:, a] = (interp(V, lo, step, count, periodic, up) - interp(V, lo, step, count, periodic, dn)) / (2 * h)
            continue
        hi_edge = lo[a] + step[a] * (count[a] - 1)
        x = np.clip(pts[:, a], lo[a], hi_edge)
        xu = np.minimum(x + h, hi_edge)
        xd = np.maximum(x - h, lo[a])
        up = pts.copy()
        dn = pts.copy()
        up[:, a] = xu
        dn[:, a] = xd
        span = xu - xd
        diff = interp(V, lo, step, count, periodic, up) - interp(V, lo, step, count, periodic, dn)
        grads[:, a] = np.where(span > 0, diff / np.where(span > 0, span, 1.0), 0.0)
    return vals, grads


# ---------------------------------------------------------------------------
# exact disc coverage by a union of disks


_EPS = 1e-12


def _arc_covered(a, length, intervals):
    """Is the arc [a, a+length] covered by the union of closed arcs (l, r)?"""
    two_pi = 2 * math.pi
    segs = []
    for lo_, hi_ in intervals:
        span = hi_ - lo_
        if span >= two_pi:
            return True
        s = (lo_ - a) % two_pi
        for off in (s - two_pi, s):
            e = off + span
            if e <= 0 or off >= length:
                continue
            segs.append((max(off, 0.0), min(e, length)))
    if not segs:
        return length <= 0
    segs.sort()
    reach = 0.0
    for s, e in segs:
        if s > reach + _EPS:
            return False
        reach = max(reach, e)
        if reach >= length:
            return True
    return reach >= length


def _inside_interval(cx, cy, r, ox, oy, orad):
    """Angular interval of the circle (cx, cy, r) lying strictly inside disk (ox, oy, orad).

    Returns None when empty, (0, 2pi) when the whole circle is inside, else (l, r).
    The interval is shrunk by a small margin so borderline contacts count as uncovered.
    """
    dx, dy = ox - cx, oy - cy
    dist = math.hypot(dx, dy)
    if dist < _EPS:
        return (0.0, 2 * math.pi) if orad > r + _EPS else None
    kap = (r * r + dist * dist - orad * orad) / (2 * r * dist)
    if kap <= -1.0 + _EPS:
        return (0.0, 2 * math.pi) if dist + r < orad - _EPS else None
    if kap >= 1.0:
        return None
    half = math.acos(kap) - 1e-9
    if half <= 0:
        return None
    phi = math.atan2(dy, dx)
    return (phi - half, phi + half)


def disc_covered(cx, cy, rho, centers, radii):
    """Exact test that the closed disc (cx, cy, rho) lies in the union of disks.

    The disc is covered iff its centre is covered, its boundary circle is
    covered, and every arc of a disk boundary passing through its interior is
    covered by the other disks.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float)
    n = len(radii)
    if n == 0:
        return False
    rel = []
    for i in range(n):
        ox, oy, r_i = centers[i, 0], centers[i, 1], radii[i]
        dist = math.hypot(ox - cx, oy - cy)
        if dist + rho <= r_i:
            return True
        if dist < rho + r_i:
            rel.append((ox, oy, r_i, dist))
    if not any(dist <= r_i for _, _, r_i, dist in rel):
        return False
    # boundary of the footprint
    ivs = []
    for ox, oy, r_i, _ in rel:
        iv = _inside_interval(cx, cy, rho, ox, oy, r_i)
        if iv is not None:
            ivs.append(iv)
    if not _arc_covered(0.0, 2 * math.pi, ivs):
        return False
    # disk boundaries crossing the footprint interior
    for i, (ox, oy, r_i, dist) in enumerate(rel):
        if dist < _EPS:
            if r_i >= rho:
                continue
            arc = (0.0, 2 * math.pi)
        else:
            kap = (r_i * r_i + dist * dist - rho * rho) / (2 * r_i * dist)
            if kap >= 1.0:
                continue
            if kap <= -1.0:
                arc = (0.0, 2 * math.pi)
            else:
                half = math.acos(kap)
                phi = math.atan2(cy - oy, cx - ox)
                arc = (phi - half, phi + half)
        cover = []
        for j, (px, py, r_j, _) in enumerate(rel):
            if j == i:
                continue
            iv = _inside_interval(ox, oy, r_i, px, py, r_j)
            if iv is not None:
                cover.append(iv)
        if not _arc_covered(arc[0], arc[1] - arc[0], cover):
            return False
    return True
