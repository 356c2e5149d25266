# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; semantics match ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor, cos, sin, acos, atan2, fmod, M_PI, INFINITY

cnp.import_array()


cdef inline double _up(double b, double pm, double pp) nogil:
    return b * pp if b > 0 else b * pm


cdef inline double _velocity_term(double b_t, double b_n, double m, double pm_t, double pp_t,
                                  double pm_n, double pp_n) nogil:
    cdef double best = INFINITY, half_sq, half, val, q_t, q_n, s_t, s_n, norm, w_t, w_n
    cdef int a, b
    if b_t * b_t + b_n * b_n <= m * m:
        best = 0.0
    half_sq = m * m - b_n * b_n
    if half_sq >= 0:
        half = sqrt(half_sq)
        val = _up(b_t - half, pm_t, pp_t)
        if val < best:
            best = val
        val = _up(b_t + half, pm_t, pp_t)
        if val < best:
            best = val
    half_sq = m * m - b_t * b_t
    if half_sq >= 0:
        half = sqrt(half_sq)
        val = _up(b_n - half, pm_n, pp_n)
        if val < best:
            best = val
        val = _up(b_n + half, pm_n, pp_n)
        if val < best:
            best = val
    for a in range(2):
        q_t = pp_t if a == 0 else pm_t
        s_t = 1.0 if a == 0 else -1.0
        for b in range(2):
            q_n = pp_n if b == 0 else pm_n
            s_n = 1.0 if b == 0 else -1.0
            norm = sqrt(q_t * q_t + q_n * q_n)
            if norm > 0:
                w_t = b_t - m * q_t / norm
                w_n = b_n - m * q_n / norm
                if s_t * w_t >= 0 and s_n * w_n >= 0:
                    val = q_t * b_t + q_n * b_n - m * norm
                    if val < best:
                        best = val
    return best


def hj_sweep(const double[:, :, :, ::1] V, double[:, :, :, ::1] out, lo, step, count, prm, double dt, cache=None):
    cdef int nd = count[0], npsi = count[1], nt = count[2], nn = count[3]
    cdef double d0 = lo[0], p0 = lo[1], t0 = lo[2], n0 = lo[3]
    cdef double hd = step[0], hp = step[1], ht = step[2], hn = step[3]
    cdef double v = prm[0], c_lo = prm[1], c_hi = prm[2], m = prm[3]
    cdef double c_mid = min(max(0.0, c_lo), c_hi)
    cdef double shift = npsi / 2.0
    cdef int k0 = <int>floor(shift)
    cdef double frac = shift - k0
    cdef int i, j, k, l, jm, jp, ja, jb, ic
    cdef double d, vt, vn, cp, sp, Vc, g_lo, c
    cdef double pm_d, pp_d, pm_p, pp_p, pm_t, pp_t, pm_n, pp_n
    cdef double d_dot, turn, term, planner, new, resid = 0.0, mx, diff
    cdef double cs[3]
    cdef double[::1] cos_psi = np.cos(p0 + hp * np.arange(npsi))
    cdef double[::1] sin_psi = np.sin(p0 + hp * np.arange(npsi))
    cs[0] = c_lo
    cs[1] = c_hi
    cs[2] = c_mid

    with nogil:
        for i in range(nd):
            d = d0 + hd * i
            for j in range(npsi):
                cp = cos_psi[j]
                sp = sin_psi[j]
                jm = j - 1 if j > 0 else npsi - 1
                jp = j + 1 if j < npsi - 1 else 0
                ja = (j + k0) % npsi
                jb = (j + k0 + 1) % npsi
                for k in range(nt):
                    vt = t0 + ht * k
                    for l in range(nn):
                        vn = n0 + hn * l
                        Vc = V[i, j, k, l]
                        # d axis: reflection through the origin below, extrapolation above
                        if i == 0:
                            g_lo = (1.0 - frac) * V[1, ja, k, l] + frac * V[1, jb, k, l]
                            pm_d = (Vc - g_lo) / hd
                            pp_d = (V[1, j, k, l] - Vc) / hd
                        elif i == nd - 1:
                            pm_d = (Vc - V[i - 1, j, k, l]) / hd
                            pp_d = pm_d
                        else:
                            pm_d = (Vc - V[i - 1, j, k, l]) / hd
                            pp_d = (V[i + 1, j, k, l] - Vc) / hd
                        pm_p = (Vc - V[i, jm, k, l]) / hp
                        pp_p = (V[i, jp, k, l] - Vc) / hp
                        if k == 0:
                            pp_t = (V[i, j, 1, l] - Vc) / ht
                            pm_t = pp_t
                        elif k == nt - 1:
                            pm_t = (Vc - V[i, j, k - 1, l]) / ht
                            pp_t = pm_t
                        else:
                            pm_t = (Vc - V[i, j, k - 1, l]) / ht
                            pp_t = (V[i, j, k + 1, l] - Vc) / ht
                        if l == 0:
                            pp_n = (V[i, j, k, 1] - Vc) / hn
                            pm_n = pp_n
                        elif l == nn - 1:
                            pm_n = (Vc - V[i, j, k, l - 1]) / hn
                            pp_n = pm_n
                        else:
                            pm_n = (Vc - V[i, j, k, l - 1]) / hn
                            pp_n = (V[i, j, k, l + 1] - Vc) / hn

                        d_dot = vt * cp + vn * sp
                        turn = (vn * cp - vt * sp) / d if d > 0 else 0.0
                        planner = -INFINITY
                        for ic in range(3):
                            c = cs[ic]
                            term = _up(turn - c, pm_p, pp_p) + _velocity_term(
                                c * vn, -c * (v + vt), m, pm_t, pp_t, pm_n, pp_n)
                            if term > planner:
                                planner = term
                        new = Vc + dt * (_up(d_dot, pm_d, pp_d) + planner)
                        out[i, j, k, l] = new if new > d else d

        # the d = 0 row is a single point: keep the worst value over psi
        for k in range(nt):
            for l in range(nn):
                mx = out[0, 0, k, l]
                for j in range(1, npsi):
                    if out[0, j, k, l] > mx:
                        mx = out[0, j, k, l]
                for j in range(npsi):
                    out[0, j, k, l] = mx

        for i in range(nd):
            for j in range(npsi):
                for k in range(nt):
                    for l in range(nn):
                        diff = fabs(out[i, j, k, l] - V[i, j, k, l])
                        if diff > resid:
                            resid = diff
    return resid


cdef inline void _locate(double x, double lo, double h, int n, bint periodic, int* i0, int* i1, double* w) noexcept nogil:
    cdef double u, period
    cdef int a
    if periodic:
        period = h * n
        u = fmod(x - lo, period)
        if u < 0:
            u += period
        u /= h
        a = <int>floor(u)
        w[0] = u - a
        a = a % n
        i0[0] = a
        i1[0] = (a + 1) % n
    else:
        u = (x - lo) / h
        if u < 0:
            u = 0
        if u > n - 1:
            u = n - 1
        a = <int>floor(u)
        if a > n - 2:
            a = n - 2
        w[0] = u - a
        i0[0] = a
        i1[0] = a + 1


cdef double _interp4(const double[:, :, :, ::1] V, double* lo, double* h, int* n, int* per, double* x) noexcept nogil:
    cdef int i0[4]
    cdef int i1[4]
    cdef double w[4]
    cdef int a, corner
    cdef double acc = 0.0, wt
    cdef int idx[4]
    for a in range(4):
        _locate(x[a], lo[a], h[a], n[a], per[a], &i0[a], &i1[a], &w[a])
    for corner in range(16):
        wt = 1.0
        for a in range(4):
            if (corner >> a) & 1:
                idx[a] = i1[a]
                wt *= w[a]
            else:
                idx[a] = i0[a]
                wt *= 1.0 - w[a]
        if wt != 0.0:
            acc += wt * V[idx[0], idx[1], idx[2], idx[3]]
    return acc


def interp_grad4(const double[:, :, :, ::1] V, lo_, step_, count_, periodic_, pts_):
    cdef double[:, ::1] pts = np.ascontiguousarray(np.atleast_2d(pts_), dtype=np.float64)
    cdef Py_ssize_t npts = pts.shape[0], p
    vals_arr = np.empty(npts)
    grads_arr = np.empty((npts, 4))
    cdef double[::1] vals = vals_arr
    cdef double[:, ::1] grads = grads_arr
    cdef double lo[4]
    cdef double h[4]
    cdef int n[4]
    cdef int per[4]
    cdef double x[4]
    cdef double y[4]
    cdef int a, b
    cdef double hi_edge, xu, xd, fu, fd
    for a in range(4):
        lo[a] = lo_[a]
        h[a] = step_[a]
        n[a] = count_[a]
        per[a] = 1 if periodic_[a] else 0
    with nogil:
        for p in range(npts):
            for a in range(4):
                x[a] = pts[p, a]
            vals[p] = _interp4(V, lo, h, n, per, x)
            for a in range(4):
                for b in range(4):
                    y[b] = x[b]
                if per[a]:
                    y[a] = x[a] + h[a]
                    fu = _interp4(V, lo, h, n, per, y)
                    y[a] = x[a] - h[a]
                    fd = _interp4(V, lo, h, n, per, y)
                    grads[p, a] = (fu - fd) / (2.0 * h[a])
                else:
                    hi_edge = lo[a] + h[a] * (n[a] - 1)
                    xu = x[a]
                    if xu < lo[a]:
                        xu = lo[a]
                    if xu > hi_edge:
                        xu = hi_edge
                    xd = xu - h[a]
                    xu = xu + h[a]
                    if xu > hi_edge:
                        xu = hi_edge
                    if xd < lo[a]:
                        xd = lo[a]
                    y[a] = xu
                    fu = _interp4(V, lo, h, n, per, y)
                    y[a] = xd
                    fd = _interp4(V, lo, h, n, per, y)
                    grads[p, a] = (fu - fd) / (xu - xd) if xu > xd else 0.0
    return vals_arr, grads_arr


cdef double _interp2(const double[:, ::1] V, double* lo, double* h, int* n, int* per, double* x) noexcept nogil:
    cdef int i0[2]
    cdef int i1[2]
    cdef double w[2]
    cdef int a, corner
    cdef double acc = 0.0, wt
    cdef int idx[2]
    for a in range(2):
        _locate(x[a], lo[a], h[a], n[a], per[a], &i0[a], &i1[a], &w[a])
    for corner in range(4):
        wt = 1.0
        for a in range(2):
            if (corner >> a) & 1:
                idx[a] = i1[a]
                wt *= w[a]
            else:
                idx[a] = i0[a]
                wt *= 1.0 - w[a]
        if wt != 0.0:
            acc += wt * V[idx[0], idx[1]]
    return acc


def interp_grad2(const double[:, ::1] V, lo_, step_, count_, periodic_, pts_):
    cdef double[:, ::1] pts = np.ascontiguousarray(np.atleast_2d(pts_), dtype=np.float64)
    cdef Py_ssize_t npts = pts.shape[0], p
    vals_arr = np.empty(npts)
    grads_arr = np.empty((npts, 2))
    cdef double[::1] vals = vals_arr
    cdef double[:, ::1] grads = grads_arr
    cdef double lo[2]
    cdef double h[2]
    cdef int n[2]
    cdef int per[2]
    cdef double x[2]
    cdef double y[2]
    cdef int a, b
    cdef double hi_edge, xu, xd, fu, fd
    for a in range(2):
        lo[a] = lo_[a]
        h[a] = step_[a]
        n[a] = count_[a]
        per[a] = 1 if periodic_[a] else 0
    with nogil:
        for p in range(npts):
            for a in range(2):
                x[a] = pts[p, a]
            vals[p] = _interp2(V, lo, h, n, per, x)
            for a in range(2):
                for b in range(2):
                    y[b] = x[b]
                if per[a]:
                    y[a] = x[a] + h[a]
                    fu = _interp2(V, lo, h, n, per, y)
                    y[a] = x[a] - h[a]
                    fd = _interp2(V, lo, h, n, per, y)
                    grads[p, a] = (fu - fd) / (2.0 * h[a])
                else:
                    hi_edge = lo[a] + h[a] * (n[a] - 1)
                    xu = x[a]
                    if xu < lo[a]:
                        xu = lo[a]
                    if xu > hi_edge:
                        xu = hi_edge
                    xd = xu - h[a]
                    xu = xu + h[a]
                    if xu > hi_edge:
                        xu = hi_edge
                    if xd < lo[a]:
                        xd = lo[a]
                    y[a] = xu
                    fu = _interp2(V, lo, h, n, per, y)
                    y[a] = xd
                    fd = _interp2(V, lo, h, n, per, y)
                    grads[p, a] = (fu - fd) / (xu - xd) if xu > xd else 0.0
    return vals_arr, grads_arr


# ---------------------------------------------------------------------------
# exact disc coverage

cdef double _EPS = 1e-12


cdef bint _inside_interval(double cx, double cy, double r, double ox, double oy, double orad,
                           double* l, double* h) nogil:
    cdef double dx = ox - cx, dy = oy - cy
    cdef double dist = sqrt(dx * dx + dy * dy)
    cdef double kap, half, phi
    if dist < _EPS:
        if orad > r + _EPS:
            l[0] = 0.0
            h[0] = 2 * M_PI
            return True
        return False
    kap = (r * r + dist * dist - orad * orad) / (2 * r * dist)
    if kap <= -1.0 + _EPS:
        if dist + r < orad - _EPS:
            l[0] = 0.0
            h[0] = 2 * M_PI
            return True
        return False
    if kap >= 1.0:
        return False
    half = acos(kap) - 1e-9
    if half <= 0:
        return False
    phi = atan2(dy, dx)
    l[0] = phi - half
    h[0] = phi + half
    return True


cdef bint _arc_covered(double a, double length, double[:, ::1] ivs, int nivs, double[:, ::1] segs):
    cdef double two_pi = 2 * M_PI
    cdef int nseg = 0, q, t
    cdef double span, s, off, e, reach
    for q in range(nivs):
        span = ivs[q, 1] - ivs[q, 0]
        if span >= two_pi:
            return True
        s = fmod(ivs[q, 0] - a, two_pi)
        if s < 0:
            s += two_pi
        for t in range(2):
            off = s - two_pi if t == 0 else s
            e = off + span
            if e <= 0 or off >= length:
                continue
            segs[nseg, 0] = off if off > 0 else 0.0
            segs[nseg, 1] = e if e < length else length
            nseg += 1
    if nseg == 0:
        return length <= 0
    order = np.argsort(np.asarray(segs[:nseg, 0]), kind="stable")
    reach = 0.0
    for q in order:
        if segs[q, 0] > reach + _EPS:
            return False
        if segs[q, 1] > reach:
            reach = segs[q, 1]
        if reach >= length:
            return True
    return reach >= length


def disc_covered(double cx, double cy, double rho, centers_, radii_):
    cdef double[:, ::1] centers = np.ascontiguousarray(np.asarray(centers_, dtype=np.float64).reshape(-1, 2))
    cdef double[::1] radii = np.ascontiguousarray(radii_, dtype=np.float64)
    cdef int n = radii.shape[0]
    if n == 0:
        return False
    rel_arr = np.empty((n, 4))
    cdef double[:, ::1] rel = rel_arr
    cdef int nrel = 0, i, j, nivs
    cdef double ox, oy, ri, dist, kap, half, phi, a0, a1, l, h
    cdef bint center_in = False
    for i in range(n):
        ox = centers[i, 0]
        oy = centers[i, 1]
        ri = radii[i]
        dist = sqrt((ox - cx) * (ox - cx) + (oy - cy) * (oy - cy))
        if dist + rho <= ri:
            return True
        if dist < rho + ri:
            rel[nrel, 0] = ox
            rel[nrel, 1] = oy
            rel[nrel, 2] = ri
            rel[nrel, 3] = dist
            nrel += 1
            if dist <= ri:
                center_in = True
    if not center_in:
        return False
    ivs_arr = np.empty((nrel + 1, 2))
    segs_arr = np.empty((2 * nrel + 2, 2))
    cdef double[:, ::1] ivs = ivs_arr
    cdef double[:, ::1] segs = segs_arr
    nivs = 0
    for i in range(nrel):
        if _inside_interval(cx, cy, rho, rel[i, 0], rel[i, 1], rel[i, 2], &l, &h):
            ivs[nivs, 0] = l
            ivs[nivs, 1] = h
            nivs += 1
    if not _arc_covered(0.0, 2 * M_PI, ivs, nivs, segs):
        return False
    for i in range(nrel):
        ox = rel[i, 0]
        oy = rel[i, 1]
        ri = rel[i, 2]
        dist = rel[i, 3]
        if dist < _EPS:
            if ri >= rho:
                continue
            a0 = 0.0
            a1 = 2 * M_PI
        else:
            kap = (ri * ri + dist * dist - rho * rho) / (2 * ri * dist)
            if kap >= 1.0:
                continue
            if kap <= -1.0:
                a0 = 0.0
                a1 = 2 * M_PI
            else:
                half = acos(kap)
                phi = atan2(cy - oy, cx - ox)
                a0 = phi - half
                a1 = phi + half
        nivs = 0
        for j in range(nrel):
            if j == i:
                continue
            if _inside_interval(ox, oy, ri, rel[j, 0], rel[j, 1], rel[j, 2], &l, &h):
                ivs[nivs, 0] = l
                ivs[nivs, 1] = h
                nivs += 1
        if not _arc_covered(a0, a1 - a0, ivs, nivs, segs):
            return False
    return True
