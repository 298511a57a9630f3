# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: segmented WA wirelength, adaptive bistratal
gradients, finite-difference depth gradients, density splatting and field
gathering. Semantics match ``d2dplace.kernels.pure``; loops are sequential
so results are deterministic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, exp, floor

cnp.import_array()


def wa_segments(u, key, Py_ssize_t nseg, double gamma):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef long long[::1] kk = np.ascontiguousarray(key, dtype=np.int64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] val = np.zeros(nseg)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(n)
    cdef double[::1] mx = np.full(nseg, -INFINITY)
    cdef double[::1] mn = np.full(nseg, INFINITY)
    cdef double[::1] sp = np.zeros(nseg)
    cdef double[::1] sm = np.zeros(nseg)
    cdef double[::1] spu = np.zeros(nseg)
    cdef double[::1] smu = np.zeros(nseg)
    cdef double[::1] smax = np.zeros(nseg)
    cdef double[::1] smin = np.zeros(nseg)
    cdef long long[::1] cnt = np.zeros(nseg, dtype=np.int64)
    cdef double[::1] vv = val
    cdef double[::1] gg = grad
    cdef Py_ssize_t i, s
    cdef double ep, em, x
    for i in range(n):
        s = kk[i]
        x = uu[i]
        cnt[s] += 1
        if x > mx[s]:
            mx[s] = x
        if x < mn[s]:
            mn[s] = x
    for i in range(n):
        s = kk[i]
        x = uu[i]
        ep = exp((x - mx[s]) / gamma)
        em = exp((mn[s] - x) / gamma)
        sp[s] += ep
        sm[s] += em
        spu[s] += ep * x
        smu[s] += em * x
    for s in range(nseg):
        if cnt[s] > 0:
            smax[s] = spu[s] / sp[s]
            smin[s] = smu[s] / sm[s]
            vv[s] = smax[s] - smin[s]
    for i in range(n):
        s = kk[i]
        x = uu[i]
        ep = exp((x - mx[s]) / gamma)
        em = exp((mn[s] - x) / gamma)
        gg[i] = ep * (gamma + x - smax[s]) / (gamma * sp[s]) - em * (
            gamma + smin[s] - x
        ) / (gamma * sm[s])
    return val, grad


def minmax_segments(u, key, Py_ssize_t nseg):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef long long[::1] kk = np.ascontiguousarray(key, dtype=np.int64)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mn = np.full(nseg, INFINITY)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mx = np.full(nseg, -INFINITY)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cnt = np.zeros(nseg, dtype=np.int64)
    cdef double[::1] mnv = mn
    cdef double[::1] mxv = mx
    cdef long long[::1] cv = cnt
    cdef Py_ssize_t i, s
    cdef double x
    for i in range(n):
        s = kk[i]
        x = uu[i]
        cv[s] += 1
        if x > mxv[s]:
            mxv[s] = x
        if x < mnv[s]:
            mnv[s] = x
    return mn, mx, cnt


def adaptive_planar(u, side, pin_net, Py_ssize_t nseg, double gamma):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef long long[::1] ss = np.ascontiguousarray(side, dtype=np.int64)
    cdef long long[::1] ee = np.ascontiguousarray(pin_net, dtype=np.int64)
    cdef Py_ssize_t n = uu.shape[0]
    key2 = np.empty(n, dtype=np.int64)
    cdef long long[::1] k2 = key2
    cdef Py_ssize_t i
    for i in range(n):
        k2[i] = ee[i] * 2 + ss[i]
    val_w, grad_w = wa_segments(u, pin_net, nseg, gamma)
    val_s, grad_s = wa_segments(u, key2, 2 * nseg, gamma)
    mn_w, mx_w, cnt_w = minmax_segments(u, pin_net, nseg)
    mn_s, mx_s, cnt_s = minmax_segments(u, key2, 2 * nseg)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bi = np.zeros(nseg)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] smooth = np.zeros(nseg)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(n)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] split = np.zeros(nseg, dtype=np.uint8)
    cdef double[::1] biv = bi
    cdef double[::1] smv = smooth
    cdef double[::1] gv = grad
    cdef unsigned char[::1] spl = split
    cdef double[::1] vw = val_w
    cdef double[::1] vs = val_s
    cdef double[::1] gw = grad_w
    cdef double[::1] gs = grad_s
    cdef double[::1] mnwv = mn_w
    cdef double[::1] mxwv = mx_w
    cdef double[::1] mnsv = mn_s
    cdef double[::1] mxsv = mx_s
    cdef long long[::1] cwv = cnt_w
    cdef long long[::1] csv = cnt_s
    cdef Py_ssize_t e
    cdef double pe, pp, pm, psum
    for e in range(nseg):
        pe = mxwv[e] - mnwv[e] if cwv[e] > 0 else 0.0
        pm = mxsv[2 * e] - mnsv[2 * e] if csv[2 * e] > 0 else 0.0
        pp = mxsv[2 * e + 1] - mnsv[2 * e + 1] if csv[2 * e + 1] > 0 else 0.0
        psum = pp + pm
        if psum > pe:
            spl[e] = 1
            biv[e] = psum
            smv[e] = vs[2 * e] + vs[2 * e + 1]
        else:
            biv[e] = pe
            smv[e] = vw[e]
    for i in range(n):
        gv[i] = gs[i] if spl[ee[i]] else gw[i]
    return bi, smooth, grad


cdef double _axis_eval(double[::1] ut, double[::1] ub, long long[::1] side,
                       long long[::1] pin_node, Py_ssize_t lo, Py_ssize_t hi,
                       long long node, int target, bint bistratal):
    """Axis wirelength of net [lo, hi) with `node` assigned to `target`."""
    cdef double wmn = INFINITY, wmx = -INFINITY
    cdef double tmn = INFINITY, tmx = -INFINITY
    cdef double bmn = INFINITY, bmx = -INFINITY
    cdef Py_ssize_t j
    cdef long long s
    cdef double x
    cdef long long tcnt = 0, bcnt = 0
    cdef double pe, pp, pm
    for j in range(lo, hi):
        if pin_node[j] == node:
            s = target
            x = ut[j] if target == 1 else ub[j]
        else:
            s = side[j]
            x = ut[j] if s == 1 else ub[j]
        if x > wmx:
            wmx = x
        if x < wmn:
            wmn = x
        if s == 1:
            tcnt += 1
            if x > tmx:
                tmx = x
            if x < tmn:
                tmn = x
        else:
            bcnt += 1
            if x > bmx:
                bmx = x
            if x < bmn:
                bmn = x
    pe = wmx - wmn
    if not bistratal:
        return pe
    pp = tmx - tmn if tcnt > 0 else 0.0
    pm = bmx - bmn if bcnt > 0 else 0.0
    if pp + pm > pe:
        return pp + pm
    return pe


def fda_depth(x_top, y_top, x_bot, y_bot, side, pin_node, pin_net, net_ptr,
              Py_ssize_t n_nodes, double z_max, net_has_multi,
              bint bistratal=True):
    cdef double[::1] xt = np.ascontiguousarray(x_top, dtype=np.float64)
    cdef double[::1] yt = np.ascontiguousarray(y_top, dtype=np.float64)
    cdef double[::1] xb = np.ascontiguousarray(x_bot, dtype=np.float64)
    cdef double[::1] yb = np.ascontiguousarray(y_bot, dtype=np.float64)
    cdef long long[::1] ss = np.ascontiguousarray(side, dtype=np.int64)
    cdef long long[::1] nodes = np.ascontiguousarray(pin_node, dtype=np.int64)
    cdef long long[::1] ptr = np.ascontiguousarray(net_ptr, dtype=np.int64)
    cdef Py_ssize_t nseg = ptr.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gz = np.zeros(n_nodes)
    cdef double[::1] gv = gz
    cdef Py_ssize_t e, j, k, lo, hi
    cdef long long node
    cdef bint seen
    cdef double w_top, w_bot
    for e in range(nseg):
        lo = ptr[e]
        hi = ptr[e + 1]
        for j in range(lo, hi):
            node = nodes[j]
            seen = False
            for k in range(lo, j):
                if nodes[k] == node:
                    seen = True
                    break
            if seen:
                continue
            w_top = _axis_eval(xt, xb, ss, nodes, lo, hi, node, 1, bistratal) \
                + _axis_eval(yt, yb, ss, nodes, lo, hi, node, 1, bistratal)
            w_bot = _axis_eval(xt, xb, ss, nodes, lo, hi, node, 0, bistratal) \
                + _axis_eval(yt, yb, ss, nodes, lo, hi, node, 0, bistratal)
            gv[node] += (4.0 / z_max) * (w_top - w_bot)
    return gz


def splat3d(cx, cy, cz, w, h, d, movable, Py_ssize_t nx, Py_ssize_t ny,
            Py_ssize_t nz, double bx, double by, double bz):
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] cyv = np.ascontiguousarray(cy, dtype=np.float64)
    cdef double[::1] czv = np.ascontiguousarray(cz, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef unsigned char[::1] mv = np.ascontiguousarray(movable, dtype=np.uint8)
    cdef Py_ssize_t n = cxv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] rho = np.zeros((nx, ny, nz))
    cdef cnp.ndarray[cnp.float64_t, ndim=3] rho_mov = np.zeros((nx, ny, nz))
    cdef double[:, :, ::1] rv = rho
    cdef double[:, :, ::1] rmv = rho_mov
    cdef Py_ssize_t i, ix, iy, iz, ix0, ix1, iy0, iy1, iz0, iz1
    cdef double ew, eh, ed, ratio, ox, oy, oz, x0, y0, z0, wgt
    for i in range(n):
        ew = wv[i] if wv[i] > bx else bx
        eh = hv[i] if hv[i] > by else by
        ed = dv[i] if dv[i] > bz else bz
        ratio = (wv[i] * hv[i] * dv[i]) / (ew * eh * ed)
        x0 = _recenter(cxv[i], wv[i], ew, nx * bx)
        y0 = _recenter(cyv[i], hv[i], eh, ny * by)
        z0 = _recenter(czv[i], dv[i], ed, nz * bz)
        ix0 = <Py_ssize_t>floor(x0 / bx)
        ix1 = <Py_ssize_t>floor((x0 + ew) / bx)
        iy0 = <Py_ssize_t>floor(y0 / by)
        iy1 = <Py_ssize_t>floor((y0 + eh) / by)
        iz0 = <Py_ssize_t>floor(z0 / bz)
        iz1 = <Py_ssize_t>floor((z0 + ed) / bz)
        if ix0 < 0:
            ix0 = 0
        if iy0 < 0:
            iy0 = 0
        if iz0 < 0:
            iz0 = 0
        if ix1 > nx - 1:
            ix1 = nx - 1
        if iy1 > ny - 1:
            iy1 = ny - 1
        if iz1 > nz - 1:
            iz1 = nz - 1
        for ix in range(ix0, ix1 + 1):
            ox = _overlap(x0, ew, ix * bx, bx)
            if ox <= 0:
                continue
            for iy in range(iy0, iy1 + 1):
                oy = _overlap(y0, eh, iy * by, by)
                if oy <= 0:
                    continue
                for iz in range(iz0, iz1 + 1):
                    oz = _overlap(z0, ed, iz * bz, bz)
                    if oz <= 0:
                        continue
                    wgt = ratio * ox * oy * oz
                    rv[ix, iy, iz] += wgt
                    if mv[i]:
                        rmv[ix, iy, iz] += wgt
    return rho, rho_mov


cdef inline double _overlap(double c, double e, double lo, double b):
    cdef double a = c if c > lo else lo
    cdef double hi = lo + b
    cdef double t = c + e
    cdef double bb = t if t < hi else hi
    return bb - a if bb > a else 0.0


cdef inline double _recenter(double c, double s, double e, double extent):
    """Center the bin-clamped extent on the node, kept inside the grid."""
    cdef double c0 = c - (e - s) / 2.0
    if c0 < 0.0:
        c0 = 0.0
    if c0 > extent - e:
        c0 = extent - e
    return c0


def gather3d(cx, cy, cz, w, h, d, ex, ey, ez, double bx, double by,
             double bz):
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] cyv = np.ascontiguousarray(cy, dtype=np.float64)
    cdef double[::1] czv = np.ascontiguousarray(cz, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[:, :, ::1] exv = np.ascontiguousarray(ex, dtype=np.float64)
    cdef double[:, :, ::1] eyv = np.ascontiguousarray(ey, dtype=np.float64)
    cdef double[:, :, ::1] ezv = np.ascontiguousarray(ez, dtype=np.float64)
    cdef Py_ssize_t nx = exv.shape[0]
    cdef Py_ssize_t ny = exv.shape[1]
    cdef Py_ssize_t nz = exv.shape[2]
    cdef Py_ssize_t n = cxv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fx = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fy = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fz = np.zeros(n)
    cdef double[::1] fxv = fx
    cdef double[::1] fyv = fy
    cdef double[::1] fzv = fz
    cdef Py_ssize_t i, ix, iy, iz, ix0, ix1, iy0, iy1, iz0, iz1
    cdef double ew, eh, ed, ox, oy, oz, x0, y0, z0, wgt, ax, ay, az, total
    for i in range(n):
        ew = wv[i] if wv[i] > bx else bx
        eh = hv[i] if hv[i] > by else by
        ed = dv[i] if dv[i] > bz else bz
        x0 = _recenter(cxv[i], wv[i], ew, nx * bx)
        y0 = _recenter(cyv[i], hv[i], eh, ny * by)
        z0 = _recenter(czv[i], dv[i], ed, nz * bz)
        ix0 = <Py_ssize_t>floor(x0 / bx)
        ix1 = <Py_ssize_t>floor((x0 + ew) / bx)
        iy0 = <Py_ssize_t>floor(y0 / by)
        iy1 = <Py_ssize_t>floor((y0 + eh) / by)
        iz0 = <Py_ssize_t>floor(z0 / bz)
        iz1 = <Py_ssize_t>floor((z0 + ed) / bz)
        if ix0 < 0:
            ix0 = 0
        if iy0 < 0:
            iy0 = 0
        if iz0 < 0:
            iz0 = 0
        if ix1 > nx - 1:
            ix1 = nx - 1
        if iy1 > ny - 1:
            iy1 = ny - 1
        if iz1 > nz - 1:
            iz1 = nz - 1
        ax = 0.0
        ay = 0.0
        az = 0.0
        for ix in range(ix0, ix1 + 1):
            ox = _overlap(x0, ew, ix * bx, bx)
            if ox <= 0:
                continue
            for iy in range(iy0, iy1 + 1):
                oy = _overlap(y0, eh, iy * by, by)
                if oy <= 0:
                    continue
                for iz in range(iz0, iz1 + 1):
                    oz = _overlap(z0, ed, iz * bz, bz)
                    if oz <= 0:
                        continue
                    wgt = ox * oy * oz
                    ax += wgt * exv[ix, iy, iz]
                    ay += wgt * eyv[ix, iy, iz]
                    az += wgt * ezv[ix, iy, iz]
        total = ew * eh * ed
        fxv[i] = ax / total
        fyv[i] = ay / total
        fzv[i] = az / total
    return fx, fy, fz
