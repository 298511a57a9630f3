"""NumPy fallback for the hot placement kernels.

Mirrors the compiled module `_core`: flat CSR net arrays in, per-pin /
per-net / per-node arrays out. All reductions go through bincount /
ufunc.at / lexsort, so results are deterministic for a fixed input.

Conventions: `key` arrays assign each pin to a segment; segments may be
empty. Boxes of empty segments read as (+inf, -inf) and are guarded by
counts before any subtraction.
"""

from __future__ import annotations

import numpy as np


def wa_segments(u, key, nseg, gamma):
    """Weighted-average smooth peak-to-peak per segment.

    Returns (value per segment, gradient per element). Exponents are
    shifted by the segment max/min before exponentiation so the result is
    translation invariant. Empty segments yield value 0; singleton
    segments yield value 0 and gradient 0.
    """
    u = np.asarray(u, dtype=np.float64)
    cnt = np.bincount(key, minlength=nseg)
    mx = np.full(nseg, -np.inf)
    np.maximum.at(mx, key, u)
    mn = np.full(nseg, np.inf)
    np.minimum.at(mn, key, u)
    ep = np.exp((u - mx[key]) / gamma)
    em = np.exp((mn[key] - u) / gamma)
    sp = np.bincount(key, weights=ep, minlength=nseg)
    sm = np.bincount(key, weights=em, minlength=nseg)
    spu = np.bincount(key, weights=ep * u, minlength=nseg)
    smu = np.bincount(key, weights=em * u, minlength=nseg)
    ok = cnt > 0
    den_p = np.where(ok, sp, 1.0)
    den_m = np.where(ok, sm, 1.0)
    smax = spu / den_p
    smin = smu / den_m
    val = np.where(ok, smax - smin, 0.0)
    grad = ep * (gamma + u - smax[key]) / (gamma * sp[key]) - em * (
        gamma + smin[key] - u
    ) / (gamma * sm[key])
    return val, grad


def minmax_segments(u, key, nseg):
    """(min, max, count) per segment; empty segments read (+inf, -inf, 0)."""
    u = np.asarray(u, dtype=np.float64)
    cnt = np.bincount(key, minlength=nseg)
    mx = np.full(nseg, -np.inf)
    np.maximum.at(mx, key, u)
    mn = np.full(nseg, np.inf)
    np.minimum.at(mn, key, u)
    return mn, mx, cnt


def _top2_segments(u, key, nseg):
    """Two smallest and two largest values per segment.

    The second extreme is the extreme after deleting one instance of the
    first, so duplicated extremes survive deletion. Missing entries read
    as +/-inf.
    """
    order = np.lexsort((u, key))
    us = u[order]
    cnt = np.bincount(key, minlength=nseg)
    ends = np.cumsum(cnt)
    starts = ends - cnt
    min1 = np.full(nseg, np.inf)
    min2 = np.full(nseg, np.inf)
    max1 = np.full(nseg, -np.inf)
    max2 = np.full(nseg, -np.inf)
    h1 = cnt >= 1
    h2 = cnt >= 2
    min1[h1] = us[starts[h1]]
    max1[h1] = us[ends[h1] - 1]
    min2[h2] = us[starts[h2] + 1]
    max2[h2] = us[ends[h2] - 2]
    return min1, min2, max1, max2, cnt


def adaptive_planar(u, side, pin_net, nseg, gamma):
    """One axis of the bistratal objective with branch-selected WA gradients.

    Per net: value = max(p_e, p_top + p_bottom); if the partial boxes
    overlap (strict p_top + p_bottom > p_e) the gradient of each pin is
    the WA gradient within its own partial net, otherwise the whole-net
    WA gradient. Ties use the whole-net branch.

    Returns (bistratal value per net, smoothed value of the active branch
    per net, gradient per pin).
    """
    u = np.asarray(u, dtype=np.float64)
    side = np.asarray(side)
    val_w, grad_w = wa_segments(u, pin_net, nseg, gamma)
    key2 = pin_net * 2 + side
    val_s, grad_s = wa_segments(u, key2, 2 * nseg, gamma)
    mn_w, mx_w, cnt_w = minmax_segments(u, pin_net, nseg)
    mn_s, mx_s, cnt_s = minmax_segments(u, key2, 2 * nseg)
    pe = np.where(cnt_w > 0, mx_w - mn_w, 0.0)
    bot = np.arange(nseg) * 2
    top = bot + 1
    pm = np.where(cnt_s[bot] > 0, mx_s[bot] - mn_s[bot], 0.0)
    pp = np.where(cnt_s[top] > 0, mx_s[top] - mn_s[top], 0.0)
    psum = pp + pm
    split = psum > pe
    bi_val = np.where(split, psum, pe)
    smooth = np.where(split, val_s[bot] + val_s[top], val_w)
    grad = np.where(split[pin_net], grad_s, grad_w)
    return bi_val, smooth, grad


def _bistratal_eval(exw_min, exw_max, rec_min, rec_max, stay_min, stay_max,
                    stay_cnt, tu, bistratal):
    """Axis value after moving one pin to `tu` on the receiving side."""
    pe = np.maximum(exw_max, tu) - np.minimum(exw_min, tu)
    if not bistratal:
        return pe
    p_rec = np.maximum(rec_max, tu) - np.minimum(rec_min, tu)
    p_stay = np.where(stay_cnt > 0, stay_max - stay_min, 0.0)
    return np.maximum(pe, p_rec + p_stay)


def _fda_axis(u_top, u_bot, side, pin_net, nseg, bistratal):
    """Per-pin axis wirelength with the pin's node on top vs on bottom."""
    u_cur = np.where(side == 1, u_top, u_bot)
    key2 = pin_net * 2 + side
    wmin1, wmin2, wmax1, wmax2, _ = _top2_segments(u_cur, pin_net, nseg)
    smin1, smin2, smax1, smax2, scnt = _top2_segments(u_cur, key2, 2 * nseg)
    e = pin_net
    exw_max = np.where(u_cur == wmax1[e], wmax2[e], wmax1[e])
    exw_min = np.where(u_cur == wmin1[e], wmin2[e], wmin1[e])
    own = key2
    other = pin_net * 2 + (1 - side)
    oxmax = np.where(u_cur == smax1[own], smax2[own], smax1[own])
    oxmin = np.where(u_cur == smin1[own], smin2[own], smin1[own])
    own_rest = scnt[own] - 1
    oth_cnt = scnt[other]
    oth_max = smax1[other]
    oth_min = smin1[other]

    def eval_on(tu, to_top):
        rec_is_own = side == (1 if to_top else 0)
        rec_max = np.where(rec_is_own, oxmax, oth_max)
        rec_min = np.where(rec_is_own, oxmin, oth_min)
        stay_cnt = np.where(rec_is_own, oth_cnt, own_rest)
        stay_max = np.where(rec_is_own, oth_max, oxmax)
        stay_min = np.where(rec_is_own, oth_min, oxmin)
        return _bistratal_eval(
            exw_min, exw_max, rec_min, rec_max, stay_min, stay_max,
            stay_cnt, tu, bistratal,
        )

    return eval_on(u_top, True), eval_on(u_bot, False)


def _fda_slow_net(lo, hi, x_top, y_top, x_bot, y_bot, side, pin_node,
                  z_max, gz, bistratal):
    """Exact per-net FDA recomputation for nets where a node has >1 pin."""
    idx = np.arange(lo, hi)
    nodes = pin_node[idx]
    cur_x = np.where(side[idx] == 1, x_top[idx], x_bot[idx])
    cur_y = np.where(side[idx] == 1, y_top[idx], y_bot[idx])

    def axis_val(u, s):
        pe = u.max() - u.min()
        if not bistratal:
            return pe
        pp = u[s == 1].max() - u[s == 1].min() if (s == 1).any() else 0.0
        pm = u[s == 0].max() - u[s == 0].min() if (s == 0).any() else 0.0
        return max(pe, pp + pm)

    for node in dict.fromkeys(nodes):
        mine = nodes == node
        for target in (1, 0):
            xs = np.where(mine, x_top[idx] if target else x_bot[idx], cur_x)
            ys = np.where(mine, y_top[idx] if target else y_bot[idx], cur_y)
            ss = np.where(mine, target, side[idx])
            w = axis_val(xs, ss) + axis_val(ys, ss)
            if target:
                w_top = w
            else:
                w_bot = w
        gz[node] += (4.0 / z_max) * (w_top - w_bot)


def fda_depth(x_top, y_top, x_bot, y_bot, side, pin_node, pin_net, net_ptr,
              n_nodes, z_max, net_has_multi, bistratal=True):
    """Finite-difference depth gradient accumulated per node.

    For each (net, node) incidence: (4/z_max) * (wirelength with the node
    on top - wirelength with it on bottom), other nodes fixed at their
    current die. `x_top`/`x_bot` are pin coordinates under each die's
    technology offsets.
    """
    nseg = len(net_ptr) - 1
    gz = np.zeros(n_nodes)
    if len(pin_node) == 0:
        return gz
    side = np.asarray(side, dtype=np.int64)
    fast = ~net_has_multi[pin_net]
    wx_top, wx_bot = _fda_axis(x_top, x_bot, side, pin_net, nseg, bistratal)
    wy_top, wy_bot = _fda_axis(y_top, y_bot, side, pin_net, nseg, bistratal)
    g = (4.0 / z_max) * ((wx_top + wy_top) - (wx_bot + wy_bot))
    np.add.at(gz, pin_node[fast], g[fast])
    for e in np.flatnonzero(net_has_multi):
        _fda_slow_net(
            net_ptr[e], net_ptr[e + 1], x_top, y_top, x_bot, y_bot, side,
            pin_node, z_max, gz, bistratal,
        )
    return gz


def _axis_windows(c, e, b, n):
    """Covered bin indices and overlap lengths along one axis."""
    first = np.clip(np.floor(c / b).astype(np.int64), 0, n - 1)
    kmax = int(np.ceil(float(e.max()) / b)) + 1 if len(e) else 1
    kmax = min(kmax, n)
    idx = first[:, None] + np.arange(kmax)[None, :]
    lo = idx * b
    ov = np.minimum(lo + b, (c + e)[:, None]) - np.maximum(lo, c[:, None])
    ov = np.clip(ov, 0.0, None)
    ov[idx >= n] = 0.0
    return np.minimum(idx, n - 1), ov


def _effective(c, s, b, n):
    """Bin-clamped extent, centered on the node and kept inside the grid."""
    e = np.maximum(s, b)
    c = np.clip(c - (e - s) / 2.0, 0.0, n * b - e)
    return c, e


def splat3d(cx, cy, cz, w, h, d, movable, nx, ny, nz, bx, by, bz):
    """Scatter node volumes onto the bin grid by exact rectangle overlap.

    Nodes thinner than a bin along an axis are stretched to the bin size
    with a density ratio that preserves total volume. Returns the full
    charge grid and the movable-only (filler-free) grid.
    """
    cx, ew = _effective(cx, w, bx, nx)
    cy, eh = _effective(cy, h, by, ny)
    cz, ed = _effective(cz, d, bz, nz)
    ratio = (w * h * d) / (ew * eh * ed)
    ix, wx = _axis_windows(cx, ew, bx, nx)
    iy, wy = _axis_windows(cy, eh, by, ny)
    iz, wz = _axis_windows(cz, ed, bz, nz)
    wgt = (
        ratio[:, None, None, None]
        * wx[:, :, None, None]
        * wy[:, None, :, None]
        * wz[:, None, None, :]
    )
    lin = (ix[:, :, None, None] * ny + iy[:, None, :, None]) * nz + iz[
        :, None, None, :
    ]
    nbins = nx * ny * nz
    rho = np.bincount(lin.ravel(), weights=wgt.ravel(), minlength=nbins)
    mov = np.asarray(movable, dtype=bool)
    rho_mov = np.bincount(
        lin[mov].ravel(), weights=wgt[mov].ravel(), minlength=nbins
    )
    return rho.reshape(nx, ny, nz), rho_mov.reshape(nx, ny, nz)


def gather3d(cx, cy, cz, w, h, d, ex, ey, ez, bx, by, bz):
    """Overlap-weighted average field over each node's (effective) box."""
    nx, ny, nz = ex.shape
    cx, ew = _effective(cx, w, bx, nx)
    cy, eh = _effective(cy, h, by, ny)
    cz, ed = _effective(cz, d, bz, nz)
    ix, wx = _axis_windows(cx, ew, bx, nx)
    iy, wy = _axis_windows(cy, eh, by, ny)
    iz, wz = _axis_windows(cz, ed, bz, nz)
    wgt = (
        wx[:, :, None, None] * wy[:, None, :, None] * wz[:, None, None, :]
    )
    lin = (ix[:, :, None, None] * ny + iy[:, None, :, None]) * nz + iz[
        :, None, None, :
    ]
    total = ew * eh * ed
    axes = (1, 2, 3)
    fx = (ex.ravel()[lin] * wgt).sum(axis=axes) / total
    fy = (ey.ravel()[lin] * wgt).sum(axis=axes) / total
    fz = (ez.ravel()[lin] * wgt).sum(axis=axes) / total
    return fx, fy, fz
