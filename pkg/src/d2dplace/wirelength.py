"""Wirelength objectives and gradients.

Forward values are exact peak-to-peak quantities; only gradients use the
weighted-average (WA) smoothing. The bistratal net wirelength is, per
axis, max(p_e, p_top + p_bottom) over the partial nets induced by the
current partition; it equals the minimum exact two-die wirelength over
terminal positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import FlatDesign, PlacementState


def wa_p2p(coords, gamma: float):
    """Smooth peak-to-peak of one coordinate set.

    Returns (value, gradient). Exponents are shifted by the max/min before
    exponentiation, making the result invariant under translation.
    """
    u = np.asarray(coords, dtype=np.float64)
    if u.size == 0:
        raise ValueError("empty coordinate set")
    key = np.zeros(u.size, dtype=np.int64)
    val, grad = kernels.wa_segments(u, key, 1, gamma)
    return float(val[0]), grad


def plain_hpwl(xs, ys) -> float:
    """Half-perimeter of the whole net, ignoring partition."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    return float((xs.max() - xs.min()) + (ys.max() - ys.min()))


def _axis_bistratal(u, side) -> float:
    pe = u.max() - u.min()
    top = u[side == 1]
    bot = u[side == 0]
    pp = top.max() - top.min() if top.size else 0.0
    pm = bot.max() - bot.min() if bot.size else 0.0
    return max(pe, pp + pm)


def bistratal_wl(xs, ys, sides) -> float:
    """Bistratal half-perimeter wirelength of one net."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    sides = np.asarray(sides)
    return _axis_bistratal(xs, sides) + _axis_bistratal(ys, sides)


def planar_gradient(xs, ys, sides, gamma: float):
    """Adaptive per-pin (d/dx, d/dy) subgradient approximation of one net."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    sides = np.asarray(sides, dtype=np.int64)
    key = np.zeros(xs.size, dtype=np.int64)
    _, _, gx = kernels.adaptive_planar(xs, sides, key, 1, gamma)
    _, _, gy = kernels.adaptive_planar(ys, sides, key, 1, gamma)
    return gx, gy


def fda_depth_gradient(
    xs_top, ys_top, xs_bot, ys_bot, sides, pin_nodes, node, z_max: float,
    use_bistratal: bool = True,
) -> float:
    """Depth gradient of one node on one net via the two-die difference.

    Evaluates the net's (bistratal) wirelength with the node's pins placed
    with top-die offsets versus bottom-die offsets, all other pins fixed,
    scaled by 4 / z_max.
    """
    xs_top = np.asarray(xs_top, dtype=np.float64)
    ys_top = np.asarray(ys_top, dtype=np.float64)
    xs_bot = np.asarray(xs_bot, dtype=np.float64)
    ys_bot = np.asarray(ys_bot, dtype=np.float64)
    sides = np.asarray(sides, dtype=np.int64)
    pin_nodes = np.asarray(pin_nodes, dtype=np.int64)
    mine = pin_nodes == node
    if not mine.any():
        raise ValueError(f"node {node} not on this net")
    cur_x = np.where(sides == 1, xs_top, xs_bot)
    cur_y = np.where(sides == 1, ys_top, ys_bot)
    vals = {}
    for target in (1, 0):
        xs = np.where(mine, xs_top if target else xs_bot, cur_x)
        ys = np.where(mine, ys_top if target else ys_bot, cur_y)
        ss = np.where(mine, target, sides)
        if use_bistratal:
            vals[target] = _axis_bistratal(xs, ss) + _axis_bistratal(ys, ss)
        else:
            vals[target] = plain_hpwl(xs, ys)
    return (4.0 / z_max) * (vals[1] - vals[0])


@dataclass
class WlGradients:
    gx: np.ndarray  # per node
    gy: np.ndarray
    gz: np.ndarray
    gamma: float
    alpha: float


@dataclass
class ObjectiveResult:
    value: float          # sum of bistratal WL + alpha * cut term (exact)
    gradients: WlGradients
    bi_total: float       # exact bistratal wirelength sum
    cut_total: float      # exact sum of p_e(z)
    smoothed: float       # WA value of the active branches (finite check)
    cut_count: int        # number of split nets
    gz_cut: np.ndarray | None = None  # unscaled cut-term depth gradient
    gz_fda: np.ndarray | None = None


def total_objective(
    state: PlacementState,
    flat: FlatDesign,
    alpha: float,
    gamma: float,
    use_bistratal: bool = True,
    use_fda: bool = True,
) -> ObjectiveResult:
    """Assemble the wirelength objective and its gradients.

    Planar gradients follow the adaptive branch rule per net and axis;
    depth gradients combine the per-net finite-difference terms with the
    WA gradient of the cut term weighted by alpha. Requires partition and
    resolved attributes to be current.
    """
    n = state.n_nodes
    side = state.partition[flat.pin_node].astype(np.int64)
    px = state.x[flat.pin_node] + state.off_x
    py = state.y[flat.pin_node] + state.off_y
    m = flat.n_nets

    if use_bistratal:
        bx, sx, gpx = kernels.adaptive_planar(px, side, flat.pin_net, m, gamma)
        by, sy, gpy = kernels.adaptive_planar(py, side, flat.pin_net, m, gamma)
    else:
        sx_val, gpx = kernels.wa_segments(px, flat.pin_net, m, gamma)
        sy_val, gpy = kernels.wa_segments(py, flat.pin_net, m, gamma)
        mnx, mxx, _ = kernels.minmax_segments(px, flat.pin_net, m)
        mny, mxy, _ = kernels.minmax_segments(py, flat.pin_net, m)
        bx, by = mxx - mnx, mxy - mny
        sx, sy = sx_val, sy_val

    gx = np.zeros(n)
    gy = np.zeros(n)
    np.add.at(gx, flat.pin_node, gpx)
    np.add.at(gy, flat.pin_node, gpy)

    # cut term p_e(z) over unique member nodes; pin z offset is constant
    zq = state.z[flat.znet_node] + state.z_max / 4.0
    mnz, mxz, _ = kernels.minmax_segments(zq, flat.znet_net, m)
    cut_total = float((mxz - mnz).sum())
    _, gzq = kernels.wa_segments(zq, flat.znet_net, m, gamma)
    gz_cut = np.zeros(n)
    np.add.at(gz_cut, flat.znet_node, gzq)

    gz_fda = np.zeros(n)
    if use_fda:
        x_top = state.x[flat.pin_node] + flat.off_x_plus
        y_top = state.y[flat.pin_node] + flat.off_y_plus
        x_bot = state.x[flat.pin_node] + flat.off_x_minus
        y_bot = state.y[flat.pin_node] + flat.off_y_minus
        gz_fda = kernels.fda_depth(
            x_top, y_top, x_bot, y_bot, side, flat.pin_node, flat.pin_net,
            flat.net_ptr, n, state.z_max, flat.net_has_multi, use_bistratal,
        )
    gz = gz_fda + alpha * gz_cut

    dz = state.partition[flat.znet_node].astype(np.int64)
    hi = np.zeros(m, dtype=np.int64)
    lo = np.ones(m, dtype=np.int64)
    np.maximum.at(hi, flat.znet_net, dz)
    np.minimum.at(lo, flat.znet_net, dz)
    cut_count = int((hi - lo).sum())

    bi_total = float(bx.sum() + by.sum())
    value = bi_total + alpha * cut_total
    grads = WlGradients(gx=gx, gy=gy, gz=gz, gamma=gamma, alpha=alpha)
    return ObjectiveResult(
        value=value,
        gradients=grads,
        bi_total=bi_total,
        cut_total=cut_total,
        smoothed=float(sx.sum() + sy.sum()),
        cut_count=cut_count,
        gz_cut=gz_cut,
        gz_fda=gz_fda,
    )
