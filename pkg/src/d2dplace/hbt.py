"""Hybrid bonding terminal assignment.

Every split net gets exactly one terminal. The set of terminal positions
minimizing the net's exact two-die wirelength is a rectangle whose
per-axis bounds are the two medians of the four partial-box coordinates;
we place the terminal at its center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import DomainError, FlatDesign, PlacementState


def _axis_region(lo_p, hi_p, lo_m, hi_m):
    inner_lo = max(lo_p, lo_m)
    inner_hi = min(hi_p, hi_m)
    return min(inner_lo, inner_hi), max(inner_lo, inner_hi)


def optimal_region(xs, ys, sides):
    """Optimal terminal rectangle (xlo, xhi, ylo, yhi) of one split net."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sides = np.asarray(sides)
    top = sides == 1
    if not top.any() or top.all():
        raise DomainError("optimal_region called on a non-split net")
    xlo, xhi = _axis_region(
        xs[top].min(), xs[top].max(), xs[~top].min(), xs[~top].max()
    )
    ylo, yhi = _axis_region(
        ys[top].min(), ys[top].max(), ys[~top].min(), ys[~top].max()
    )
    return xlo, xhi, ylo, yhi


def exact_net_wl(xs, ys, sides, tx, ty) -> float:
    """Exact two-die wirelength of a split net with a terminal at (tx, ty)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sides = np.asarray(sides)
    total = 0.0
    for mask in (sides == 1, sides == 0):
        us = np.append(xs[mask], tx)
        vs = np.append(ys[mask], ty)
        total += (us.max() - us.min()) + (vs.max() - vs.min())
    return float(total)


@dataclass
class HbtAssignment:
    net_idx: np.ndarray    # split net indices, ascending
    cx: np.ndarray         # terminal centers
    cy: np.ndarray
    regions: np.ndarray    # (k, 4): xlo, xhi, ylo, yhi

    def as_dict(self):
        return {
            int(e): (float(x), float(y))
            for e, x, y in zip(self.net_idx, self.cx, self.cy)
        }


def assign_hbts(state: PlacementState, flat: FlatDesign) -> HbtAssignment:
    """Center a terminal in each split net's optimal region."""
    side = state.partition[flat.pin_node].astype(np.int64)
    px = state.x[flat.pin_node] + state.off_x
    py = state.y[flat.pin_node] + state.off_y
    return assign_from_pins(px, py, side, flat)


def assign_from_pins(px, py, side, flat: FlatDesign) -> HbtAssignment:
    m = flat.n_nets
    key2 = flat.pin_net * 2 + side
    mnx, mxx, cnt = kernels.minmax_segments(px, key2, 2 * m)
    mny, mxy, _ = kernels.minmax_segments(py, key2, 2 * m)
    bot = np.arange(m) * 2
    top = bot + 1
    split = (cnt[bot] > 0) & (cnt[top] > 0)
    idx = np.flatnonzero(split)
    inner_lo_x = np.maximum(mnx[top[idx]], mnx[bot[idx]])
    inner_hi_x = np.minimum(mxx[top[idx]], mxx[bot[idx]])
    xlo = np.minimum(inner_lo_x, inner_hi_x)
    xhi = np.maximum(inner_lo_x, inner_hi_x)
    inner_lo_y = np.maximum(mny[top[idx]], mny[bot[idx]])
    inner_hi_y = np.minimum(mxy[top[idx]], mxy[bot[idx]])
    ylo = np.minimum(inner_lo_y, inner_hi_y)
    yhi = np.maximum(inner_lo_y, inner_hi_y)
    return HbtAssignment(
        net_idx=idx,
        cx=(xlo + xhi) / 2.0,
        cy=(ylo + yhi) / 2.0,
        regions=np.stack([xlo, xhi, ylo, yhi], axis=1)
        if len(idx)
        else np.zeros((0, 4)),
    )


def brute_force_hbt(xs, ys, sides, pitch: float):
    """Exhaustive scan oracle for the optimal terminal position.

    Candidates form a uniform grid over the net bounding box inflated by
    one pitch, augmented with the pin coordinates themselves (the exact
    wirelength is piecewise linear, so its minimum sits on a pin-aligned
    candidate). Returns ((x, y), wirelength).
    """
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sides = np.asarray(sides)
    top = sides == 1
    if not top.any() or top.all():
        raise DomainError("brute_force_hbt called on a non-split net")

    def candidates(us):
        lo, hi = us.min() - pitch, us.max() + pitch
        grid = np.arange(lo, hi + pitch / 2, pitch)
        return np.unique(np.concatenate([grid, us]))

    cand_x = candidates(xs)
    cand_y = candidates(ys)
    gx, gy = np.meshgrid(cand_x, cand_y, indexing="ij")
    total = np.zeros_like(gx)
    for mask in (top, ~top):
        mx, mn = xs[mask].max(), xs[mask].min()
        my, my0 = ys[mask].max(), ys[mask].min()
        total += np.maximum(gx, mx) - np.minimum(gx, mn)
        total += np.maximum(gy, my) - np.minimum(gy, my0)
    flat_idx = int(np.argmin(total))
    i, j = np.unravel_index(flat_idx, total.shape)
    return (float(cand_x[i]), float(cand_y[j])), float(total[i, j])
