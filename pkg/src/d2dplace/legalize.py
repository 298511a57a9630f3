"""Row-based legalization: greedy nearest-slot packing (Tetris), per-row
quadratic-displacement refinement (Abacus), and terminal legalization on
a padded synthetic row grid.

Site width defaults to one design unit; cells occupy whole sites
(widths rounded up to sites for packing purposes only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import DieSpec, InfeasibleError

SITE_WIDTH = 1.0


@dataclass
class Row:
    y: float
    x0: float
    x1: float
    frontier: float = 0.0

    def __post_init__(self):
        self.frontier = self.x0


@dataclass
class RowMap:
    rows: list[Row]
    row_height: float
    site: float = SITE_WIDTH


def build_rows(spec: DieSpec) -> RowMap:
    r = spec.rows
    rows = [
        Row(y=r.start_y + k * r.row_height, x0=r.start_x,
            x1=r.start_x + r.row_length)
        for k in range(r.repeat_count)
    ]
    return RowMap(rows=rows, row_height=r.row_height)


def _sites(w: float, site: float) -> float:
    return math.ceil(w / site - 1e-9) * site


def tetris_legalize(tx, ty, widths, rowmap: RowMap, names=None):
    """Greedy legalization: cells in ascending x, nearest free row/site.

    Returns (x, y, row index) per cell. Raises InfeasibleError when a cell
    fits in no row.
    """
    tx = np.asarray(tx, dtype=float)
    ty = np.asarray(ty, dtype=float)
    widths = np.asarray(widths, dtype=float)
    n = len(tx)
    site = rowmap.site
    for row in rowmap.rows:
        row.frontier = row.x0
    order = sorted(range(n), key=lambda i: (tx[i], ty[i], i))
    row_ys = np.array([r.y for r in rowmap.rows])
    out_x = np.zeros(n)
    out_y = np.zeros(n)
    out_row = np.zeros(n, dtype=np.int64)
    for i in order:
        w = _sites(widths[i], site)
        by_dist = np.argsort(np.abs(row_ys - ty[i]), kind="stable")
        best = None
        for k in by_dist:
            row = rowmap.rows[k]
            dy2 = (row.y - ty[i]) ** 2
            if best is not None and dy2 >= best[0]:
                break
            snapped = row.x0 + math.floor((tx[i] - row.x0) / site + 0.5) * site
            limit = row.x0 + math.floor((row.x1 - w - row.x0) / site) * site
            cand = max(row.frontier, min(snapped, limit))
            if cand + w > row.x1 + 1e-9:
                continue
            cost = (cand - tx[i]) ** 2 + dy2
            if best is None or cost < best[0]:
                best = (cost, int(k), cand)
        if best is None:
            label = names[i] if names else f"#{i}"
            raise InfeasibleError(f"no legal slot for cell {label}")
        _, k, cand = best
        rowmap.rows[k].frontier = cand + w
        out_x[i] = cand
        out_y[i] = rowmap.rows[k].y
        out_row[i] = k
    return out_x, out_y, out_row


def _abacus_row(order, targets, widths, x0, x1, site):
    """Optimal in-order packed positions for one row (cluster merging)."""
    clusters = []  # [sum_weight, q, width, first_pos_in_order, count]
    for pos, i in enumerate(order):
        w = widths[i]
        clusters.append([1.0, targets[i], w, pos, 1])
        while len(clusters) >= 2:
            prev, cur = clusters[-2], clusters[-1]
            prev_pos = min(max(prev[1] / prev[0], x0), x1 - prev[2])
            cur_pos = min(max(cur[1] / cur[0], x0), x1 - cur[2])
            if prev_pos + prev[2] <= cur_pos + 1e-12:
                break
            prev[1] = prev[1] + cur[1] - cur[0] * prev[2]
            prev[0] += cur[0]
            prev[2] += cur[2]
            prev[4] += cur[4]
            clusters.pop()
    out = {}
    for e, q, wsum, first, count in clusters:
        pos = min(max(q / e, x0), x1 - wsum)
        pos = x0 + math.floor((pos - x0) / site + 0.5) * site
        pos = min(max(pos, x0), x1 - wsum)
        acc = pos
        for i in order[first:first + count]:
            out[i] = acc
            acc += widths[i]
    return out


def abacus_refine(x_cur, y_cur, row_idx, tx, widths, rowmap: RowMap):
    """Re-place each row minimizing squared displacement to targets.

    Keeps the per-row left-to-right order of the input. Falls back to the
    input whenever it would not strictly help (the result never has larger
    total squared displacement).
    """
    x_cur = np.asarray(x_cur, dtype=float)
    widths_p = np.array([_sites(w, rowmap.site) for w in widths])
    out = x_cur.copy()
    for k in sorted(set(int(r) for r in row_idx)):
        members = [i for i in range(len(x_cur)) if row_idx[i] == k]
        members.sort(key=lambda i: (x_cur[i], i))
        row = rowmap.rows[k]
        if sum(widths_p[i] for i in members) > row.x1 - row.x0 + 1e-9:
            continue  # overfull: keep the greedy result
        new = _abacus_row(members, tx, widths_p, row.x0, row.x1, rowmap.site)
        old_cost = sum((x_cur[i] - tx[i]) ** 2 for i in members)
        new_cost = sum((new[i] - tx[i]) ** 2 for i in members)
        if new_cost <= old_cost + 1e-12:
            for i in members:
                out[i] = new[i]
    return out


@dataclass
class TerminalGrid:
    clearance: float
    pitch: float
    rowmap: RowMap


def terminal_rows(x_max: float, y_max: float, term_size: float,
                  spacing: float, clearance: float | None = None):
    """Synthetic rows for terminal lower-left positions.

    Terminals are padded to (size + spacing) squares; rows have that
    height and x-slots of that pitch, inset so boundary clearance holds.
    """
    pitch = term_size + spacing
    c0 = math.ceil(spacing / 2.0) if float(spacing).is_integer() else spacing / 2.0
    lo_x, hi_x = c0, x_max - c0 - term_size
    lo_y, hi_y = c0, y_max - c0 - term_size
    if hi_x < lo_x or hi_y < lo_y:
        raise InfeasibleError("die too small for any terminal")
    rows = []
    y = lo_y
    while y <= hi_y + 1e-9:
        rows.append(Row(y=y, x0=lo_x, x1=hi_x + pitch))
        y += pitch
    return RowMap(rows=rows, row_height=pitch), c0


def legalize_hbts(centers: dict[int, tuple[float, float]], term_size: float,
                  spacing: float, x_max: float, y_max: float
                  ) -> dict[int, tuple[float, float]]:
    """Snap terminal centers to legal, non-conflicting lower-left corners.

    Pairwise boundary distance comes out >= spacing and boundary clearance
    >= spacing / 2 by construction of the padded grid.
    """
    if not centers:
        return {}
    rowmap, _ = terminal_rows(x_max, y_max, term_size, spacing)
    keys = sorted(centers)
    tx = [centers[e][0] - term_size / 2.0 for e in keys]
    ty = [centers[e][1] - term_size / 2.0 for e in keys]
    pitch = term_size + spacing
    try:
        qx, qy, _ = tetris_legalize(
            tx, ty, [pitch] * len(keys), rowmap,
            names=[f"terminal:{e}" for e in keys],
        )
    except InfeasibleError as exc:
        raise InfeasibleError(f"terminal capacity exceeded: {exc}") from exc
    return {e: (float(qx[i]), float(qy[i])) for i, e in enumerate(keys)}
