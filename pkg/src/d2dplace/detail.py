"""Post-legalization refinement: per-die global swap and local reordering,
plus a terminal re-assignment round.

All commits are gated on the exact two-die wirelength, so the evaluator
score is non-increasing through every operation. When refining one die,
the other die's cells and all terminals stay fixed.

The inner loops run on plain Python floats with a per-net wirelength
cache; nets here are tiny, so this beats array round-trips.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import hbt as hbt_mod
from . import legalize as lg
from .model import Design, FlatDesign

_EPS = 1e-9


class DpContext:
    """Committed placement view with cached exact per-net wirelength."""

    def __init__(self, design: Design, flat: FlatDesign, die, x, y,
                 term_centers: dict[int, tuple[float, float]]):
        self.design = design
        self.flat = flat
        self.die = [int(d) for d in die]
        self.x = [float(v) for v in x]
        self.y = [float(v) for v in y]
        self.term = dict(term_centers)
        # per net: (node, off_x, off_y, on_top) per pin under committed dies
        self.net_pins: list[list[tuple[int, float, float, bool]]] = []
        for e in range(flat.n_nets):
            pins = []
            for p in range(flat.net_ptr[e], flat.net_ptr[e + 1]):
                node = int(flat.pin_node[p])
                top = self.die[node] == 1
                ox = flat.off_x_plus[p] if top else flat.off_x_minus[p]
                oy = flat.off_y_plus[p] if top else flat.off_y_minus[p]
                pins.append((node, float(ox), float(oy), top))
            self.net_pins.append(pins)
        self.node_nets: list[list[int]] = [
            [int(e) for e in
             flat.node_net[flat.node_net_ptr[i]:flat.node_net_ptr[i + 1]]]
            for i in range(design.n_nodes)
        ]
        self.wl_cache = [self._net_wl(e) for e in range(flat.n_nets)]

    def _net_wl(self, e: int) -> float:
        x, y = self.x, self.y
        t = self.term.get(e)
        if t is None:
            xlo = xhi = ylo = yhi = None
            for node, ox, oy, _ in self.net_pins[e]:
                px = x[node] + ox
                py = y[node] + oy
                if xlo is None:
                    xlo = xhi = px
                    ylo = yhi = py
                else:
                    if px < xlo: xlo = px
                    elif px > xhi: xhi = px
                    if py < ylo: ylo = py
                    elif py > yhi: yhi = py
            return (xhi - xlo) + (yhi - ylo)
        tx, ty = t
        txlo = txhi = bxlo = bxhi = tx
        tylo = tyhi = bylo = byhi = ty
        for node, ox, oy, top in self.net_pins[e]:
            px = x[node] + ox
            py = y[node] + oy
            if top:
                if px < txlo: txlo = px
                elif px > txhi: txhi = px
                if py < tylo: tylo = py
                elif py > tyhi: tyhi = py
            else:
                if px < bxlo: bxlo = px
                elif px > bxhi: bxhi = px
                if py < bylo: bylo = py
                elif py > byhi: byhi = py
        return (txhi - txlo) + (tyhi - tylo) + (bxhi - bxlo) + (byhi - bylo)

    def refresh(self, nets) -> None:
        for e in nets:
            self.wl_cache[e] = self._net_wl(e)

    def cached(self, nets) -> float:
        cache = self.wl_cache
        return sum(cache[e] for e in nets)

    def trial(self, nets) -> float:
        return sum(self._net_wl(e) for e in nets)

    def total_wl(self) -> float:
        return sum(self.wl_cache)

    def rebuild_terms(self, term_centers) -> None:
        self.term = dict(term_centers)
        self.wl_cache = [self._net_wl(e) for e in range(self.flat.n_nets)]


@dataclass
class RowOcc:
    """Sorted (x, cell) occupancy of one row."""

    y: float
    x0: float
    x1: float
    items: list

    def insert(self, x: float, i: int):
        bisect.insort(self.items, (x, i))

    def remove(self, x: float, i: int):
        self.items.remove((x, i))

    def gaps(self, widths):
        cur = self.x0
        for x, i in self.items:
            if x - cur > _EPS:
                yield cur, x
            cur = max(cur, x + widths[i])
        if self.x1 - cur > _EPS:
            yield cur, self.x1


class DieLayout:
    """Row occupancy of one die's cells (packed widths, integer sites)."""

    def __init__(self, ctx: DpContext, die_id: int, row_idx, rowmap):
        self.ctx = ctx
        self.die_id = die_id
        self.site = rowmap.site
        self.rows = [
            RowOcc(y=r.y, x0=r.x0, x1=r.x1, items=[]) for r in rowmap.rows
        ]
        self.row_of = {}
        self.widths = {}
        tech = ctx.design.tech_of(die_id)
        for i in range(ctx.design.n_nodes):
            if ctx.die[i] != die_id:
                continue
            cell = tech.lib_cells[ctx.design.node_cells[i]]
            self.widths[i] = lg._sites(cell.width, self.site)
            k = int(row_idx[i])
            self.rows[k].insert(ctx.x[i], i)
            self.row_of[i] = k

    @property
    def cells(self):
        return sorted(self.row_of)

    def move(self, i: int, new_x: float, new_row: int):
        self.rows[self.row_of[i]].remove(self.ctx.x[i], i)
        self.rows[new_row].insert(new_x, i)
        self.row_of[i] = new_row
        self.ctx.x[i] = new_x
        self.ctx.y[i] = self.rows[new_row].y

    def swap(self, i: int, j: int):
        ctx = self.ctx
        xi, yi, ri = ctx.x[i], ctx.y[i], self.row_of[i]
        xj, yj, rj = ctx.x[j], ctx.y[j], self.row_of[j]
        self.rows[ri].remove(xi, i)
        self.rows[rj].remove(xj, j)
        self.rows[rj].insert(xj, i)
        self.rows[ri].insert(xi, j)
        self.row_of[i], self.row_of[j] = rj, ri
        ctx.x[i], ctx.y[i] = xj, yj
        ctx.x[j], ctx.y[j] = xi, yi


def _optimal_point(ctx: DpContext, i: int):
    """Median of the incident nets' other-pin box midpoints."""
    xs, ys = [], []
    for e in ctx.node_nets[i]:
        xlo = xhi = ylo = yhi = None
        t = ctx.term.get(e)
        if t is not None:
            xlo = xhi = t[0]
            ylo = yhi = t[1]
        for node, ox, oy, _ in ctx.net_pins[e]:
            if node == i:
                continue
            px = ctx.x[node] + ox
            py = ctx.y[node] + oy
            if xlo is None:
                xlo = xhi = px
                ylo = yhi = py
            else:
                if px < xlo: xlo = px
                elif px > xhi: xhi = px
                if py < ylo: ylo = py
                elif py > yhi: yhi = py
        if xlo is None:
            continue
        xs.append((xlo + xhi) / 2.0)
        ys.append((ylo + yhi) / 2.0)
    if not xs:
        return ctx.x[i], ctx.y[i]
    return float(np.median(xs)), float(np.median(ys))


def global_swap(ctx: DpContext, layout: DieLayout,
                max_candidates: int = 10) -> int:
    """Swap cells (or move into gaps) toward their optimal net positions.

    Only strictly improving, legality-preserving moves are committed.
    Returns the number of commits.
    """
    commits = 0
    cells = layout.cells
    if not cells:
        return 0
    arr = np.array(cells)
    ax = np.array([ctx.x[i] for i in cells])
    ay = np.array([ctx.y[i] for i in cells])
    wid = np.array([layout.widths[i] for i in cells])
    for i in cells:
        tx, ty = _optimal_point(ctx, i)
        w = layout.widths[i]
        dist = np.abs(ax - tx) + np.abs(ay - ty)
        near = np.argsort(dist, kind="stable")
        cand_cells = []
        for k in near:
            j = int(arr[k])
            if j != i and wid[k] == w:
                cand_cells.append(j)
                if len(cand_cells) >= max_candidates:
                    break
        my_nets = ctx.node_nets[i]

        best = None  # (delta, kind, payload)
        for j in cand_cells:
            nets = sorted(set(my_nets) | set(ctx.node_nets[j]))
            before = ctx.cached(nets)
            layout.swap(i, j)
            after = ctx.trial(nets)
            layout.swap(i, j)
            delta = after - before
            if delta < -_EPS and (best is None or delta < best[0]):
                best = (delta, "swap", j)

        nets = sorted(set(my_nets))
        row_pitch = (layout.rows[1].y - layout.rows[0].y
                     if len(layout.rows) > 1 else 1.0)
        target_row = int(np.clip(
            round((ty - layout.rows[0].y) / max(row_pitch, 1e-9)),
            0, len(layout.rows) - 1))
        tried = 0
        for dk in (0, -1, 1, -2, 2):
            k = target_row + dk
            if not (0 <= k < len(layout.rows)) or tried >= max_candidates:
                continue
            row = layout.rows[k]
            for g0, g1 in row.gaps(layout.widths):
                if g1 - g0 < w - _EPS:
                    continue
                pos = min(max(tx, g0), g1 - w)
                pos = row.x0 + round((pos - row.x0) / layout.site) * layout.site
                pos = min(max(pos, g0), g1 - w)
                if pos < g0 - _EPS or pos + w > g1 + _EPS:
                    continue
                tried += 1
                old_x, old_row = ctx.x[i], layout.row_of[i]
                before = ctx.cached(nets)
                layout.move(i, pos, k)
                after = ctx.trial(nets)
                layout.move(i, old_x, old_row)
                delta = after - before
                if delta < -_EPS and (best is None or delta < best[0]):
                    best = (delta, "move", (pos, k))
                if tried >= max_candidates:
                    break

        if best is not None:
            if best[1] == "swap":
                j = best[2]
                layout.swap(i, j)
                ctx.refresh(sorted(set(my_nets) | set(ctx.node_nets[j])))
            else:
                pos, k = best[2]
                layout.move(i, pos, k)
                ctx.refresh(sorted(set(my_nets)))
            commits += 1
    return commits


def local_reorder(ctx: DpContext, layout: DieLayout, window: int = 3) -> int:
    """Try all orders of each window of consecutive same-row cells, packed
    from the window's left edge; commit the best strict improvement."""
    commits = 0
    for row in layout.rows:
        pos = 0
        while pos + 2 <= len(row.items):
            k = min(window, len(row.items) - pos)
            group = row.items[pos:pos + k]
            idxs = [i for _, i in group]
            left = group[0][0]
            limit = group[-1][0] + layout.widths[idxs[-1]]
            nets = sorted({e for i in idxs for e in ctx.node_nets[i]})
            before = ctx.cached(nets)
            cur = [(ctx.x[i], i) for i in group_positions(group)]
            best = None
            for perm in permutations(idxs):
                acc = left
                placement = []
                for i in perm:
                    placement.append((acc, i))
                    acc += layout.widths[i]
                if acc > limit + _EPS:
                    continue
                for px, i in placement:
                    ctx.x[i] = px
                after = ctx.trial(nets)
                delta = after - before
                if delta < -_EPS and (best is None or delta < best[0]):
                    best = (delta, placement)
            for px, i in cur:
                ctx.x[i] = px
            if best is not None:
                row.items[pos:pos + k] = sorted(
                    (px, i) for px, i in best[1]
                )
                for px, i in best[1]:
                    ctx.x[i] = px
                ctx.refresh(nets)
                commits += 1
            pos += 1
    return commits


def group_positions(group):
    return [i for _, i in group]


def refine_pipeline(design: Design, flat: FlatDesign, die, x, y,
                    terminals_low: dict[int, tuple[float, float]],
                    row_idx_by_die: dict[int, np.ndarray],
                    rowmaps: dict[int, "lg.RowMap"],
                    rounds: int = 2, window: int = 3,
                    max_candidates: int = 10):
    """Rounds of {per-die swap + reorder, terminal re-assign + legalize}.

    The re-assigned terminal set is kept only when it does not worsen the
    exact wirelength, so the score is monotone across rounds. Returns
    (x, y, terminals_low, wirelength history).
    """
    half = design.terminal_size / 2.0
    centers = {e: (lx + half, ly + half)
               for e, (lx, ly) in terminals_low.items()}
    ctx = DpContext(design, flat, die, x, y, centers)
    layouts = {
        d: DieLayout(ctx, d, row_idx_by_die[d], rowmaps[d]) for d in (1, 0)
    }
    history = [ctx.total_wl()]
    for _ in range(rounds):
        for d in (1, 0):
            global_swap(ctx, layouts[d], max_candidates=max_candidates)
            local_reorder(ctx, layouts[d], window=window)
        xs = np.asarray(ctx.x)
        ys = np.asarray(ctx.y)
        dies = np.asarray(ctx.die, dtype=np.int64)
        side = dies[flat.pin_node]
        on_top = side == 1
        px = xs[flat.pin_node] + np.where(
            on_top, flat.off_x_plus, flat.off_x_minus)
        py = ys[flat.pin_node] + np.where(
            on_top, flat.off_y_plus, flat.off_y_minus)
        assign = hbt_mod.assign_from_pins(px, py, side, flat)
        new_low = lg.legalize_hbts(
            assign.as_dict(), design.terminal_size, design.terminal_spacing,
            design.top_die.x_max, design.top_die.y_max,
        )
        new_centers = {
            e: (lx + half, ly + half) for e, (lx, ly) in new_low.items()
        }
        old_wl = ctx.total_wl()
        old_term = dict(ctx.term)
        ctx.rebuild_terms(new_centers)
        if ctx.total_wl() <= old_wl + _EPS:
            terminals_low = new_low
        else:
            ctx.rebuild_terms(old_term)
        history.append(ctx.total_wl())
    return (np.asarray(ctx.x), np.asarray(ctx.y), terminals_low, history)
