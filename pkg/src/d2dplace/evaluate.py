"""Independent scoring and legality checking of final solutions.

The exact wirelength of a split net is the sum of the two per-die
half-perimeters, each including the terminal center; non-split nets score
their plain HPWL. Files store terminal lower-left corners, so the
evaluator adds half the terminal size to recover centers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .io import Solution
from .model import Design, DesignError, DieSpec, FlatDesign, flatten

SITE_WIDTH = 1.0
_EPS = 1e-6


def exact_d2d_wl(solution: Solution, design: Design,
                 flat: FlatDesign | None = None):
    """Total exact wirelength and the per-net breakdown.

    Raises DesignError when a split net lacks a terminal or a terminal
    sits on a non-split net.
    """
    flat = flat or flatten(design)
    die = np.asarray(solution.node_die, dtype=np.int64)
    x = np.asarray(solution.x, dtype=float)
    y = np.asarray(solution.y, dtype=float)
    half = design.terminal_size / 2.0
    per_net = np.zeros(flat.n_nets)
    for e in range(flat.n_nets):
        lo, hi = flat.net_ptr[e], flat.net_ptr[e + 1]
        nodes = flat.pin_node[lo:hi]
        on_top = die[nodes] == 1
        px = x[nodes] + np.where(
            on_top, flat.off_x_plus[lo:hi], flat.off_x_minus[lo:hi]
        )
        py = y[nodes] + np.where(
            on_top, flat.off_y_plus[lo:hi], flat.off_y_minus[lo:hi]
        )
        split = bool(on_top.any() and not on_top.all())
        term = solution.terminals.get(e)
        if split and term is None:
            raise DesignError(
                f"split net {design.net_names[e]} has no terminal"
            )
        if not split and term is not None:
            raise DesignError(
                f"net {design.net_names[e]} is not split but has a terminal"
            )
        if split:
            tx, ty = term[0] + half, term[1] + half
            w = 0.0
            for mask in (on_top, ~on_top):
                us = np.append(px[mask], tx)
                vs = np.append(py[mask], ty)
                w += (us.max() - us.min()) + (vs.max() - vs.min())
            per_net[e] = w
        else:
            per_net[e] = (px.max() - px.min()) + (py.max() - py.min())
    return float(per_net.sum()), per_net


@dataclass
class LegalityReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def _die_rows(spec: DieSpec):
    r = spec.rows
    return [
        (r.start_y + k * r.row_height, r.start_x, r.start_x + r.row_length)
        for k in range(r.repeat_count)
    ]


def _check_die(report: LegalityReport, design: Design, solution: Solution,
               die: int, label: str) -> None:
    spec = design.top_die if die == 1 else design.bottom_die
    tech = design.tech_of(die)
    rows = _die_rows(spec)
    row_h = spec.rows.row_height
    row_y0 = spec.rows.start_y
    by_row: dict[int, list[tuple[float, float, str]]] = {}
    used_area = 0.0
    for i in range(design.n_nodes):
        if solution.node_die[i] != die:
            continue
        name = design.node_names[i]
        cell = tech.lib_cells[design.node_cells[i]]
        cx, cy = solution.x[i], solution.y[i]
        used_area += cell.width * cell.height
        k = int(round((cy - row_y0) / row_h))
        if not (0 <= k < len(rows)) or abs(cy - rows[k][0]) > _EPS:
            report.add(f"{label}: cell {name} y={cy} not on a row")
            continue
        ry, rx0, rx1 = rows[k]
        if cx < rx0 - _EPS or cx + cell.width > rx1 + _EPS:
            report.add(f"{label}: cell {name} x=[{cx}, {cx + cell.width}] "
                       f"outside row span [{rx0}, {rx1}]")
        site = (cx - rx0) / SITE_WIDTH
        if abs(site - round(site)) > _EPS:
            report.add(f"{label}: cell {name} x={cx} not site aligned")
        by_row.setdefault(k, []).append((cx, cx + cell.width, name))
    for k, items in sorted(by_row.items()):
        items.sort()
        for (a0, a1, an), (b0, b1, bn) in zip(items, items[1:]):
            if b0 < a1 - _EPS:
                report.add(f"{label}: cells {an} and {bn} overlap in row {k} "
                           f"([{a0}, {a1}] vs [{b0}, {b1}])")
    cap = spec.area * spec.max_util
    if used_area > cap + _EPS:
        report.add(
            f"{label}: utilization {used_area / spec.area:.4f} exceeds "
            f"{spec.max_util:.4f} (area {used_area} > {cap})"
        )


def _box_distance(a, b, size: float) -> float:
    gx = max(b[0] - (a[0] + size), a[0] - (b[0] + size), 0.0)
    gy = max(b[1] - (a[1] + size), a[1] - (b[1] + size), 0.0)
    return float(np.hypot(gx, gy))


def check_legality(solution: Solution, design: Design,
                   boundary_clearance: float | None = None) -> LegalityReport:
    """Row/site alignment, overlap, utilization, and terminal spacing."""
    report = LegalityReport()
    _check_die(report, design, solution, 1, "top")
    _check_die(report, design, solution, 0, "bottom")

    w = design.terminal_size
    s = design.terminal_spacing
    clear = boundary_clearance if boundary_clearance is not None else s / 2.0
    X, Y = design.top_die.x_max, design.top_die.y_max
    terms = sorted(solution.terminals.items())
    for e, (tx, ty) in terms:
        name = design.net_names[e]
        if (tx < clear - _EPS or ty < clear - _EPS
                or tx + w > X - clear + _EPS or ty + w > Y - clear + _EPS):
            report.add(f"terminal {name} at ({tx}, {ty}) violates boundary "
                       f"clearance {clear}")
    order = sorted(range(len(terms)), key=lambda i: terms[i][1][0])
    for ii, i in enumerate(order):
        e1, p1 = terms[i]
        for j in order[ii + 1:]:
            e2, p2 = terms[j]
            if p2[0] - p1[0] > w + s:
                break
            dist = _box_distance(p1, p2, w)
            if dist < s - _EPS:
                report.add(
                    f"terminals {design.net_names[e1]} and "
                    f"{design.net_names[e2]} spaced {dist} < {s}"
                )
    return report


def report(solution: Solution, design: Design,
           flat: FlatDesign | None = None,
           runtime: float | None = None) -> dict:
    """Summary record: wirelength, terminal count, per-die stats."""
    flat = flat or flatten(design)
    if design.n_nodes == 0:
        return {"wirelength": 0.0, "terminals": 0, "top_cells": 0,
                "bottom_cells": 0, "top_util": 0.0, "bottom_util": 0.0,
                "runtime": runtime}
    total, _ = exact_d2d_wl(solution, design, flat)
    die = np.asarray(solution.node_die)
    util = {}
    for d, key in ((1, "top"), (0, "bottom")):
        spec = design.top_die if d == 1 else design.bottom_die
        tech = design.tech_of(d)
        area = sum(
            tech.lib_cells[design.node_cells[i]].width
            * tech.lib_cells[design.node_cells[i]].height
            for i in range(design.n_nodes)
            if solution.node_die[i] == d
        )
        util[key] = area / spec.area
    return {
        "wirelength": total,
        "terminals": len(solution.terminals),
        "top_cells": int((die == 1).sum()),
        "bottom_cells": int((die == 0).sum()),
        "top_util": util["top"],
        "bottom_util": util["bottom"],
        "runtime": runtime,
    }


def format_report(rep: dict) -> str:
    lines = [
        f"wirelength = {rep['wirelength']:.1f}",
        f"terminals = {rep['terminals']}",
        f"top_cells = {rep['top_cells']}",
        f"bottom_cells = {rep['bottom_cells']}",
        f"top_util = {rep['top_util']:.4f}",
        f"bottom_util = {rep['bottom_util']:.4f}",
    ]
    if rep.get("runtime") is not None:
        lines.append(f"runtime = {rep['runtime']:.2f}")
    return "\n".join(lines) + "\n"
