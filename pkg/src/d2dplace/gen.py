"""Seeded synthetic design generator.

Desk-scale stand-ins for contest-style benchmarks: a small standard-cell
library per die, a net degree mix of 70% 2-pin / 20% 3-5-pin / 10%
6-16-pin, and a die sized so a balanced partition fits both utilization
budgets with headroom.
"""

from __future__ import annotations

import math

import numpy as np

from .model import Design, DieSpec, LibCell, RowSpec, Technology

BOTTOM_ROW_HEIGHT = 10


def _scale(v: float, factor: float) -> int:
    return max(1, round(v * factor))


def _make_lib(rng: np.random.Generator, n_types: int, row_height: int,
              factor: float) -> tuple[list[LibCell], list[LibCell]]:
    bottom, top = [], []
    top_h = _scale(row_height, factor)
    for t in range(n_types):
        w = int(rng.integers(1, 7))
        name = f"C{t}"
        n_pins = int(rng.integers(2, 5))
        pins_b, pins_t = [], []
        w_t = _scale(w, factor)
        for p in range(n_pins):
            dx = int(rng.integers(0, w + 1))
            dy = int(rng.integers(0, row_height + 1))
            pins_b.append((f"P{p}", float(dx), float(dy)))
            pins_t.append(
                (f"P{p}", float(min(_scale(dx, factor) if dx else 0, w_t)),
                 float(min(_scale(dy, factor) if dy else 0, top_h)))
            )
        bottom.append(LibCell(name, float(w), float(row_height), tuple(pins_b)))
        top.append(LibCell(name, float(w_t), float(top_h), tuple(pins_t)))
    return bottom, top


def generate_design(
    n_cells: int,
    seed: int,
    hetero_factor: float = 1.3,
    n_nets: int | None = None,
    top_util: float = 0.70,
    bottom_util: float = 0.75,
    n_cell_types: int = 8,
    fill_fraction: float = 0.55,
    terminal_size: int = 4,
    terminal_spacing: int = 2,
) -> Design:
    """Deterministic synthetic design in the repo's input grammar."""
    rng = np.random.default_rng(seed)
    bottom_lib, top_lib = _make_lib(
        rng, n_cell_types, BOTTOM_ROW_HEIGHT, hetero_factor
    )
    kinds = rng.integers(0, n_cell_types, size=n_cells)
    node_names = [f"I{i}" for i in range(n_cells)]
    node_cells = [f"C{int(k)}" for k in kinds]

    area_bot = sum(
        bottom_lib[int(k)].width * bottom_lib[int(k)].height for k in kinds
    )
    area_top = sum(top_lib[int(k)].width * top_lib[int(k)].height for k in kinds)
    need = max(
        area_top / (2 * top_util * fill_fraction),
        area_bot / (2 * bottom_util * fill_fraction),
    )
    top_h = top_lib[0].height
    side = math.ceil(math.sqrt(max(need, 100.0)))
    side = int(math.ceil(side / BOTTOM_ROW_HEIGHT) * BOTTOM_ROW_HEIGHT)

    n_nets = n_nets if n_nets is not None else max(1, int(round(n_cells * 0.97)))
    net_names = [f"N{e}" for e in range(n_nets)]
    nets = []
    lib_pin_count = {f"C{t}": len(bottom_lib[t].pins) for t in range(n_cell_types)}
    for _ in range(n_nets):
        r = rng.random()
        if r < 0.70:
            deg = 2
        elif r < 0.90:
            deg = int(rng.integers(3, 6))
        else:
            deg = int(rng.integers(6, 17))
        deg = min(deg, n_cells)
        members = rng.choice(n_cells, size=deg, replace=False)
        pins = []
        for node in members:
            cell = node_cells[int(node)]
            pin = int(rng.integers(0, lib_pin_count[cell]))
            pins.append((int(node), f"P{pin}"))
        nets.append(pins)

    tech_bottom = Technology("TB", {c.name: c for c in bottom_lib})
    tech_top = Technology("TT", {c.name: c for c in top_lib})
    return Design(
        top_die=DieSpec(
            float(side), float(side), top_util,
            RowSpec(0.0, 0.0, float(side), float(top_h),
                    int(side // top_h)),
            "TT",
        ),
        bottom_die=DieSpec(
            float(side), float(side), bottom_util,
            RowSpec(0.0, 0.0, float(side), float(BOTTOM_ROW_HEIGHT),
                    int(side // BOTTOM_ROW_HEIGHT)),
            "TB",
        ),
        technologies={"TT": tech_top, "TB": tech_bottom},
        node_names=node_names,
        node_cells=node_cells,
        net_names=net_names,
        nets=nets,
        terminal_size=float(terminal_size),
        terminal_spacing=float(terminal_spacing),
    )
