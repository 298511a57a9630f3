"""Text formats: the contest-style design input, the solution output, and
static SVG snapshots.

Input grammar (one directive per line, whitespace separated):

    Technology <name> <libCellCount>
    LibCell <name> <width> <height> <pinCount>
    Pin <pinName> <offsetX> <offsetY>          (per lib cell pin)
    DieSize <lowX> <lowY> <highX> <highY>
    TopDieMaxUtil <percent>
    BottomDieMaxUtil <percent>
    TopDieRows <startX> <startY> <rowLength> <rowHeight> <repeatCount>
    BottomDieRows <startX> <startY> <rowLength> <rowHeight> <repeatCount>
    TopDieTech <techName>
    BottomDieTech <techName>
    TerminalSize <width>
    TerminalSpacing <spacing>
    NumInstances <n>
    Inst <instName> <libCellName>              (n lines)
    NumNets <m>
    Net <netName> <pinCount>                   (per net)
    Pin <instName>/<libPinName>                (pinCount lines)

Solution format:

    TopDiePlacement <n1>
    Inst <name> <x> <y>
    BottomDiePlacement <n2>
    Inst <name> <x> <y>
    NumTerminals <t>
    Terminal <netName> <x> <y>

Placement coordinates are the cell's lower-left corner; terminal lines
store the terminal's lower-left corner (the evaluator adds half the
terminal size to recover its center). Coordinates are written as
integers, rounded half-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import Design, DesignError, DieSpec, LibCell, RowSpec, Technology


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class _Lines:
    def __init__(self, text: str):
        self.items = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            stripped = raw.strip()
            if stripped and not stripped.startswith("#"):
                self.items.append((lineno, stripped.split()))
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else None

    def take(self, keyword: str, nargs: int):
        item = self.peek()
        if item is None:
            raise ParseError(0, f"unexpected end of file, expected {keyword}")
        lineno, toks = item
        if toks[0] != keyword:
            raise ParseError(lineno, f"expected {keyword}, found {toks[0]}")
        if len(toks) - 1 != nargs:
            raise ParseError(
                lineno, f"{keyword} takes {nargs} fields, found {len(toks) - 1}"
            )
        self.pos += 1
        return lineno, toks[1:]


def _num(lineno: int, tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(lineno, f"not a number: {tok}") from None


def _int(lineno: int, tok: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(lineno, f"not an integer: {tok}") from None


def parse_design(text: str) -> Design:
    """Parse and fully validate a design file."""
    lines = _Lines(text)
    technologies: dict[str, Technology] = {}
    while (item := lines.peek()) is not None and item[1][0] == "Technology":
        lineno, args = lines.take("Technology", 2)
        tname = args[0]
        if tname in technologies:
            raise ParseError(lineno, f"duplicate technology {tname}")
        n_cells = _int(lineno, args[1])
        cells: dict[str, LibCell] = {}
        for _ in range(n_cells):
            lineno, args = lines.take("LibCell", 4)
            cname = args[0]
            if cname in cells:
                raise ParseError(lineno, f"duplicate lib cell {cname}")
            width = _num(lineno, args[1])
            height = _num(lineno, args[2])
            n_pins = _int(lineno, args[3])
            pins = []
            for _ in range(n_pins):
                plineno, pargs = lines.take("Pin", 3)
                pins.append(
                    (pargs[0], _num(plineno, pargs[1]), _num(plineno, pargs[2]))
                )
            try:
                cells[cname] = LibCell(cname, width, height, tuple(pins))
            except DesignError as exc:
                raise ParseError(lineno, str(exc)) from None
        technologies[tname] = Technology(tname, cells)
    if not technologies:
        raise ParseError(1, "no Technology section")

    lineno, args = lines.take("DieSize", 4)
    low_x, low_y = _num(lineno, args[0]), _num(lineno, args[1])
    high_x, high_y = _num(lineno, args[2]), _num(lineno, args[3])
    if low_x != 0 or low_y != 0:
        raise ParseError(lineno, "die lower-left corner must be the origin")
    if high_x <= 0 or high_y <= 0:
        raise ParseError(lineno, "degenerate die")

    lineno, args = lines.take("TopDieMaxUtil", 1)
    top_util = _num(lineno, args[0]) / 100.0
    if not (0 < top_util <= 1):
        raise ParseError(lineno, f"utilization {args[0]}% outside (0, 100]")
    lineno, args = lines.take("BottomDieMaxUtil", 1)
    bot_util = _num(lineno, args[0]) / 100.0
    if not (0 < bot_util <= 1):
        raise ParseError(lineno, f"utilization {args[0]}% outside (0, 100]")

    rows = {}
    for key in ("TopDieRows", "BottomDieRows"):
        lineno, args = lines.take(key, 5)
        rows[key] = (
            lineno,
            RowSpec(
                _num(lineno, args[0]),
                _num(lineno, args[1]),
                _num(lineno, args[2]),
                _num(lineno, args[3]),
                _int(lineno, args[4]),
            ),
        )
    lineno, args = lines.take("TopDieTech", 1)
    top_tech = args[0]
    if top_tech not in technologies:
        raise ParseError(lineno, f"unknown technology {top_tech}")
    lineno, args = lines.take("BottomDieTech", 1)
    bot_tech = args[0]
    if bot_tech not in technologies:
        raise ParseError(lineno, f"unknown technology {bot_tech}")

    lineno, args = lines.take("TerminalSize", 1)
    term_size = _num(lineno, args[0])
    lineno, args = lines.take("TerminalSpacing", 1)
    term_spacing = _num(lineno, args[0])

    try:
        top_die = DieSpec(high_x, high_y, top_util, rows["TopDieRows"][1], top_tech)
        bottom_die = DieSpec(
            high_x, high_y, bot_util, rows["BottomDieRows"][1], bot_tech
        )
    except DesignError as exc:
        raise ParseError(rows["TopDieRows"][0], str(exc)) from None

    lineno, args = lines.take("NumInstances", 1)
    n_inst = _int(lineno, args[0])
    node_names: list[str] = []
    node_cells: list[str] = []
    name_to_idx: dict[str, int] = {}
    for _ in range(n_inst):
        ilineno, iargs = lines.take("Inst", 2)
        if iargs[0] in name_to_idx:
            raise ParseError(ilineno, f"duplicate instance {iargs[0]}")
        name_to_idx[iargs[0]] = len(node_names)
        node_names.append(iargs[0])
        node_cells.append(iargs[1])
    nxt = lines.peek()
    if nxt is not None and nxt[1][0] == "Inst":
        raise ParseError(
            nxt[0], f"NumInstances declared {n_inst} but more Inst lines follow"
        )

    lineno, args = lines.take("NumNets", 1)
    n_nets = _int(lineno, args[0])
    net_names: list[str] = []
    nets: list[list[tuple[int, str]]] = []
    for _ in range(n_nets):
        nlineno, nargs = lines.take("Net", 2)
        if nargs[0] in net_names:
            raise ParseError(nlineno, f"duplicate net name {nargs[0]}")
        net_names.append(nargs[0])
        pins = []
        for _ in range(_int(nlineno, nargs[1])):
            plineno, pargs = lines.take("Pin", 1)
            ref = pargs[0]
            if "/" not in ref:
                raise ParseError(plineno, f"pin reference {ref} missing '/'")
            inst, pin_name = ref.split("/", 1)
            if inst not in name_to_idx:
                raise ParseError(plineno, f"unknown instance {inst}")
            pins.append((name_to_idx[inst], pin_name))
        nets.append(pins)
    nxt = lines.peek()
    if nxt is not None:
        raise ParseError(nxt[0], f"trailing content: {' '.join(nxt[1])}")

    try:
        return Design(
            top_die=top_die,
            bottom_die=bottom_die,
            technologies=technologies,
            node_names=node_names,
            node_cells=node_cells,
            net_names=net_names,
            nets=nets,
            terminal_size=term_size,
            terminal_spacing=term_spacing,
        )
    except DesignError as exc:
        raise ParseError(lineno, str(exc)) from None


def write_design(design: Design) -> str:
    """Serialize a design back into the input grammar (round-trip aid)."""
    out = []
    for tech in design.technologies.values():
        out.append(f"Technology {tech.name} {len(tech.lib_cells)}")
        for cell in tech.lib_cells.values():
            out.append(
                f"LibCell {cell.name} {_fmt(cell.width)} {_fmt(cell.height)} "
                f"{len(cell.pins)}"
            )
            for pname, dx, dy in cell.pins:
                out.append(f"Pin {pname} {_fmt(dx)} {_fmt(dy)}")
    out.append(
        f"DieSize 0 0 {_fmt(design.top_die.x_max)} {_fmt(design.top_die.y_max)}"
    )
    out.append(f"TopDieMaxUtil {_fmt(design.top_die.max_util * 100)}")
    out.append(f"BottomDieMaxUtil {_fmt(design.bottom_die.max_util * 100)}")
    for key, spec in (
        ("TopDieRows", design.top_die),
        ("BottomDieRows", design.bottom_die),
    ):
        r = spec.rows
        out.append(
            f"{key} {_fmt(r.start_x)} {_fmt(r.start_y)} {_fmt(r.row_length)} "
            f"{_fmt(r.row_height)} {r.repeat_count}"
        )
    out.append(f"TopDieTech {design.top_die.tech_name}")
    out.append(f"BottomDieTech {design.bottom_die.tech_name}")
    out.append(f"TerminalSize {_fmt(design.terminal_size)}")
    out.append(f"TerminalSpacing {_fmt(design.terminal_spacing)}")
    out.append(f"NumInstances {design.n_nodes}")
    for name, cell in zip(design.node_names, design.node_cells):
        out.append(f"Inst {name} {cell}")
    out.append(f"NumNets {design.n_nets}")
    for name, net in zip(design.net_names, design.nets):
        out.append(f"Net {name} {len(net)}")
        for node_idx, pin_name in net:
            out.append(f"Pin {design.node_names[node_idx]}/{pin_name}")
    return "\n".join(out) + "\n"


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass
class Solution:
    """Final per-die cell coordinates plus terminal lower-left corners."""

    node_die: list[int]  # 1 = top, 0 = bottom, per design node
    x: list[float]
    y: list[float]
    terminals: dict[int, tuple[float, float]] = field(default_factory=dict)


def write_solution(solution: Solution, design: Design) -> str:
    """Deterministic solution text: instances in input order per die,
    terminals in net input order, integer coordinates (half-up)."""
    top = [i for i in range(design.n_nodes) if solution.node_die[i] == 1]
    bottom = [i for i in range(design.n_nodes) if solution.node_die[i] == 0]
    out = [f"TopDiePlacement {len(top)}"]
    for i in top:
        out.append(
            f"Inst {design.node_names[i]} "
            f"{round_half_up(solution.x[i])} {round_half_up(solution.y[i])}"
        )
    out.append(f"BottomDiePlacement {len(bottom)}")
    for i in bottom:
        out.append(
            f"Inst {design.node_names[i]} "
            f"{round_half_up(solution.x[i])} {round_half_up(solution.y[i])}"
        )
    terms = sorted(solution.terminals.items())
    out.append(f"NumTerminals {len(terms)}")
    for net_idx, (tx, ty) in terms:
        out.append(
            f"Terminal {design.net_names[net_idx]} "
            f"{round_half_up(tx)} {round_half_up(ty)}"
        )
    return "\n".join(out) + "\n"


def parse_solution(text: str, design: Design) -> Solution:
    lines = _Lines(text)
    name_to_idx = {name: i for i, name in enumerate(design.node_names)}
    net_to_idx = {name: i for i, name in enumerate(design.net_names)}
    die_of: dict[int, int] = {}
    xs = [0.0] * design.n_nodes
    ys = [0.0] * design.n_nodes
    for key, die in (("TopDiePlacement", 1), ("BottomDiePlacement", 0)):
        lineno, args = lines.take(key, 1)
        for _ in range(_int(lineno, args[0])):
            ilineno, iargs = lines.take("Inst", 3)
            if iargs[0] not in name_to_idx:
                raise ParseError(ilineno, f"unknown instance {iargs[0]}")
            idx = name_to_idx[iargs[0]]
            if idx in die_of:
                raise ParseError(ilineno, f"instance {iargs[0]} placed twice")
            die_of[idx] = die
            xs[idx] = _num(ilineno, iargs[1])
            ys[idx] = _num(ilineno, iargs[2])
    missing = [n for n, i in name_to_idx.items() if i not in die_of]
    if missing:
        raise ParseError(0, f"instance {missing[0]} missing from solution")
    lineno, args = lines.take("NumTerminals", 1)
    terminals: dict[int, tuple[float, float]] = {}
    for _ in range(_int(lineno, args[0])):
        tlineno, targs = lines.take("Terminal", 3)
        if targs[0] not in net_to_idx:
            raise ParseError(tlineno, f"unknown net {targs[0]}")
        net_idx = net_to_idx[targs[0]]
        if net_idx in terminals:
            raise ParseError(tlineno, f"net {targs[0]} has two terminals")
        terminals[net_idx] = (_num(tlineno, targs[1]), _num(tlineno, targs[2]))
    return Solution(
        node_die=[die_of[i] for i in range(design.n_nodes)],
        x=xs,
        y=ys,
        terminals=terminals,
    )


_COLORS = {"top": "#b0736f", "bottom": "#4a6fa5", "filler": "#bbbbbb",
           "terminal": "#333333"}


def render_svg(design: Design, solution: Solution, which: str = "both",
               fillers=None) -> str:
    """One rectangle per node colored by die; terminals drawn as squares.

    `fillers` optionally supplies (x, y, w, h, die) tuples to draw filler
    outlines from a global-placement snapshot.
    """
    X = design.top_die.x_max
    Y = design.top_die.y_max
    dies = {"top": [1], "bottom": [0], "both": [0, 1]}[which]
    scale = 900.0 / max(X, Y)
    panels = []
    flat_w = {}
    for die in dies:
        tech = design.tech_of(die)
        rects = []
        for i in range(design.n_nodes):
            if solution.node_die[i] != die:
                continue
            cell = tech.lib_cells[design.node_cells[i]]
            rects.append(
                (solution.x[i], solution.y[i], cell.width, cell.height,
                 _COLORS["top" if die else "bottom"])
            )
        if fillers is not None:
            for fx, fy, fw, fh, fdie in fillers:
                if fdie == die:
                    rects.append((fx, fy, fw, fh, _COLORS["filler"]))
        for net_idx, (tx, ty) in sorted(solution.terminals.items()):
            rects.append(
                (tx, ty, design.terminal_size, design.terminal_size,
                 _COLORS["terminal"])
            )
        panels.append(rects)
    width = (len(panels) * (X + 20) + 20) * scale
    height = (Y + 40) * scale
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.2f} {height:.2f}">'
    ]
    for p, rects in enumerate(panels):
        ox = (20 + p * (X + 20)) * scale
        oy = 20 * scale
        parts.append(
            f'<rect x="{ox:.2f}" y="{oy:.2f}" width="{X * scale:.2f}" '
            f'height="{Y * scale:.2f}" fill="none" stroke="black"/>'
        )
        for rx, ry, rw, rh, color in rects:
            # SVG y grows downward; flip to keep the die origin bottom-left
            sy = oy + (Y - ry - rh) * scale
            parts.append(
                f'<rect x="{ox + rx * scale:.2f}" y="{sy:.2f}" '
                f'width="{max(rw * scale, 0.5):.2f}" '
                f'height="{max(rh * scale, 0.5):.2f}" '
                f'fill="{color}" fill-opacity="0.7"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
