"""Core domain types: netlist, technologies, dies, and 3D placement state.

The placement cuboid spans [0, x_max] x [0, y_max] x [0, z_max]. Every node
has a unified depth of z_max / 2, so corner z-coordinates live in
[0, z_max / 2] and the mid-plane z = z_max / 2 separates the two dies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ASSUMPTION_EPS = 0.05


class DesignError(ValueError):
    """Invalid or inconsistent design data (semantic/configuration errors)."""


class DomainError(ValueError):
    """A runtime value fell outside its documented domain."""


class InfeasibleError(RuntimeError):
    """The instance cannot satisfy its capacity/legality constraints."""


class NumericalError(RuntimeError):
    """Numerical optimization diverged beyond recovery."""


@dataclass(frozen=True)
class LibCell:
    name: str
    width: float
    height: float
    # (pin name, x offset, y offset), offsets relative to the cell corner
    pins: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DesignError(f"lib cell {self.name}: non-positive size")
        seen = set()
        for pname, dx, dy in self.pins:
            if pname in seen:
                raise DesignError(f"lib cell {self.name}: duplicate pin {pname}")
            seen.add(pname)
            if not (0 <= dx <= self.width and 0 <= dy <= self.height):
                raise DesignError(
                    f"lib cell {self.name}: pin {pname} offset outside cell"
                )

    def pin_offset(self, pin_name: str) -> tuple[float, float]:
        for pname, dx, dy in self.pins:
            if pname == pin_name:
                return dx, dy
        raise DesignError(f"lib cell {self.name}: no pin named {pin_name}")


@dataclass(frozen=True)
class Technology:
    name: str
    lib_cells: dict[str, LibCell]


@dataclass(frozen=True)
class RowSpec:
    start_x: float
    start_y: float
    row_length: float
    row_height: float
    repeat_count: int


@dataclass(frozen=True)
class DieSpec:
    x_max: float
    y_max: float
    max_util: float
    rows: RowSpec
    tech_name: str

    def __post_init__(self):
        if not (0 < self.max_util <= 1):
            raise DesignError(f"max_util {self.max_util} outside (0, 1]")
        r = self.rows
        if r.row_height <= 0 or r.row_length <= 0 or r.repeat_count < 1:
            raise DesignError("degenerate row specification")
        if r.start_x < 0 or r.start_y < 0:
            raise DesignError("rows start outside die")
        if r.start_x + r.row_length > self.x_max + 1e-9:
            raise DesignError("rows exceed die width")
        if r.start_y + r.row_height * r.repeat_count > self.y_max + 1e-9:
            raise DesignError("rows exceed die height")

    @property
    def area(self) -> float:
        return self.x_max * self.y_max


@dataclass
class Design:
    """Immutable parsed design: netlist + two technologies + die rules."""

    top_die: DieSpec
    bottom_die: DieSpec
    technologies: dict[str, Technology]
    node_names: list[str]
    node_cells: list[str]  # lib cell name per node
    net_names: list[str]
    nets: list[list[tuple[int, str]]]  # per net: (node index, lib pin name)
    terminal_size: float
    terminal_spacing: float

    def __post_init__(self):
        self.validate()

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_nets(self) -> int:
        return len(self.nets)

    def tech_of(self, die: int) -> Technology:
        spec = self.top_die if die == 1 else self.bottom_die
        return self.technologies[spec.tech_name]

    def validate(self) -> None:
        if self.top_die.x_max != self.bottom_die.x_max:
            raise DesignError("die widths differ (assumption violated)")
        ratio = self.top_die.y_max / self.bottom_die.y_max
        if abs(ratio - 1.0) >= ASSUMPTION_EPS:
            raise DesignError(
                f"die heights differ by {abs(ratio - 1.0):.3f} >= {ASSUMPTION_EPS}"
            )
        for spec in (self.top_die, self.bottom_die):
            if spec.tech_name not in self.technologies:
                raise DesignError(f"unknown technology {spec.tech_name}")
        if len(self.node_names) != len(self.node_cells):
            raise DesignError("node name/cell list length mismatch")
        if len(set(self.node_names)) != len(self.node_names):
            raise DesignError("duplicate instance name")
        if len(set(self.net_names)) != len(self.net_names):
            raise DesignError("duplicate net name")
        top_tech = self.technologies[self.top_die.tech_name]
        bot_tech = self.technologies[self.bottom_die.tech_name]
        for name, cell in zip(self.node_names, self.node_cells):
            for tech in (top_tech, bot_tech):
                if cell not in tech.lib_cells:
                    raise DesignError(
                        f"instance {name}: lib cell {cell} missing in "
                        f"technology {tech.name}"
                    )
        for net_name, net in zip(self.net_names, self.nets):
            if not net:
                raise DesignError(f"net {net_name} has no pins")
            for node_idx, pin_name in net:
                if not (0 <= node_idx < self.n_nodes):
                    raise DesignError(f"net {net_name}: bad node index {node_idx}")
                cell = self.node_cells[node_idx]
                for tech in (top_tech, bot_tech):
                    lib = tech.lib_cells[cell]
                    lib.pin_offset(pin_name)  # raises if missing
        if self.terminal_size <= 0 or self.terminal_spacing < 0:
            raise DesignError("bad terminal size/spacing")


@dataclass
class FlatDesign:
    """CSR view of a design for array kernels.

    Pins are sorted by net (input order within a net). Offsets carry both
    technologies so partition flips are plain selects.
    """

    design: Design
    n_cells: int
    n_nets: int
    # per-cell sizes under each die's technology
    w_plus: np.ndarray
    h_plus: np.ndarray
    w_minus: np.ndarray
    h_minus: np.ndarray
    # pin CSR (sorted by net)
    pin_node: np.ndarray
    pin_net: np.ndarray
    net_ptr: np.ndarray
    off_x_plus: np.ndarray
    off_y_plus: np.ndarray
    off_x_minus: np.ndarray
    off_y_minus: np.ndarray
    # net -> unique member nodes (for cut indicator / z-term)
    znet_node: np.ndarray
    znet_net: np.ndarray
    znet_ptr: np.ndarray
    # nets where some node contributes >= 2 pins (slow FDA path)
    net_has_multi: np.ndarray
    # node -> incident nets CSR (unique nets per node)
    node_net_ptr: np.ndarray
    node_net: np.ndarray

    @property
    def n_pins(self) -> int:
        return len(self.pin_node)


def flatten(design: Design) -> FlatDesign:
    n = design.n_nodes
    top_tech = design.technologies[design.top_die.tech_name]
    bot_tech = design.technologies[design.bottom_die.tech_name]

    w_plus = np.empty(n)
    h_plus = np.empty(n)
    w_minus = np.empty(n)
    h_minus = np.empty(n)
    for i, cell in enumerate(design.node_cells):
        cp = top_tech.lib_cells[cell]
        cm = bot_tech.lib_cells[cell]
        w_plus[i], h_plus[i] = cp.width, cp.height
        w_minus[i], h_minus[i] = cm.width, cm.height

    pin_node: list[int] = []
    pin_net: list[int] = []
    offs = ([], [], [], [])  # x+, y+, x-, y-
    net_ptr = [0]
    znet_node: list[int] = []
    znet_net: list[int] = []
    znet_ptr = [0]
    net_has_multi = np.zeros(design.n_nets, dtype=bool)
    for e, net in enumerate(design.nets):
        seen: dict[int, int] = {}
        for node_idx, pin_name in net:
            cell = design.node_cells[node_idx]
            dxp, dyp = top_tech.lib_cells[cell].pin_offset(pin_name)
            dxm, dym = bot_tech.lib_cells[cell].pin_offset(pin_name)
            pin_node.append(node_idx)
            pin_net.append(e)
            offs[0].append(dxp)
            offs[1].append(dyp)
            offs[2].append(dxm)
            offs[3].append(dym)
            seen[node_idx] = seen.get(node_idx, 0) + 1
        net_ptr.append(len(pin_node))
        if any(c > 1 for c in seen.values()):
            net_has_multi[e] = True
        for node_idx in seen:
            znet_node.append(node_idx)
            znet_net.append(e)
        znet_ptr.append(len(znet_node))

    znode = np.asarray(znet_node, dtype=np.int64)
    znet = np.asarray(znet_net, dtype=np.int64)
    order = np.lexsort((znet, znode))
    node_net = znet[order]
    counts = np.bincount(znode, minlength=n)
    node_net_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    return FlatDesign(
        design=design,
        n_cells=n,
        n_nets=design.n_nets,
        w_plus=w_plus,
        h_plus=h_plus,
        w_minus=w_minus,
        h_minus=h_minus,
        pin_node=np.asarray(pin_node, dtype=np.int64),
        pin_net=np.asarray(pin_net, dtype=np.int64),
        net_ptr=np.asarray(net_ptr, dtype=np.int64),
        off_x_plus=np.asarray(offs[0]),
        off_y_plus=np.asarray(offs[1]),
        off_x_minus=np.asarray(offs[2]),
        off_y_minus=np.asarray(offs[3]),
        znet_node=znode,
        znet_net=znet,
        znet_ptr=np.asarray(znet_ptr, dtype=np.int64),
        net_has_multi=net_has_multi,
        node_net_ptr=node_net_ptr,
        node_net=node_net,
    )


def default_z_max(design: Design) -> float:
    """Depth of the placement cuboid: twice the mean row height of the dies.

    Keeps z numerically commensurate with planar coordinates; configurable
    upstream.
    """
    return design.top_die.rows.row_height + design.bottom_die.rows.row_height


@dataclass
class PlacementState:
    """Mutable 3D coordinates plus partition-resolved attributes.

    Arrays cover cells followed by fillers; pins reference cells only.
    Corner coordinates: a node occupies [x, x+w] x [y, y+h] x [z, z+z_max/2].
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    z_max: float
    partition: np.ndarray  # uint8, 1 = top die
    w_plus: np.ndarray
    h_plus: np.ndarray
    w_minus: np.ndarray
    h_minus: np.ndarray
    resolved_w: np.ndarray
    resolved_h: np.ndarray
    off_x: np.ndarray  # resolved planar pin offsets, pin-indexed
    off_y: np.ndarray
    is_filler: np.ndarray
    n_cells: int
    names: list[str] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.x)

    @property
    def depth(self) -> float:
        return self.z_max / 2.0

    def copy(self) -> "PlacementState":
        return PlacementState(
            x=self.x.copy(),
            y=self.y.copy(),
            z=self.z.copy(),
            z_max=self.z_max,
            partition=self.partition.copy(),
            w_plus=self.w_plus,
            h_plus=self.h_plus,
            w_minus=self.w_minus,
            h_minus=self.h_minus,
            resolved_w=self.resolved_w.copy(),
            resolved_h=self.resolved_h.copy(),
            off_x=self.off_x.copy(),
            off_y=self.off_y.copy(),
            is_filler=self.is_filler,
            n_cells=self.n_cells,
            names=self.names,
        )


def tentative_partition(
    z: np.ndarray, z_max: float, names: list[str] | None = None
) -> np.ndarray:
    """Round normalized depth to a die indicator: ceil(2 z / z_max - 1/2).

    0 means bottom (z <= z_max / 4), 1 means top.
    """
    z = np.asarray(z, dtype=float)
    bad = (z < 0) | (z > z_max / 2.0)
    if bad.any():
        i = int(np.argmax(bad))
        label = names[i] if names and i < len(names) else f"#{i}"
        raise DomainError(f"node {label}: z={z[i]} outside [0, {z_max / 2.0}]")
    return np.ceil(2.0 * z / z_max - 0.5).astype(np.uint8)


def apply_technology(state: PlacementState, flat: FlatDesign) -> PlacementState:
    """Resolve node sizes and pin offsets from the current partition."""
    top = state.partition.astype(bool)
    state.resolved_w = np.where(top, state.w_plus, state.w_minus)
    state.resolved_h = np.where(top, state.h_plus, state.h_minus)
    pin_top = top[flat.pin_node]
    state.off_x = np.where(pin_top, flat.off_x_plus, flat.off_x_minus)
    state.off_y = np.where(pin_top, flat.off_y_plus, flat.off_y_minus)
    return state


def net_cut(deltas) -> int:
    """Cut indicator of one net: max delta - min delta over member nodes."""
    deltas = np.asarray(deltas)
    if deltas.size == 0:
        raise DomainError("net_cut on empty net")
    return int(deltas.max()) - int(deltas.min())


def net_cuts(partition: np.ndarray, flat: FlatDesign) -> np.ndarray:
    """Cut indicator for every net (1 = split)."""
    d = partition[flat.znet_node]
    hi = np.zeros(flat.n_nets, dtype=np.int64)
    lo = np.ones(flat.n_nets, dtype=np.int64)
    np.maximum.at(hi, flat.znet_net, d)
    np.minimum.at(lo, flat.znet_net, d)
    return (hi - lo).astype(np.uint8)


def pin_positions(state: PlacementState, flat: FlatDesign):
    """Planar pin coordinates under the current partition."""
    px = state.x[flat.pin_node] + state.off_x
    py = state.y[flat.pin_node] + state.off_y
    return px, py
