"""3D global placement: filler insertion, initialization, the Nesterov/BB
optimization loop, and the gamma/lambda/alpha schedules.

Each iteration refreshes the tentative partition from z, re-resolves node
attributes for the heterogeneous technologies, assembles wirelength and
density gradients, and steps all three coordinates jointly. The loop ends
when the density overflow drops below the target or the iteration budget
runs out; the final tentative partition is committed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import density as dn
from . import wirelength as wl
from .model import (
    Design,
    FlatDesign,
    InfeasibleError,
    NumericalError,
    PlacementState,
    apply_technology,
    default_z_max,
    flatten,
    tentative_partition,
)


@dataclass
class GpConfig:
    seed: int = 1
    max_iters: int = 3000
    stop_overflow: float = 0.07
    alpha: float | str = "auto"
    alpha_scale: float = 0.05   # auto-alpha: fraction of the planar grad norm
    gamma_k: float = 4.0
    gamma_a: float = 1.5
    gamma_b: float = -0.5
    mu_min: float = 1.01
    mu_max: float = 1.10
    mu_ref: float = 2e-3        # relative WL growth mapping mu_max -> mu_min
    nz: int = 32
    nxy: int | None = None
    z_max: float | None = None
    optimizer: str = "nesterov"  # "nesterov" | "gd"
    wl_model: str = "bihpwl_fda"  # bihpwl_fda | bihpwl | plain_fda | plain
    init_noise: float = 0.01
    step0_bins: float = 0.1
    z_force_scale: float = 4.0   # extra weight on the density z-force
    pol_target: float = 0.95     # z-polarization required at convergence
    pol_extra_iters: int = 400
    dp_rounds: int = 2
    dp_window: int = 3
    swap_candidates: int = 10
    skip_dp: bool = False
    feas_boosts: int = 3
    feas_extra_iters: int = 200

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (0 < self.stop_overflow < 1):
            raise ValueError("stop_overflow must be in (0, 1)")

    @property
    def use_bistratal(self) -> bool:
        return self.wl_model in ("bihpwl_fda", "bihpwl")

    @property
    def use_fda(self) -> bool:
        return self.wl_model in ("bihpwl_fda", "plain_fda")


TRACE_COLUMNS = ("iter", "wl_smooth", "wl_exact", "cut", "overflow",
                 "lambda", "gamma")


@dataclass
class GpTrace:
    rows: list[tuple] = field(default_factory=list)

    def append(self, it, wl_smooth, wl_exact, cut, overflow, lam, gamma):
        self.rows.append(
            (it, wl_smooth, wl_exact, cut, overflow, lam, gamma)
        )

    @property
    def last(self):
        return self.rows[-1]

    def to_csv(self) -> str:
        out = [",".join(TRACE_COLUMNS)]
        for r in self.rows:
            out.append(
                f"{r[0]},{r[1]:.6f},{r[2]:.6f},{r[3]},{r[4]:.6f},"
                f"{r[5]:.6e},{r[6]:.6f}"
            )
        return "\n".join(out) + "\n"


@dataclass
class FillerSet:
    w: np.ndarray
    h: np.ndarray
    die: np.ndarray  # initialization die per filler

    @property
    def count(self) -> int:
        return len(self.w)


def insert_fillers(design: Design, flat: FlatDesign) -> FillerSet:
    """Per-die filler budget: die area x utilization minus movable area
    under that die's technology, clamped at zero. Fillers are squares at
    the die's row height and keep the same size on both dies."""
    ws, hs, dies = [], [], []
    over = []
    for die_id, spec, areas in (
        (1, design.top_die, flat.w_plus * flat.h_plus),
        (0, design.bottom_die, flat.w_minus * flat.h_minus),
    ):
        budget = spec.area * spec.max_util - float(areas.sum())
        over.append(budget < 0)
        side = spec.rows.row_height
        count = max(0, int(budget // (side * side)))
        ws.extend([side] * count)
        hs.extend([side] * count)
        dies.extend([die_id] * count)
    if all(over):
        raise InfeasibleError(
            "movable area exceeds capacity on both dies"
        )
    return FillerSet(
        w=np.asarray(ws, dtype=float),
        h=np.asarray(hs, dtype=float),
        die=np.asarray(dies, dtype=np.int64),
    )


def init_placement(design: Design, flat: FlatDesign, cfg: GpConfig,
                   fillers: FillerSet,
                   rng: np.random.Generator) -> PlacementState:
    """Cells at the die center plus Gaussian noise; z at z_max/4 plus
    noise; fillers uniform over their die's planar extent and z half."""
    z_max = cfg.z_max if cfg.z_max is not None else default_z_max(design)
    X, Y = design.top_die.x_max, design.top_die.y_max
    n = flat.n_cells
    nf = fillers.count
    total = n + nf

    x = np.empty(total)
    y = np.empty(total)
    z = np.empty(total)
    x[:n] = X / 2.0 + rng.normal(0.0, cfg.init_noise * X, size=n)
    y[:n] = Y / 2.0 + rng.normal(0.0, cfg.init_noise * Y, size=n)
    z[:n] = z_max / 4.0 + rng.normal(0.0, cfg.init_noise * z_max, size=n)

    fx = rng.uniform(0.0, 1.0, size=nf)
    fy = rng.uniform(0.0, 1.0, size=nf)
    fz = rng.uniform(0.001, 1.0, size=nf)
    half = z_max / 4.0
    x[n:] = fx * np.maximum(X - fillers.w, 0.0)
    y[n:] = fy * np.maximum(Y - fillers.h, 0.0)
    z[n:] = np.where(fillers.die == 1, half + fz * half, (1.0 - fz) * half)

    w_plus = np.concatenate([flat.w_plus, fillers.w])
    h_plus = np.concatenate([flat.h_plus, fillers.h])
    w_minus = np.concatenate([flat.w_minus, fillers.w])
    h_minus = np.concatenate([flat.h_minus, fillers.h])
    is_filler = np.zeros(total, dtype=bool)
    is_filler[n:] = True

    state = PlacementState(
        x=x, y=y, z=np.clip(z, 0.0, z_max / 2.0), z_max=z_max,
        partition=np.zeros(total, dtype=np.uint8),
        w_plus=w_plus, h_plus=h_plus, w_minus=w_minus, h_minus=h_minus,
        resolved_w=w_plus.copy(), resolved_h=h_plus.copy(),
        off_x=np.zeros(flat.n_pins), off_y=np.zeros(flat.n_pins),
        is_filler=is_filler, n_cells=n,
        names=list(design.node_names) + [f"_fill{i}" for i in range(nf)],
    )
    state.partition = tentative_partition(state.z, z_max, state.names)
    apply_technology(state, flat)
    _clamp(state, design)
    return state


def _clamp(state: PlacementState, design: Design) -> None:
    X, Y = design.top_die.x_max, design.top_die.y_max
    np.clip(state.x, 0.0, X - state.resolved_w, out=state.x)
    np.clip(state.y, 0.0, Y - state.resolved_h, out=state.y)
    np.clip(state.z, 0.0, state.z_max / 2.0, out=state.z)


def update_schedules(overflow: float, wl_prev: float, wl_cur: float,
                     lam: float, bin_size: float, cfg: GpConfig):
    """Next-iteration (gamma, lambda).

    gamma decays exponentially with falling overflow; lambda grows by a
    factor in [mu_min, mu_max], larger when the wirelength increased
    slowly over the last iteration.
    """
    gamma = cfg.gamma_k * bin_size * 10.0 ** (
        cfg.gamma_a * overflow + cfg.gamma_b
    )
    rel = max(0.0, wl_cur - wl_prev) / max(wl_prev, 1e-12)
    t = min(rel / cfg.mu_ref, 1.0)
    mu = cfg.mu_max * (cfg.mu_min / cfg.mu_max) ** t
    return gamma, lam * mu


def feasible_partition(design: Design, flat: FlatDesign,
                       partition: np.ndarray) -> bool:
    cells = partition[: flat.n_cells].astype(bool)
    top_area = float((flat.w_plus * flat.h_plus)[cells].sum())
    bot_area = float((flat.w_minus * flat.h_minus)[~cells].sum())
    top_cap = design.top_die.area * design.top_die.max_util
    bot_cap = design.bottom_die.area * design.bottom_die.max_util
    return top_area <= top_cap + 1e-6 and bot_area <= bot_cap + 1e-6


def _polarization_of(z, z_max, partition, is_filler) -> float:
    cells = ~is_filler
    if not cells.any():
        return 1.0
    dev = np.abs(2.0 * z[cells] / z_max - partition[cells].astype(float))
    return float((dev < 0.1).mean())


def z_polarization(state: PlacementState) -> float:
    """Fraction of cells with |2z/z_max - delta| < 0.1."""
    return _polarization_of(
        state.z, state.z_max, state.partition, state.is_filler
    )


@dataclass
class GpResult:
    state: PlacementState
    partition: np.ndarray
    trace: GpTrace
    converged: bool
    alpha: float
    polarization: float


class _Engine:
    """One evaluation context shared by the optimizer iterations."""

    def __init__(self, design, flat, state, grid, cfg):
        self.design = design
        self.flat = flat
        self.state = state
        self.grid = grid
        self.cfg = cfg
        self.alpha = 0.0
        self.lam = 0.0
        self.gamma = 1.0
        self.field_scale = 1.0
        npins = np.bincount(flat.pin_node, minlength=state.n_nodes).astype(float)
        zpins = np.bincount(flat.znet_node, minlength=state.n_nodes).astype(float)
        self.npins = npins
        self.nzpins = zpins

    def evaluate(self, coords):
        """Gradient and metrics at (x, y, z); clamps coords in place."""
        st = self.state
        st.x, st.y, st.z = coords
        np.clip(st.z, 0.0, st.z_max / 2.0, out=st.z)
        st.partition = tentative_partition(st.z, st.z_max)
        apply_technology(st, self.flat)
        _clamp(st, self.design)
        obj = wl.total_objective(
            st, self.flat, self.alpha, self.gamma,
            use_bistratal=self.cfg.use_bistratal,
            use_fda=self.cfg.use_fda,
        )
        dn.build_density_map(st, self.grid)
        dn.solve_field(self.grid, with_phi=False)
        fx, fy, fz = dn.density_gradient(st, self.grid)
        ovf = dn.overflow(st, self.grid, self.design)
        gx = obj.gradients.gx - self.lam * fx
        gy = obj.gradients.gy - self.lam * fy
        gz = obj.gradients.gz - self.lam * self.cfg.z_force_scale * fz
        q = st.resolved_w * st.resolved_h * st.depth
        precond = np.maximum(
            1.0, self.npins + self.nzpins + self.lam * q * self.field_scale
        )
        return (
            np.stack([gx, gy, gz]) / precond,
            obj,
            (fx, fy, fz),
            ovf,
        )


def run_global_place(design: Design, cfg: GpConfig,
                     flat: FlatDesign | None = None) -> GpResult:
    flat = flat or flatten(design)
    rng = np.random.default_rng(cfg.seed)
    fillers = insert_fillers(design, flat)
    state = init_placement(design, flat, cfg, fillers, rng)
    grid = dn.make_grid(
        design, state.z_max, flat.n_cells, nz=cfg.nz, nxy=cfg.nxy
    )
    bin_size = 0.5 * (grid.bin_x + grid.bin_y)
    eng = _Engine(design, flat, state, grid, cfg)
    eng.gamma = cfg.gamma_k * bin_size * 10.0 ** (cfg.gamma_a + cfg.gamma_b)
    trace = GpTrace()

    v = np.stack([state.x, state.y, state.z])
    u = v.copy()
    g, obj, forces, ovf = eng.evaluate(u)

    # alpha: fraction of the planar gradient mass against the cut term
    if cfg.alpha == "auto":
        planar = np.abs(obj.gradients.gx).sum() + np.abs(obj.gradients.gy).sum()
        cutg = np.abs(obj.gz_cut).sum()
        eng.alpha = cfg.alpha_scale * planar / max(cutg, 1e-12)
    else:
        eng.alpha = float(cfg.alpha)

    # lambda_0 balances gradient 1-norms; field_scale calibrates the
    # density part of the preconditioner
    fx, fy, fz = forces
    wn = (
        np.abs(obj.gradients.gx).sum()
        + np.abs(obj.gradients.gy).sum()
        + np.abs(obj.gradients.gz).sum()
    )
    dnorm = np.abs(fx).sum() + np.abs(fy).sum() + np.abs(fz).sum()
    eng.lam = float(wn / max(dnorm, 1e-12))
    q = state.resolved_w * state.resolved_h * state.depth
    fmag = (np.abs(fx) + np.abs(fy) + np.abs(fz)) / np.maximum(q, 1e-12)
    eng.field_scale = float(fmag.mean()) if len(fmag) else 1.0

    g, obj, forces, ovf = eng.evaluate(u)
    gnorm = float(np.abs(g).mean())
    step = cfg.step0_bins * bin_size / max(gnorm, 1e-12)
    step_scale = 1.0

    a_k = 1.0
    g_prev = g.copy()
    u_prev = u.copy()
    wl_prev = obj.bi_total
    converged = False
    bad_streak = 0
    snapshot = (u.copy(), v.copy(), a_k, step)
    boosts = 0
    it = 0
    budget = cfg.max_iters

    pol_budget_used = False
    while it < budget:
        trace.append(it, obj.smoothed, obj.bi_total, obj.cut_count, ovf,
                     eng.lam, eng.gamma)
        if ovf <= cfg.stop_overflow:
            zc = np.clip(v[2], 0, state.z_max / 2)
            final = tentative_partition(zc, state.z_max)
            pol = _polarization_of(zc, state.z_max, final, state.is_filler)
            feasible = feasible_partition(design, flat, final)
            if feasible and pol >= cfg.pol_target:
                converged = True
                break
            if feasible and not pol_budget_used:
                # polarization lags overflow: keep pushing with growing
                # lambda for a bounded number of extra iterations
                pol_budget_used = True
                budget = min(it + cfg.pol_extra_iters,
                             cfg.max_iters + cfg.pol_extra_iters)
            elif feasible:
                if it >= budget - 1:
                    converged = True
                    break
            elif boosts < cfg.feas_boosts:
                eng.lam *= 2.0
                boosts += 1
                budget = min(cfg.max_iters + cfg.feas_extra_iters * boosts,
                             it + cfg.feas_extra_iters + budget)
            else:
                raise InfeasibleError(
                    "committed partition violates utilization after "
                    f"{boosts} lambda boosts"
                )

        if cfg.optimizer == "gd":
            v_new = u - step_scale * step * g
            u_new = v_new
        else:
            v_new = u - step_scale * step * g
            a_next = (1.0 + math.sqrt(4.0 * a_k * a_k + 1.0)) / 2.0
            coef = (a_k - 1.0) / a_next
            u_new = v_new + coef * (v_new - v)
            a_k = a_next

        g_new, obj, forces, ovf = eng.evaluate(u_new)
        # evaluate() clamps the state arrays; mirror that into the iterate
        u_new = np.stack([state.x, state.y, state.z])

        if not np.isfinite(obj.smoothed) or not np.isfinite(g_new).all():
            bad_streak += 1
            if bad_streak > 5:
                raise NumericalError(
                    "objective diverged after 5 step reductions"
                )
            u, v, a_k, step = snapshot
            u = u.copy()
            v = v.copy()
            step_scale *= 0.5
            g, obj, forces, ovf = eng.evaluate(u)
            continue
        bad_streak = 0
        snapshot = (u_new.copy(), v_new.copy(), a_k, step)

        du = u_new - u_prev
        dg = g_new - g_prev
        dgn = float(np.linalg.norm(dg))
        if dgn > 1e-20:
            step = float(np.linalg.norm(du)) / dgn
        u_prev = u_new.copy()
        g_prev = g_new.copy()
        u, v, g = u_new, v_new, g_new

        eng.gamma, eng.lam = update_schedules(
            ovf, wl_prev, obj.bi_total, eng.lam, bin_size, cfg
        )
        wl_prev = obj.bi_total
        it += 1

    # commit the major iterate
    state.x, state.y, state.z = v[0], v[1], np.clip(v[2], 0, state.z_max / 2)
    state.partition = tentative_partition(state.z, state.z_max)
    apply_technology(state, flat)
    _clamp(state, design)
    if not feasible_partition(design, flat, state.partition):
        if not converged:
            raise InfeasibleError(
                "global placement ended with an infeasible partition"
            )
    return GpResult(
        state=state,
        partition=state.partition.copy(),
        trace=trace,
        converged=converged,
        alpha=eng.alpha,
        polarization=z_polarization(state),
    )
