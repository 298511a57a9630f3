"""End-to-end flow: global placement, terminal assignment, legalization,
detailed placement, and scoring."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import detail as dp
from . import evaluate as ev
from . import legalize as lg
from .globalplace import GpConfig, GpResult, GpTrace, run_global_place
from .hbt import assign_hbts
from .io import Solution
from .model import Design, FlatDesign, flatten


@dataclass
class PipelineResult:
    solution: Solution
    trace: GpTrace
    gp: GpResult
    dp_history: list[float] = field(default_factory=list)
    report: dict = field(default_factory=dict)
    legality: ev.LegalityReport = field(default_factory=ev.LegalityReport)


def run_pipeline(design: Design, cfg: GpConfig,
                 flat: FlatDesign | None = None) -> PipelineResult:
    t0 = time.perf_counter()
    flat = flat or flatten(design)
    gp = run_global_place(design, cfg, flat)
    state = gp.state
    n = flat.n_cells
    die = gp.partition[:n].astype(np.int64)

    assign = assign_hbts(state, flat)

    x = state.x[:n].copy()
    y = state.y[:n].copy()
    row_idx = np.zeros(n, dtype=np.int64)
    rowmaps = {}
    for d in (1, 0):
        spec = design.top_die if d == 1 else design.bottom_die
        rowmap = lg.build_rows(spec)
        rowmaps[d] = rowmap
        idxs = np.flatnonzero(die == d)
        if len(idxs) == 0:
            continue
        widths = (flat.w_plus if d == 1 else flat.w_minus)[idxs]
        names = [design.node_names[i] for i in idxs]
        lx, ly, rid = lg.tetris_legalize(x[idxs], y[idxs], widths, rowmap,
                                         names=names)
        lx = lg.abacus_refine(lx, ly, rid, x[idxs], widths, rowmap)
        x[idxs] = lx
        y[idxs] = ly
        row_idx[idxs] = rid

    term_low = lg.legalize_hbts(
        assign.as_dict(), design.terminal_size, design.terminal_spacing,
        design.top_die.x_max, design.top_die.y_max,
    )

    dp_history: list[float] = []
    if not cfg.skip_dp and n > 0:
        x, y, term_low, dp_history = dp.refine_pipeline(
            design, flat, die, x, y, term_low,
            row_idx_by_die={1: row_idx, 0: row_idx},
            rowmaps=rowmaps,
            rounds=cfg.dp_rounds,
            window=cfg.dp_window,
            max_candidates=cfg.swap_candidates,
        )

    solution = Solution(
        node_die=[int(d) for d in die],
        x=[float(v) for v in x],
        y=[float(v) for v in y],
        terminals={int(e): (float(a), float(b))
                   for e, (a, b) in term_low.items()},
    )
    legality = ev.check_legality(solution, design)
    rep = ev.report(solution, design, flat,
                    runtime=time.perf_counter() - t0)
    return PipelineResult(
        solution=solution,
        trace=gp.trace,
        gp=gp,
        dp_history=dp_history,
        report=rep,
        legality=legality,
    )
