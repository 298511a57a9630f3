"""Command-line front end: place | eval | gen | render.

Exit codes: 0 ok, 1 validation error, 2 infeasible, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .evaluate import check_legality, exact_d2d_wl, format_report, report
from .gen import generate_design
from .globalplace import GpConfig
from .io import (
    ParseError,
    Solution,
    parse_design,
    parse_solution,
    render_svg,
    write_design,
    write_solution,
)
from .model import DesignError, DomainError, InfeasibleError, NumericalError
from .pipeline import run_pipeline

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(GpConfig)}


def load_config(path: str | None) -> dict:
    """key = value lines mapping onto GpConfig fields."""
    if path is None:
        return {}
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DesignError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise DesignError(f"{path}:{lineno}: unknown config key {key}")
            values[key] = _coerce(key, val)
    return values


def _coerce(key: str, val: str):
    if key == "alpha" and val == "auto":
        return "auto"
    if key in ("wl_model", "optimizer"):
        return val
    if key in ("skip_dp",):
        return val.lower() in ("1", "true", "yes")
    if key in ("seed", "max_iters", "nz", "nxy", "dp_rounds", "dp_window",
               "swap_candidates", "feas_boosts", "feas_extra_iters"):
        return int(val)
    return float(val)


def build_gp_config(args) -> GpConfig:
    values = load_config(getattr(args, "config", None))
    overrides = {
        "seed": args.seed,
        "alpha": args.alpha,
        "stop_overflow": args.stop_overflow,
        "max_iters": args.max_iters,
        "skip_dp": args.skip_dp or None,
        "wl_model": args.wl_model,
        "nxy": args.bins,
    }
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return GpConfig(**values)


def cmd_place(args) -> int:
    with open(args.input) as fh:
        design = parse_design(fh.read())
    cfg = build_gp_config(args)
    print("config:", {f.name: getattr(cfg, f.name)
                      for f in dataclasses.fields(cfg)})
    result = run_pipeline(design, cfg)
    with open(args.output, "w") as fh:
        fh.write(write_solution(result.solution, design))
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(result.trace.to_csv())
    if args.svg:
        for which in ("top", "bottom"):
            with open(f"{args.svg}_{which}.svg", "w") as fh:
                fh.write(render_svg(design, result.solution, which))
    print(format_report(result.report), end="")
    if not result.legality.ok:
        for v in result.legality.violations[:20]:
            print("violation:", v, file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_eval(args) -> int:
    with open(args.input) as fh:
        design = parse_design(fh.read())
    with open(args.solution) as fh:
        solution = parse_solution(fh.read(), design)
    exact_d2d_wl(solution, design)  # validates terminal/net consistency
    rep = report(solution, design)
    print(format_report(rep), end="")
    legality = check_legality(solution, design)
    if not legality.ok:
        for v in legality.violations:
            print("violation:", v, file=sys.stderr)
        return EXIT_VALIDATION
    print("legality = pass")
    return EXIT_OK


def cmd_gen(args) -> int:
    design = generate_design(
        n_cells=args.cells,
        seed=args.seed if args.seed is not None else 1,
        hetero_factor=args.hetero,
        n_nets=args.nets,
        top_util=args.top_util,
        bottom_util=args.bottom_util,
    )
    text = write_design(design)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_render(args) -> int:
    with open(args.input) as fh:
        design = parse_design(fh.read())
    with open(args.solution) as fh:
        solution = parse_solution(fh.read(), design)
    with open(args.output, "w") as fh:
        fh.write(render_svg(design, solution, args.die))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2dplace",
        description="Die-to-die 3D analytical placement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", help="run the full placement pipeline")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha")
    p.add_argument("--stop-overflow", type=float, dest="stop_overflow")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--skip-dp", action="store_true", dest="skip_dp")
    p.add_argument("--wl-model", dest="wl_model",
                   choices=["bihpwl_fda", "bihpwl", "plain_fda", "plain"])
    p.add_argument("--bins", type=int, help="override planar bin count")
    p.add_argument("--trace", help="write per-iteration CSV here")
    p.add_argument("--svg", help="prefix for SVG snapshots")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("eval", help="score and legality-check a solution")
    p.add_argument("input")
    p.add_argument("solution")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="generate a synthetic design")
    p.add_argument("-o", "--output")
    p.add_argument("--cells", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--nets", type=int)
    p.add_argument("--hetero", type=float, default=1.3)
    p.add_argument("--top-util", type=float, default=0.70, dest="top_util")
    p.add_argument("--bottom-util", type=float, default=0.75,
                   dest="bottom_util")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("render", help="render a solution to SVG")
    p.add_argument("input")
    p.add_argument("solution")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--die", choices=["top", "bottom", "both"], default="both")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if getattr(args, "alpha", None) not in (None, "auto"):
            args.alpha = float(args.alpha)
        return args.func(args)
    except (ParseError, DesignError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
