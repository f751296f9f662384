"""Command-line interface.

Exit codes: 0 success, 1 input/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import load_run_config
from .errors import BgioptError, InputError, NumericalError
from .flood import kernel_name, mass_balance, simulate
from .rasters import write_ascii_grid
from .storms import design_storm, storm_from_csv, storm_to_csv


class _Parser(argparse.ArgumentParser):
    """argparse normally exits with status 2 on bad usage; route through the
    package's input-error path (exit 1) instead."""

    def error(self, message: str):
        raise InputError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bgiopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design-storm", help="emit a design storm CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--T", type=float, required=True, dest="return_period")
    p.add_argument("--duration-min", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="run one flood simulation")
    p.add_argument("--storm", required=True)
    p.add_argument("--catchment", required=True, help="run config file")
    p.add_argument("--zones", required=True, help="active-zone bitmask (hex)")
    p.add_argument("--out", default=None, help="write the max-depth raster here")

    p = sub.add_parser("optimize", help="NSGA-II optimization")
    p.add_argument("--config", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--return-period", type=float, default=None)
    g.add_argument("--composite", action="store_true")
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output-dir", default=None)

    p = sub.add_parser("evaluate-front", help="re-evaluate a front under a storm")
    p.add_argument("--config", required=True)
    p.add_argument("--front", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--under-period", type=float, default=None)
    g.add_argument("--under-uplift", type=float, default=None)
    p.add_argument("--ref", default=None, help="reference front CSV")

    p = sub.add_parser("stress-test", help="uplift stress test with benefit-cost")
    p.add_argument("--config", required=True)
    p.add_argument("--front", required=True)

    p = sub.add_parser("metrics", help="front disparity metrics")
    p.add_argument("--ref", required=True)
    p.add_argument("--trial", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--return-period", default="", help="label for the report")
    p.add_argument("--out", default=None)

    p = sub.add_parser("bca", help="benefit-cost ratios for a composite front")
    p.add_argument("--config", required=True)
    p.add_argument("--front", required=True)
    p.add_argument("--out", default=None)

    return parser


def _cmd_design_storm(args) -> int:
    cfg = load_run_config(args.config)
    storm = design_storm(
        args.return_period, args.duration_min, args.steps, cfg.ddf, cfg.profile
    )
    text = storm_to_csv(storm)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_run_config(args.catchment)
    ctx = pipeline.build_context(cfg, use_cache=False)
    with open(args.storm, "r", encoding="utf-8") as fh:
        storm = storm_from_csv(fh.read())
    genome = pipeline.genome_from_hex(args.zones, ctx.n_zones)
    field = simulate(ctx.catchment, storm, genome, cfg.flood)
    raster = write_ascii_grid(ctx.catchment.grid, field.max_depth)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(raster)
    else:
        sys.stdout.write(raster)
    m = field.mass
    sys.stdout.write(
        f"mass_balance residual={mass_balance(field):.3e} rain_in={m.rain_in:.6f} "
        f"infiltrated={m.infiltrated:.6f} outflow={m.outflow:.6f} stored={m.stored:.6f} "
        f"steps={field.n_steps} kernel={kernel_name()}\n"
    )
    return 0


def _cmd_optimize(args) -> int:
    cfg = load_run_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    ctx = pipeline.build_context(cfg)
    if args.composite:
        front, paths = pipeline.optimize_composite(ctx, snapshot_every=args.snapshot_every)
    else:
        front, paths = pipeline.optimize_single(
            ctx, args.return_period, snapshot_every=args.snapshot_every
        )
    sys.stdout.write(
        f"front: {paths['front']}\nzones: {paths['zones']}\n"
        f"solutions={len(front)} simulations={ctx.sim_runs} "
        f"cache_hits={ctx.cache.hits} failures={len(ctx.failures)}\n"
    )
    return 0


def _cmd_evaluate_front(args) -> int:
    cfg = load_run_config(args.config)
    ctx = pipeline.build_context(cfg)
    rows = pipeline.read_front_csv(args.front, ctx.n_zones)
    ref_rows = (
        pipeline.read_front_csv(args.ref, ctx.n_zones) if args.ref else None
    )
    result = pipeline.evaluate_front_under(
        ctx,
        rows,
        return_period=args.under_period,
        uplift=args.under_uplift,
        ref_rows=ref_rows,
    )
    sys.stdout.write(f"reeval: {result.reeval_path}\n")
    if result.metrics_path:
        sys.stdout.write(f"metrics: {result.metrics_path}\n")
    return 0


def _cmd_stress_test(args) -> int:
    cfg = load_run_config(args.config)
    ctx = pipeline.build_context(cfg)
    rows = pipeline.read_front_csv(args.front, ctx.n_zones)
    paths = pipeline.stress_test(ctx, rows)
    for u, path in paths.items():
        sys.stdout.write(f"uplift {u:g}: {path}\n")
    return 0


def _cmd_metrics(args) -> int:
    cfg = load_run_config(args.config)
    ctx = pipeline.build_context(cfg, use_cache=False)
    ref = pipeline.read_front_csv(args.ref, ctx.n_zones)
    trial = pipeline.read_front_csv(args.trial, ctx.n_zones)
    rows = pipeline.metrics_report(ref, trial, args.return_period)
    if args.out:
        pipeline.write_metrics_csv(args.out, rows)
    else:
        sys.stdout.write("metric,return_period,value,percent\n")
        for metric, period, value, percent in rows:
            v = repr(value) if isinstance(value, float) else str(value)
            pc = repr(percent) if isinstance(percent, float) else str(percent)
            sys.stdout.write(f"{metric},{period},{v},{pc}\n")
    return 0


def _cmd_bca(args) -> int:
    cfg = load_run_config(args.config)
    ctx = pipeline.build_context(cfg, use_cache=False)
    rows = pipeline.read_front_csv(args.front, ctx.n_zones)
    table = pipeline.bca_table(ctx, rows)
    if args.out:
        pipeline.write_bca_csv(args.out, table)
    else:
        sys.stdout.write("solution_id,lcc,ead,bc\n")
        for sid, lcc, ead_val, bc in table:
            bc_text = "NA" if bc is None else repr(bc)
            sys.stdout.write(f"{sid},{lcc!r},{ead_val!r},{bc_text}\n")
    return 0


_COMMANDS = {
    "design-storm": _cmd_design_storm,
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "evaluate-front": _cmd_evaluate_front,
    "stress-test": _cmd_stress_test,
    "metrics": _cmd_metrics,
    "bca": _cmd_bca,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2
    except BgioptError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
