"""Command-line front end.

Exit codes: 0 success, 1 failed property check, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, make_field, make_grid, manufactured_solution, optional_field
from .density import ShiftError, project_to_fs
from .fieldio import read_field_csv, write_field_csv, write_rows_csv, write_vtk
from .nonsmooth import beta_from_name
from .objective import NotAdmissible, ProblemData, J_sharp
from .optimizer import IterRecord, continuation, eps_schedule
from .pde import SolverError, solve_masked, solve_state, state_norms
from .shapes import boundary_curves, count_components, extract_shape, symmetric_difference, validate_fs

EXIT_OK, EXIT_PROPERTY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("penshape")


class _Context:
    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.grid = make_grid(cfg)
        self.beta = beta_from_name(cfg.beta, cfg.beta_params)
        self.rng = np.random.default_rng(cfg.seed)

    def field(self, name, f=None):
        return make_field(self.cfg, self.grid, name, self.beta, f)

    def write(self, name, values, column="value"):
        return write_field_csv(self.out / name, self.grid, values, column)

    def report(self, name, lines):
        text = "\n".join(lines) + "\n"
        (self.out / name).write_text(text)
        sys.stdout.write(text)


def _source(ctx):
    return ctx.field("f")


def cmd_solve_state(ctx: _Context, args):
    cfg = ctx.cfg
    f = _source(ctx)
    g = ctx.field("control")
    res = solve_state(ctx.grid, ctx.beta, cfg.eps, g, f, cfg.eps_source, tol=cfg.tol)
    ctx.write("state.csv", res.y, "y")
    lines = [f"grid={ctx.grid.nx}x{ctx.grid.ny}", f"eps={cfg.eps!r}"] + res.as_lines()
    norms = state_norms(ctx.grid, res.y)
    lines += [f"h1_norm={norms['h1']!r}", f"sup_norm={norms['sup']!r}"]
    if cfg.f == "manufactured":
        err = ctx.grid.norm(res.y - manufactured_solution(ctx.grid))
        lines.append(f"l2_error={err!r}")
    ctx.report("report.txt", lines)
    return EXIT_OK


def cmd_solve_shape(ctx: _Context, args):
    grid = ctx.grid
    g = ctx.field("control")
    report = validate_fs(grid, g)
    if not report.accepted:
        ctx.report("report.txt", ["control is not an admissible shape function"] + report.as_lines())
        return EXIT_NUMERIC
    f = _source(ctx)
    mask = extract_shape(grid, g)
    res = solve_masked(grid, ctx.beta, mask, f, tol=ctx.cfg.tol)
    ctx.write("state.csv", res.y, "y")
    ctx.write("mask.csv", mask.component.astype(float), "inside")
    rows = []
    for k, curve in enumerate(boundary_curves(grid, g)):
        rows.extend([k, float(x), float(y)] for x, y in curve)
    write_rows_csv(ctx.out / "boundary.csv", ["curve", "x", "y"], rows)
    lines = [
        f"area={mask.area!r}",
        f"components={count_components(mask.inside)}",
        f"iterations={res.iterations}",
        f"residual={res.residual:.6e}",
    ]
    y_d = optional_field(ctx.cfg, grid, "y_d", ctx.beta, f)
    if y_d is not None:
        data = ProblemData(grid, f, y_d, ctx.cfg.alpha, ctx.beta)
        lines.append(f"J_sharp={J_sharp(data, g)!r}")
    ctx.report("report.txt", lines + report.as_lines())
    return EXIT_OK


def cmd_certify(ctx: _Context, args):
    grid = ctx.grid
    g = ctx.field("control")
    target = ctx.cfg.target_rel * grid.norm(g)
    g_fs, report, err = project_to_fs(grid, g, target, rng=ctx.rng)
    ctx.write("certified.csv", g_fs, "g")
    lines = [f"target_error={target!r}", f"achieved_error={err!r}", f"target_met={err <= target}"]
    ctx.report("fs_report.txt", lines + report.as_lines())
    return EXIT_OK if report.accepted else EXIT_PROPERTY


def _resume_state(path: Path, grid):
    summary = json.loads((path / "summary.json").read_text())
    g = read_field_csv(path / "control.csv", grid)
    return g, summary["resume"]


def cmd_optimize(ctx: _Context, args):
    cfg, grid = ctx.cfg, ctx.grid
    opt = cfg.optimizer_config()
    try:
        schedule = eps_schedule(opt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    f = _source(ctx)
    y_d = ctx.field("y_d", f)
    anchor = optional_field(cfg, grid, "anchor", ctx.beta, f)
    data = ProblemData(grid, f, y_d, cfg.alpha, ctx.beta, anchor, cfg.eps_source)
    start, first_step, offset = 0, None, 0
    if args.resume:
        g0, state = _resume_state(Path(args.resume), grid)
        if state["stop_reason"] == "max_iters":
            start, first_step, offset = state["phase_index"], state["next_step"], state["iteration"]
        else:
            start = state["phase_index"] + 1
        if start >= len(schedule):
            print("nothing to resume: the epsilon schedule is complete")
            return EXIT_OK
    else:
        g0 = ctx.field("control")
    t0 = time.perf_counter()
    res = continuation(data, g0, opt, start_index=start, first_step=first_step, iteration_offset=offset)
    elapsed = time.perf_counter() - t0

    write_rows_csv(ctx.out / "trace.csv", list(IterRecord.FIELDS), [r.row() for r in res.trace.records])
    ctx.write("control.csv", res.g, "g")
    ctx.write("state.csv", res.trace.y, "y")
    ctx.write("certified.csv", res.certified, "g")
    ctx.write("state_sharp.csv", res.y_sharp, "y")
    ctx.write("mask.csv", res.mask.component.astype(float), "inside")

    last = res.phases[-1]
    summary = {
        "schedule": schedule[start:],
        "phases": [p.as_dict() for p in res.phases],
        "monotone_per_phase": all(res.trace.monotone(p.eps) for p in res.phases),
        "J_sharp": res.J_sharp,
        "certification_error": res.certification_error,
        "fs_report": {k: v for k, v in res.report.__dict__.items()} | {"accepted": res.report.accepted},
        "area": res.mask.area,
        "resume": {
            "phase_index": start + len(res.phases) - 1,
            "iteration": res.trace.records[-1].iteration,
            "next_step": res.trace.next_step,
            "stop_reason": last.stop_reason,
        },
    }
    truth = optional_field(cfg, grid, "truth", ctx.beta, f)
    if truth is not None:
        sd = symmetric_difference(grid, res.mask.component, extract_shape(grid, truth).component)
        summary["symmetric_difference"] = sd
        summary["symmetric_difference_rel"] = sd / grid.area
    (ctx.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"phases={len(res.phases)} J_sharp={res.J_sharp:.6e} elapsed={elapsed:.1f}s")
    if "symmetric_difference_rel" in summary:
        print(f"symmetric_difference_rel={summary['symmetric_difference_rel']:.4e}")
    return EXIT_OK


def cmd_verify(ctx: _Context, args):
    from .verify import run_all

    results = run_all(n=ctx.cfg.n, seed=ctx.cfg.seed, fault=args.fault)
    lines = [r.line() for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} properties passed")
    ctx.report("verify.txt", lines)
    return EXIT_OK if failed == 0 else EXIT_PROPERTY


def cmd_export_vtk(ctx: _Context, args):
    if not args.fields:
        raise ConfigError("export-vtk needs at least one field CSV")
    fields = {}
    for p in args.fields:
        path = Path(p)
        if not path.exists():
            raise ConfigError(f"field file not found: {path}")
        try:
            fields[path.stem] = read_field_csv(path, ctx.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    out = write_vtk(ctx.out / "fields.vtk", ctx.grid, fields)
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {
    "solve-state": cmd_solve_state,
    "solve-shape": cmd_solve_shape,
    "certify": cmd_certify,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "export-vtk": cmd_export_vtk,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="penshape", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--grid", type=int, metavar="N", help="nodes per side (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "optimize":
            p.add_argument("--resume", metavar="DIR", help="continue from a previous output directory")
        if name == "verify":
            p.add_argument("--fault", choices=["heaviside"], help=argparse.SUPPRESS)
        if name == "export-vtk":
            p.add_argument("fields", nargs="*", help="field CSV files to bundle")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, n=args.grid, out=args.out)
        out = Path(cfg.out) if args.out else cfg.resolve(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        ctx = _Context(cfg, out)
        return COMMANDS[args.command](ctx, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, NotAdmissible, ShiftError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
