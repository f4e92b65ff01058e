"""Command-line surface: simulate, linstab, neutral-curve, continue, eps-sweep.

Exit status 0 on success, 1 on configuration/validation errors (no output
files are written in that case), 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from roachlab import io as rio
from roachlab.config import RunConfig, override, parse_config
from roachlab.continuation import (
    ContinuationControl,
    SteadyProblem,
    continue_branch,
    field_profiles,
    newton_steady,
    pack_constant,
)
from roachlab.cross import run_cross
from roachlab.errors import ConfigError, RoachLabError, StuckBranchError
from roachlab.grid import Grid
from roachlab.linstab import max_growth_rate, neutral_curve
from roachlab.model import constant_steady_conserved, constant_steady_growth
from roachlab.rd3 import RDState, StepControl, run
from roachlab.sweeps import eps_sweep


def _load_config(args) -> RunConfig:
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
    config = parse_config(text)
    return override(config, out_dir=args.out, seed=args.seed)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _grid(config: RunConfig) -> Grid:
    return Grid(config.grid_dim, config.grid_n, config.params.L)


def cmd_simulate(args) -> int:
    config = _load_config(args)
    grid = _grid(config)
    ctrl = StepControl(dt=config.dt, scheme=config.scheme)
    snapshots = config.snapshots or (config.t_end,)
    os.makedirs(config.out_dir, exist_ok=True)
    head = rio.header_lines(config)

    if config.system == "cross-limit":
        initial = rio.make_initial_cross(config, grid)
        traj = run_cross(initial, config.params, ctrl, config.t_end,
                         snapshot_times=snapshots, series_stride=config.series_stride)
        field_names = ("u", "v")

        def fields_of(state):
            return (state.u, state.v)
    else:
        initial = rio.make_initial_rd(config, grid)
        traj = run(initial, config.params, ctrl, config.t_end,
                   snapshot_times=snapshots, series_stride=config.series_stride)
        field_names = ("u1", "u2", "v")

        def fields_of(state):
            return (state.u1, state.u2, state.v)

    snap_path = os.path.join(config.out_dir, "snapshots.csv")
    coords = ("x",) if grid.dim == 1 else ("x", "y")
    rows = []
    centers = grid.centers()
    for state in traj.states:
        values = fields_of(state)
        if grid.dim == 1:
            for i in range(grid.n):
                rows.append((state.t, centers[i], *(f[i] for f in values)))
        else:
            for i in range(grid.n):
                for j in range(grid.n):
                    rows.append((state.t, centers[i], centers[j], *(f[i, j] for f in values)))
    rio.write_csv(snap_path, ("t", *coords, *field_names), rows, head=head)
    rio.write_plot_script(snap_path, "snapshot")

    series_path = os.path.join(config.out_dir, "series.csv")
    names = list(traj.series)
    series_rows = list(zip(*(traj.series[name] for name in names)))
    rio.write_csv(series_path, names, series_rows, head=head)
    rio.write_plot_script(series_path, "series")
    _say(args, f"wrote {snap_path} and {series_path}")
    return 0


def cmd_linstab(args) -> int:
    config = _load_config(args)
    spec = config.linstab
    which = "B" if config.system == "rd3-growth" else "A"
    values = np.linspace(spec.parameter_min, spec.parameter_max, spec.parameter_steps)
    rows = []
    for value in values:
        lam, mode = max_growth_rate(which, float(value), config.params, n_max=spec.n_max)
        rows.append((float(value), lam, mode))
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "growth_rates.csv")
    name = "M" if which == "A" else "r"
    rio.write_csv(path, (name, "lambda_max", "mode"), rows, head=rio.header_lines(config))
    rio.write_plot_script(path, "series")
    _say(args, f"wrote {path}")
    return 0


def cmd_neutral_curve(args) -> int:
    config = _load_config(args)
    spec = config.neutral_curve
    which = "B" if config.system == "rd3-growth" else "A"
    values = np.linspace(spec.parameter_min, spec.parameter_max, spec.parameter_steps)
    rows = []
    pname = "M" if which == "A" else "r"
    for mode in spec.modes:
        curve = neutral_curve(
            which, mode, config.params, values,
            (spec.D_min, spec.D_max), D_scan=spec.D_scan,
        )
        for parameter, D in curve.points:
            rows.append((mode, pname, parameter, D))
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "neutral_curves.csv")
    rio.write_csv(path, ("n", "parameter_name", "parameter", "D"), rows,
                  head=rio.header_lines(config))
    rio.write_plot_script(path, "curve")
    _say(args, f"wrote {path} ({len(rows)} points)")
    return 0


def cmd_continue(args) -> int:
    config = _load_config(args)
    spec = config.continuation
    if config.grid_dim != 1:
        raise ConfigError("[grid] dim: continuation requires dim = 1")
    grid = _grid(config)
    system = "rd3-conserved" if config.system == "rd3-conserved" else (
        "rd3-growth" if config.system == "rd3-growth" else "cross-growth"
    )
    if config.system == "cross-limit" and config.params.a1 == 0.0 and config.params.a2 == 0.0:
        system = "cross-conserved"
    problem = SteadyProblem(system, config.params, grid)

    start_param = spec.parameter_start
    if system in ("rd3-conserved", "cross-conserved"):
        triple = constant_steady_conserved(start_param, config.params)
    else:
        triple = constant_steady_growth(problem.params_at(start_param))
    if problem.nfields == 2:
        triple = (triple[0] + triple[1], triple[2])
    guess = pack_constant(problem, triple)
    if spec.kick_amplitude != 0.0 and spec.kick_mode > 0:
        wave = spec.kick_amplitude * grid.cosine_mode(spec.kick_mode)
        guess[: grid.n] += wave
    if spec.warmup_t > 0.0 and problem.nfields == 3:
        state = RDState(
            0.0,
            guess[: grid.n].copy(),
            guess[grid.n : 2 * grid.n].copy(),
            guess[2 * grid.n : 3 * grid.n].copy(),
            grid,
        )
        pp = problem.params_at(start_param)
        traj = run(state, pp, StepControl(dt=config.dt), spec.warmup_t)
        final = traj.final
        guess[: 3 * grid.n] = np.concatenate([final.u1, final.u2, final.v])
    start = newton_steady(problem, guess, start_param)

    ctrl = ContinuationControl(
        ds0=spec.ds0,
        ds_max=spec.ds_max,
        max_steps=spec.max_steps,
        parameter_min=spec.parameter_min,
        parameter_max=spec.parameter_max,
    )
    try:
        branch = continue_branch(problem, start, direction=spec.direction, ctrl=ctrl)
    except StuckBranchError as exc:
        branch = exc.branch
        _say(args, f"branch stuck: {exc}")
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "branch.csv")
    marks = {}
    for event in branch.events:
        nearest = int(
            np.argmin([abs(pt.parameter - event.parameter) for pt in branch.points])
        )
        tag = f"{event.kind}@{event.parameter!r}"
        marks[nearest] = (marks.get(nearest, "") + ";" + tag).lstrip(";")
    rows = []
    for i, pt in enumerate(branch.points):
        profile = field_profiles(problem, pt.x)["usum"]
        rows.append(
            (0, pt.parameter, pt.arclength, profile[0],
             int(bool(pt.stable)), marks.get(i, ""))
        )
    rio.write_csv(
        path,
        ("branch_id", "parameter", "arclength", "value_at_x0", "stability", "event"),
        rows,
        head=rio.header_lines(config),
    )
    rio.write_plot_script(path, "branch")
    _say(args, f"wrote {path}: {len(branch.points)} points, "
               f"{len(branch.events)} events ({branch.termination})")
    for event in branch.events:
        _say(args, f"  {event.kind} at parameter {event.parameter}")
    return 0


def cmd_eps_sweep(args) -> int:
    config = _load_config(args)
    spec = config.eps_sweep
    grid = _grid(config)
    initial = rio.make_initial_cross(config, grid)
    report = eps_sweep(
        config.params,
        grid,
        spec.eps_values,
        initial.u,
        initial.v,
        dt=spec.dt,
        t_end=spec.t_end,
        split=config.ic.split,
        scheme=config.scheme,
    )
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "eps_sweep.csv")
    rows = list(
        zip(report.eps, report.gap_u_l2, report.gap_v_l2,
            report.defect_l2, report.rel21_residual)
    )
    slope_text = ", ".join(
        f"{name}={report.slopes[name]!r}" for name in sorted(report.slopes)
    )
    foot = [f"# slopes: {slope_text}"]
    for eps, message in sorted(report.errors.items()):
        foot.append(f"# error at eps={eps!r}: {message}")
    rio.write_csv(
        path,
        ("eps", "gap_u_L2", "gap_v_L2", "defect_L2", "rel21_residual"),
        rows,
        head=rio.header_lines(config),
        foot=foot,
    )
    rio.write_plot_script(path, "sweep")
    _say(args, f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roachlab",
        description="Numerical lab for the aggregation/dispersal reaction-diffusion system",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "simulate": cmd_simulate,
        "linstab": cmd_linstab,
        "neutral-curve": cmd_neutral_curve,
        "continue": cmd_continue,
        "eps-sweep": cmd_eps_sweep,
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to an INI config file")
        p.add_argument("--out", default=None, help="override [output] dir")
        p.add_argument("--seed", type=int, default=None, help="override [ic] seed")
        p.add_argument("--quiet", action="store_true")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except RoachLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
