"""Epsilon sweeps: three-component runs against the cross-diffusion limit.

Quantifies the fast-reaction limit numerically: gap norms between the
three-component solution and the limit solution at the final time, the
exchange-defect norm, the slow-manifold relation residual, and fitted
log-log convergence slopes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from roachlab.cross import CrossState, run_cross
from roachlab.errors import AlignmentError, ConfigError, FitError, RoachLabError
from roachlab.grid import Grid, l2_norm
from roachlab.model import ModelParams, eval_p, eval_q
from roachlab.rd3 import RDState, StepControl, defect_norm, run

SPLIT_MODES = ("manifold", "half")


@dataclass
class SweepReport:
    """Per-epsilon limit diagnostics plus fitted log-log slopes."""

    eps: np.ndarray
    gap_u_l2: np.ndarray
    gap_v_l2: np.ndarray
    defect_l2: np.ndarray
    rel21_residual: np.ndarray
    slopes: dict
    errors: dict  # eps -> failure message for runs that blew up


def split_initial(u_total: np.ndarray, v0: np.ndarray, params: ModelParams, mode: str):
    """Split a total density into (u1, u2) for the three-component solver.

    'manifold' uses the exchange-equilibrium ratio p : q at v0 (no initial
    layer); 'half' splits evenly.
    """
    if mode == "manifold":
        p = np.asarray(eval_p(v0, params))
        q = np.asarray(eval_q(v0, params))
        return p / (p + q) * u_total, q / (p + q) * u_total
    if mode == "half":
        return 0.5 * u_total, 0.5 * u_total
    raise ConfigError(f"split mode must be one of {SPLIT_MODES}, got {mode!r}")


def eps_sweep(
    params: ModelParams,
    grid: Grid,
    eps_values,
    u_total0: np.ndarray,
    v0: np.ndarray,
    dt: float = 2.5e-4,
    t_end: float = 1.0,
    split: str = "manifold",
    scheme: str = "imex-be",
) -> SweepReport:
    """Run the three-component system per epsilon against one limit run.

    All runs share the grid, timestep and initial total density; solver
    failures annotate the corresponding entry instead of aborting the sweep.
    """
    eps_values = [float(e) for e in eps_values]
    if len(eps_values) < 3:
        raise ConfigError("need at least 3 epsilon values")
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ConfigError("epsilon values must be strictly decreasing")

    ctrl = StepControl(dt=dt, scheme=scheme)
    limit = run_cross(
        CrossState(0.0, np.array(u_total0, dtype=float), np.array(v0, dtype=float), grid),
        params,
        ctrl,
        t_end,
    ).final

    gaps_u, gaps_v, defects, rel21s = [], [], [], []
    errors = {}
    for eps in eps_values:
        pp = replace(params, eps=eps)
        u1, u2 = split_initial(np.array(u_total0, dtype=float), np.array(v0, dtype=float), pp, split)
        try:
            final = run(
                RDState(0.0, u1, u2, np.array(v0, dtype=float), grid), pp, ctrl, t_end
            ).final
        except RoachLabError as exc:
            errors[eps] = str(exc)
            gaps_u.append(np.nan)
            gaps_v.append(np.nan)
            defects.append(np.nan)
            rel21s.append(np.nan)
            continue
        gaps_u.append(l2_norm(grid, (final.u1 + final.u2) - limit.u))
        gaps_v.append(l2_norm(grid, final.v - limit.v))
        defects.append(defect_norm(final, pp))
        q = np.asarray(eval_q(final.v, pp))
        p = 1.0 - q
        rel21s.append(l2_norm(grid, final.u1 - p * (final.u1 + final.u2) / (p + q)))

    report = SweepReport(
        eps=np.array(eps_values),
        gap_u_l2=np.array(gaps_u),
        gap_v_l2=np.array(gaps_v),
        defect_l2=np.array(defects),
        rel21_residual=np.array(rel21s),
        slopes={},
        errors=errors,
    )
    for name in ("gap_u_l2", "gap_v_l2", "defect_l2", "rel21_residual"):
        values = getattr(report, name)
        ok = np.isfinite(values) & (values > 0)
        if ok.sum() >= 3:
            report.slopes[name] = slope_fit(list(zip(report.eps[ok], values[ok])))
    return report


def slope_fit(pairs) -> float:
    """Least-squares slope of log(value) against log(eps)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise FitError(f"need at least 3 pairs, got {len(pairs)}")
    eps = np.array([p[0] for p in pairs], dtype=float)
    val = np.array([p[1] for p in pairs], dtype=float)
    if np.any(eps <= 0) or np.any(val <= 0):
        raise FitError("slope fit requires positive epsilons and values")
    lx, ly = np.log(eps), np.log(val)
    lx = lx - lx.mean()
    return float((lx @ (ly - ly.mean())) / (lx @ lx))


def _profiles_at(branch, parameter: float):
    """Interpolated total-density profiles where the branch crosses a parameter."""
    from roachlab.continuation import field_profiles

    pts = branch.points
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        pa, pb = a.parameter, b.parameter
        if (pa - parameter) * (pb - parameter) <= 0 and pa != pb:
            w = (parameter - pa) / (pb - pa)
            x = (1 - w) * a.x + w * b.x
            out.append(field_profiles(branch.problem, x)["usum"])
    return out


def steady_structure_compare(branches_by_eps: dict, branch_limit, parameters) -> list:
    """L2 distances between steady profiles of the eps-branches and the limit.

    For each (eps, parameter) the best match over branch crossings and
    spatial reflection is reported as (eps, parameter, distance); rows for
    parameters outside a branch's window raise an alignment error.
    """
    grid = branch_limit.problem.grid
    h = grid.cell_volume
    rows = []
    for eps in sorted(branches_by_eps, reverse=True):
        branch = branches_by_eps[eps]
        for parameter in parameters:
            ours = _profiles_at(branch, parameter)
            theirs = _profiles_at(branch_limit, parameter)
            if not ours or not theirs:
                raise AlignmentError(
                    f"parameter {parameter} outside a branch window (eps={eps})"
                )
            best = np.inf
            for u in ours:
                for w in theirs:
                    d = min(
                        np.sqrt(((u - w) ** 2).sum() * h),
                        np.sqrt(((u[::-1] - w) ** 2).sum() * h),
                    )
                    best = min(best, d)
            rows.append((eps, parameter, float(best)))
    return rows
