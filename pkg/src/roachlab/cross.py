"""Time integration of the two-component cross-diffusion limit system.

The total population u diffuses through the divergence-form operator
Lap(c(v) u) with mobility c(v) = d + D q(v)/(p(v)+q(v)); the mobility is
lagged one step so each update is a linear banded solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from roachlab import kernels
from roachlab.errors import BlowUpError, ConfigError, DegenerateStateError, PositivityError
from roachlab.grid import Grid, helmholtz_solve, integrate
from roachlab.model import ModelParams, _q_raw, eval_dp, eval_dq, eval_q
from roachlab.rd3 import NEGATIVITY_FLOOR, StepControl, Trajectory, _steps_to, dt_guard

_PQ_FLOOR = 1e-14


@dataclass
class CrossState:
    """Discrete (u, v) pair at time t."""

    t: float
    u: np.ndarray
    v: np.ndarray
    grid: Grid

    def copy(self) -> "CrossState":
        return CrossState(self.t, self.u.copy(), self.v.copy(), self.grid)


def _pq_raw(v, params: ModelParams):
    q = _q_raw(np.asarray(v, dtype=float), params, params.switching)
    p = 1.0 - q
    total = p + q
    if np.any(np.abs(total) <= _PQ_FLOOR):
        raise DegenerateStateError("p + q vanished while evaluating the mobility")
    return p, q, total


def _pq(v, params: ModelParams):
    q = np.asarray(eval_q(v, params))
    p = 1.0 - q
    total = p + q
    if np.any(np.abs(total) <= _PQ_FLOOR):
        raise DegenerateStateError("p + q vanished while evaluating the mobility")
    return p, q, total


def mobility(v, params: ModelParams):
    """Effective diffusivity c(v) = d + D q/(p+q) of the total population."""
    p, q, total = _pq(v, params)
    out = params.d + params.D * q / total
    return float(out) if np.isscalar(v) else out


def mobility_deriv(v, params: ModelParams):
    """dc/dv, needed by steady-state Jacobians."""
    p, q, total = _pq(v, params)
    dq = np.asarray(eval_dq(v, params))
    dp = np.asarray(eval_dp(v, params))
    out = params.D * (dq * p - dp * q) / total**2
    return float(out) if np.isscalar(v) else out


def growth_factor(v, params: ModelParams):
    """Effective logistic rate (a1 p + a2 q)/(p+q) of the limit system."""
    p, q, total = _pq(v, params)
    out = (params.a1 * p + params.a2 * q) / total
    return float(out) if np.isscalar(v) else out


def growth_factor_deriv(v, params: ModelParams):
    p, q, total = _pq(v, params)
    dq = np.asarray(eval_dq(v, params))
    dp = np.asarray(eval_dp(v, params))
    num = (params.a1 * dp + params.a2 * dq) * total - (
        params.a1 * p + params.a2 * q
    ) * (dp + dq)
    out = num / total**2
    return float(out) if np.isscalar(v) else out


def _mobility_bands(c: np.ndarray, dt: float, h: float):
    """Bands of I - dt*Lap_1d(c * .): the mobility scales columns."""
    r = dt / (h * h)
    n = c.shape[-1]
    diag = 1.0 + 2.0 * r * c
    diag[..., 0] = 1.0 + r * c[..., 0]
    diag[..., -1] = 1.0 + r * c[..., -1]
    sub = -r * c[..., :-1]
    sup = -r * c[..., 1:]
    return sub, diag, sup


def step_cross(state: CrossState, ctrl: StepControl, params: ModelParams) -> CrossState:
    """One semi-implicit step: mobility frozen, reaction explicit.

    1D solves one banded system; 2D splits the operator per axis (two
    batched banded solves), which keeps exact mass conservation and is
    first-order accurate like the 1D coefficient lagging.
    """
    dt = ctrl.dt
    if dt > dt_guard(params):
        raise ConfigError(
            f"dt = {dt} exceeds the explicit logistic guard {dt_guard(params)}"
        )
    grid = state.grid
    p, q, total = _pq_raw(state.v, params)
    c = params.d + params.D * q / total
    phi = (params.a1 * p + params.a2 * q) / total
    reaction = phi * (1.0 - state.u) * state.u
    rhs = state.u + dt * reaction

    if grid.dim == 1:
        sub, diag, sup = _mobility_bands(c, dt, grid.h)
        u = kernels.tridiag_solve(sub, diag, sup, rhs)
    else:
        # axis-0 sweep: one system per column, then axis-1 sweep per row
        sub, diag, sup = _mobility_bands(np.ascontiguousarray(c.T), dt, grid.h)
        u = kernels.tridiag_solve_batch(sub, diag, sup, np.ascontiguousarray(rhs.T)).T
        sub, diag, sup = _mobility_bands(np.ascontiguousarray(c), dt, grid.h)
        u = kernels.tridiag_solve_batch(sub, diag, sup, np.ascontiguousarray(u))

    shift = 1.0 + dt * params.beta
    v_rhs = (state.v + dt * params.alpha * state.u) / shift
    v = helmholtz_solve(grid, v_rhs, dt * params.D_v / shift)

    new = CrossState(state.t + dt, u, v, grid)
    for arr in (new.u, new.v):
        if not np.all(np.isfinite(arr)):
            raise BlowUpError(f"non-finite field at t = {new.t}", t_last_good=state.t)
    if min(new.u.min(), new.v.min()) < NEGATIVITY_FLOOR:
        raise PositivityError(
            f"density reached {min(new.u.min(), new.v.min())} at t = {new.t}",
            t_last_good=state.t,
        )
    return new


def run_cross(
    initial: CrossState,
    params: ModelParams,
    ctrl: StepControl,
    t_end: float,
    snapshot_times=None,
    series_stride: int = 1,
) -> Trajectory:
    """Integrate the limit system; mirrors :func:`roachlab.rd3.run`."""
    if not (t_end > 0.0):
        raise ConfigError(f"t_end must be positive, got {t_end}")
    if snapshot_times is None:
        snapshot_times = [t_end]
    snapshot_times = sorted(set(float(t) for t in snapshot_times))
    if snapshot_times and snapshot_times[-1] > t_end + 1e-12:
        raise ConfigError("snapshot times must not exceed t_end")
    snap_steps = {_steps_to(t, ctrl.dt) for t in snapshot_times}
    nsteps = _steps_to(t_end, ctrl.dt)

    series = {"t": [], "mass": [], "min_v": []}

    def record(st: CrossState):
        series["t"].append(st.t)
        series["mass"].append(integrate(st.grid, st.u))
        series["min_v"].append(float(st.v.min()))

    state = initial.copy()
    states = []
    record(state)
    if 0 in snap_steps:
        states.append(state.copy())
    for k in range(1, nsteps + 1):
        state = step_cross(state, ctrl, params)
        if k % series_stride == 0 or k == nsteps:
            record(state)
        if k in snap_steps:
            states.append(state.copy())
    if not states:
        states.append(state.copy())
    return Trajectory(states=states, series={k: np.array(v) for k, v in series.items()})
