"""Time integration of the three-component system.

The 1/eps exchange is integrated exactly per step (with v frozen at the
step start), so the timestep is never constrained by the conversion rate;
diffusion is implicit, logistic growth and the pheromone source explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from roachlab import kernels
from roachlab.errors import BlowUpError, ConfigError, DomainError, PositivityError
from roachlab.grid import Grid, helmholtz_solve, integrate, l2_norm, laplacian
from roachlab.model import ModelParams, _q_raw

SCHEMES = ("imex-be", "imex-cn")

# Densities may dip this far below zero before a run is declared invalid.
NEGATIVITY_FLOOR = -1e-10


@dataclass
class RDState:
    """Discrete (u1, u2, v) triple at time t on a shared grid."""

    t: float
    u1: np.ndarray
    u2: np.ndarray
    v: np.ndarray
    grid: Grid

    def copy(self) -> "RDState":
        return RDState(self.t, self.u1.copy(), self.u2.copy(), self.v.copy(), self.grid)


@dataclass(frozen=True)
class StepControl:
    """Timestep and scheme selection."""

    dt: float = 1e-3
    scheme: str = "imex-be"

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


def dt_guard(params: ModelParams) -> float:
    """Largest timestep for which the explicit logistic part cannot overshoot."""
    amax = max(params.a1, params.a2)
    return 0.5 / amax if amax > 0.0 else np.inf


def _check_state(state: RDState, t_last_good: float) -> None:
    for arr in (state.u1, state.u2, state.v):
        if not np.all(np.isfinite(arr)):
            raise BlowUpError(
                f"non-finite field at t = {state.t}", t_last_good=t_last_good
            )
    low = min(state.u1.min(), state.u2.min(), state.v.min())
    if low < NEGATIVITY_FLOOR:
        raise PositivityError(
            f"density reached {low} at t = {state.t}", t_last_good=t_last_good
        )


def _logistic_euler(u1, u2, params: ModelParams, tau: float):
    s = u1 + u2
    return u1 + tau * params.a1 * (1.0 - s) * u1, u2 + tau * params.a2 * (1.0 - s) * u2


def _logistic_heun(u1, u2, params: ModelParams, tau: float):
    s = u1 + u2
    k1a = params.a1 * (1.0 - s) * u1
    k1b = params.a2 * (1.0 - s) * u2
    m1 = u1 + tau * k1a
    m2 = u2 + tau * k1b
    sm = m1 + m2
    k2a = params.a1 * (1.0 - sm) * m1
    k2b = params.a2 * (1.0 - sm) * m2
    return u1 + 0.5 * tau * (k1a + k2a), u2 + 0.5 * tau * (k1b + k2b)


def _v_update_be(v, source, params: ModelParams, dt: float, grid: Grid):
    # (I - dt*D_v*Lap + dt*beta) v' = v + dt*alpha*source, decay folded into the shift
    shift = 1.0 + dt * params.beta
    rhs = (v + dt * params.alpha * source) / shift
    return helmholtz_solve(grid, rhs, dt * params.D_v / shift)


def _step_be(state: RDState, ctrl: StepControl, params: ModelParams) -> RDState:
    dt = ctrl.dt
    grid = state.grid
    qv = _q_raw(state.v, params, params.switching)
    pv = 1.0 - qv
    s0 = state.u1 + state.u2

    r1, r2 = _logistic_euler(state.u1, state.u2, params, dt)
    e1, e2 = kernels.exchange_relax(r1, r2, qv, pv, dt / params.eps)

    u1 = helmholtz_solve(grid, e1, dt * params.d)
    u2 = helmholtz_solve(grid, e2, dt * (params.d + params.D))
    v = _v_update_be(state.v, s0, params, dt, grid)
    return RDState(state.t + dt, u1, u2, v, grid)


def _step_cn(state: RDState, ctrl: StepControl, params: ModelParams) -> RDState:
    # Palindromic arrangement: half reaction-exchange, trapezoidal diffusion,
    # mirrored half reaction-exchange.  Second order for smooth solutions.
    dt = ctrl.dt
    tau = 0.5 * dt
    grid = state.grid

    qv = _q_raw(state.v, params, params.switching)
    h1, h2 = _logistic_heun(state.u1, state.u2, params, tau)
    e1, e2 = kernels.exchange_relax(h1, h2, qv, 1.0 - qv, tau / params.eps)

    def cn_diffuse(u, a):
        rhs = u + 0.5 * dt * a * laplacian(grid, u)
        return helmholtz_solve(grid, rhs, 0.5 * dt * a)

    s_pre = e1 + e2
    u1 = cn_diffuse(e1, params.d)
    u2 = cn_diffuse(e2, params.d + params.D)
    s_post = u1 + u2

    shift = 1.0 + 0.5 * dt * params.beta
    rhs_v = (
        state.v
        + 0.5 * dt * (params.D_v * laplacian(grid, state.v) - params.beta * state.v)
        + 0.5 * dt * params.alpha * (s_pre + s_post)
    ) / shift
    v = helmholtz_solve(grid, rhs_v, 0.5 * dt * params.D_v / shift)

    qv = _q_raw(v, params, params.switching)
    e1, e2 = kernels.exchange_relax(u1, u2, qv, 1.0 - qv, tau / params.eps)
    u1, u2 = _logistic_heun(e1, e2, params, tau)
    return RDState(state.t + dt, u1, u2, v, grid)


def step(state: RDState, ctrl: StepControl, params: ModelParams) -> RDState:
    """Advance one timestep; raises on blow-up or a positivity violation."""
    if ctrl.dt > dt_guard(params):
        raise ConfigError(
            f"dt = {ctrl.dt} exceeds the explicit logistic guard {dt_guard(params)}"
        )
    try:
        if ctrl.scheme == "imex-be":
            new = _step_be(state, ctrl, params)
        else:
            new = _step_cn(state, ctrl, params)
    except DomainError as exc:
        # non-finite intermediates surface from the implicit solves
        raise BlowUpError(f"blow-up during step from t = {state.t}", t_last_good=state.t) from exc
    _check_state(new, t_last_good=state.t)
    return new


def defect_norm(state: RDState, params: ModelParams) -> float:
    """Spatial L2 norm of the exchange imbalance q(v) u1 - p(v) u2."""
    qv = _q_raw(np.asarray(state.v, dtype=float), params, params.switching)
    return l2_norm(state.grid, qv * state.u1 - (1.0 - qv) * state.u2)


@dataclass
class Trajectory:
    """Snapshots at requested times plus scalar time series."""

    states: list
    series: dict

    @property
    def final(self):
        return self.states[-1]


def _steps_to(t_target: float, dt: float) -> int:
    k = round(t_target / dt)
    if abs(k * dt - t_target) > 1e-9 * max(1.0, abs(t_target)):
        raise ConfigError(
            f"snapshot time {t_target} is not a multiple of dt = {dt}"
        )
    return k


def run(
    initial: RDState,
    params: ModelParams,
    ctrl: StepControl,
    t_end: float,
    snapshot_times=None,
    series_stride: int = 1,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_end``, recording snapshots and series.

    Snapshot times must be multiples of dt; the series holds t, total mass,
    min v and the exchange-defect L2 norm sampled every ``series_stride`` steps.
    """
    if not (t_end > 0.0):
        raise ConfigError(f"t_end must be positive, got {t_end}")
    if snapshot_times is None:
        snapshot_times = [t_end]
    snapshot_times = sorted(set(float(t) for t in snapshot_times))
    if snapshot_times and snapshot_times[-1] > t_end + 1e-12:
        raise ConfigError("snapshot times must not exceed t_end")
    snap_steps = {_steps_to(t, ctrl.dt) for t in snapshot_times}
    nsteps = _steps_to(t_end, ctrl.dt)

    series = {"t": [], "mass": [], "min_v": [], "defect_l2": []}

    def record(st: RDState):
        series["t"].append(st.t)
        series["mass"].append(integrate(st.grid, st.u1 + st.u2))
        series["min_v"].append(float(st.v.min()))
        series["defect_l2"].append(defect_norm(st, params))

    state = initial.copy()
    states = []
    record(state)
    if 0 in snap_steps:
        states.append(state.copy())
    for k in range(1, nsteps + 1):
        state = step(state, ctrl, params)
        if k % series_stride == 0 or k == nsteps:
            record(state)
        if k in snap_steps:
            states.append(state.copy())
    if not states:
        states.append(state.copy())
    return Trajectory(states=states, series={k: np.array(v) for k, v in series.items()})


def constant_state(grid: Grid, values, t: float = 0.0) -> RDState:
    """Spatially constant state from a (u1, u2, v) triple."""
    u1bar, u2bar, vbar = values
    return RDState(
        t,
        np.full(grid.shape, float(u1bar)),
        np.full(grid.shape, float(u2bar)),
        np.full(grid.shape, float(vbar)),
        grid,
    )
