"""Model parameters, switching functions and pointwise reaction terms.

The model tracks a slow population u1, a fast population u2 and a pheromone
concentration v.  Switching between the populations happens at rate 1/eps
with the balance q(v)*u1 - p(v)*u2; q is large for low and for high pheromone
levels (dispersal) and small in between (aggregation).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from roachlab.errors import DegenerateStateError, DomainError

# Floor below which p+q counts as degenerate (the model assumes p+q > 0).
_PQ_FLOOR = 1e-14


class SwitchingKind(enum.Enum):
    """Functional form of the switching pair (q, p) with p = 1 - q."""

    TANH_SUM = "tanh-sum"          # sum of a falling and a rising sigmoid
    DECREASING = "decreasing-only"  # falling sigmoid only (no crowding term)
    PIECEWISE = "piecewise"         # branchwise form: larger of the two sigmoids


@dataclass(frozen=True)
class ModelParams:
    """Scalar coefficients of the reaction-diffusion model.

    d:      diffusivity of the slow group
    D:      extra diffusivity of the fast group (fast group moves with d + D)
    D_v:    pheromone diffusivity
    a1, a2: intrinsic growth rates of slow/fast groups
    alpha:  pheromone production rate
    beta:   pheromone decay rate
    eps:    conversion timescale (switching rate is 1/eps)
    gamma1, gamma2: sigmoid steepnesses
    v_star, v_sharp: lower/upper switching thresholds
    L:      domain side length
    switching: functional form of (q, p)
    """

    d: float = 0.05
    D: float = 0.15
    D_v: float = 0.1
    a1: float = 0.0
    a2: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    eps: float = 1e-3
    gamma1: float = 20.0
    gamma2: float = 20.0
    v_star: float = 1.0
    v_sharp: float = 1.25
    L: float = 1.0
    switching: SwitchingKind = SwitchingKind.TANH_SUM

    def __post_init__(self):
        positive = {
            "d": self.d, "D": self.D, "D_v": self.D_v, "alpha": self.alpha,
            "beta": self.beta, "eps": self.eps, "gamma1": self.gamma1,
            "gamma2": self.gamma2, "L": self.L,
        }
        for name, value in positive.items():
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        for name, value in (("a1", self.a1), ("a2", self.a2)):
            if value < 0.0 or not math.isfinite(value):
                raise ValueError(f"{name} must be nonnegative, got {value}")
        if not (0.0 < self.v_star < self.v_sharp):
            raise ValueError(
                f"thresholds must satisfy 0 < v_star < v_sharp, got "
                f"v_star={self.v_star}, v_sharp={self.v_sharp}"
            )
        if self.switching is SwitchingKind.TANH_SUM:
            # Exact condition for q <= 1 (hence p >= 0) on v >= 0.
            if self.gamma2 > self.gamma1 or self.gamma1 * self.v_star > self.gamma2 * self.v_sharp:
                raise ValueError(
                    "tanh-sum switching requires gamma2 <= gamma1 and "
                    "gamma1*v_star <= gamma2*v_sharp so that p = 1 - q stays nonnegative"
                )


def _sech2(x: np.ndarray) -> np.ndarray:
    # 4 e^{-2|x|} / (1 + e^{-2|x|})^2, overflow-free for any argument
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def _check_v(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("pheromone concentration v must be nonnegative")
    return arr


def _falling(v, params: ModelParams):
    return 0.5 * (1.0 - np.tanh(params.gamma1 * (v - params.v_star)))


def _rising(v, params: ModelParams):
    return 0.5 * (1.0 + np.tanh(params.gamma2 * (v - params.v_sharp)))


def switch_point(params: ModelParams) -> float:
    """Concentration where the falling and rising sigmoid branches cross.

    This is the breakpoint of the piecewise switching form; for equal
    steepnesses it is the midpoint of the two thresholds.
    """
    if params.gamma1 == params.gamma2:
        return 0.5 * (params.v_star + params.v_sharp)

    def gap(v):
        return math.tanh(params.gamma1 * (v - params.v_star)) + math.tanh(
            params.gamma2 * (v - params.v_sharp)
        )

    return brentq(gap, params.v_star, params.v_sharp, xtol=1e-14)


def _q_raw(arr: np.ndarray, params: ModelParams, kind: SwitchingKind) -> np.ndarray:
    # no domain validation; solver internals may probe v slightly below 0
    if kind is SwitchingKind.TANH_SUM:
        return _falling(arr, params) + _rising(arr, params)
    if kind is SwitchingKind.DECREASING:
        return _falling(arr, params)
    if kind is SwitchingKind.PIECEWISE:
        return np.maximum(_falling(arr, params), _rising(arr, params))
    raise ValueError(f"unknown switching kind {kind}")  # pragma: no cover


def eval_q(v, params: ModelParams, kind: SwitchingKind | None = None):
    """Slow-to-fast switching rate q(v).  Accepts scalars or arrays."""
    kind = params.switching if kind is None else kind
    arr = _check_v(v)
    out = _q_raw(arr, params, kind)
    return float(out) if np.isscalar(v) else out


def eval_p(v, params: ModelParams, kind: SwitchingKind | None = None):
    """Fast-to-slow switching rate p(v) = 1 - q(v)."""
    q = eval_q(v, params, kind)
    return 1.0 - q


def _dq_raw(arr: np.ndarray, params: ModelParams, kind: SwitchingKind) -> np.ndarray:
    dfall = -0.5 * params.gamma1 * _sech2(params.gamma1 * (arr - params.v_star))
    if kind is SwitchingKind.TANH_SUM:
        return dfall + 0.5 * params.gamma2 * _sech2(params.gamma2 * (arr - params.v_sharp))
    if kind is SwitchingKind.DECREASING:
        return dfall
    if kind is SwitchingKind.PIECEWISE:
        drise = 0.5 * params.gamma2 * _sech2(params.gamma2 * (arr - params.v_sharp))
        return np.where(_falling(arr, params) >= _rising(arr, params), dfall, drise)
    raise ValueError(f"unknown switching kind {kind}")  # pragma: no cover


def eval_dq(v, params: ModelParams, kind: SwitchingKind | None = None):
    """Analytic derivative q'(v)."""
    kind = params.switching if kind is None else kind
    arr = _check_v(v)
    out = _dq_raw(arr, params, kind)
    return float(out) if np.isscalar(v) else out


def eval_dp(v, params: ModelParams, kind: SwitchingKind | None = None):
    """Analytic derivative p'(v) = -q'(v)."""
    dq = eval_dq(v, params, kind)
    return -dq


def reaction_terms(u1, u2, v, params: ModelParams):
    """Pointwise reaction right-hand sides (f1, f2, f3).

    f1 = a1 (1 - u1 - u2) u1 - (1/eps) (q(v) u1 - p(v) u2)
    f2 = a2 (1 - u1 - u2) u2 + (1/eps) (q(v) u1 - p(v) u2)
    f3 = alpha (u1 + u2) - beta v
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    varr = _check_v(v)
    if np.any(u1 < 0.0) or np.any(u2 < 0.0):
        raise DomainError("population densities must be nonnegative")
    q = eval_q(varr, params)
    p = 1.0 - np.asarray(q)
    exch = (q * u1 - p * u2) / params.eps
    s = u1 + u2
    f1 = params.a1 * (1.0 - s) * u1 - exch
    f2 = params.a2 * (1.0 - s) * u2 + exch
    f3 = params.alpha * s - params.beta * varr
    if np.isscalar(v) and np.ndim(f1) == 0:
        return float(f1), float(f2), float(f3)
    return f1, f2, f3


def reaction_jacobian(u1, u2, v, params: ModelParams) -> np.ndarray:
    """Exact Jacobian of :func:`reaction_terms` w.r.t. (u1, u2, v).

    Returns shape (3, 3) for scalar inputs, (3, 3) + field shape for arrays.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    varr = _check_v(v)
    if np.any(u1 < 0.0) or np.any(u2 < 0.0):
        raise DomainError("population densities must be nonnegative")
    q = np.asarray(eval_q(varr, params))
    p = 1.0 - q
    dq = np.asarray(eval_dq(varr, params))
    dp = -dq
    inv_eps = 1.0 / params.eps
    s = u1 + u2
    shape = np.broadcast_shapes(u1.shape, u2.shape, varr.shape)
    jac = np.zeros((3, 3) + shape)
    jac[0, 0] = params.a1 * (1.0 - s - u1) - inv_eps * q
    jac[0, 1] = -params.a1 * u1 + inv_eps * p
    jac[0, 2] = -inv_eps * (dq * u1 - dp * u2)
    jac[1, 0] = -params.a2 * u2 + inv_eps * q
    jac[1, 1] = params.a2 * (1.0 - s - u2) - inv_eps * p
    jac[1, 2] = inv_eps * (dq * u1 - dp * u2)
    jac[2, 0] = params.alpha * np.ones(shape)
    jac[2, 1] = params.alpha * np.ones(shape)
    jac[2, 2] = -params.beta * np.ones(shape)
    return jac


def _manifold_split(total: float, vbar: float, params: ModelParams):
    p = eval_p(vbar, params)
    q = eval_q(vbar, params)
    pq = p + q
    if abs(pq) <= _PQ_FLOOR:
        raise DegenerateStateError(f"p + q vanished at v = {vbar}")
    return p * total / pq, q * total / pq


def constant_steady_conserved(M: float, params: ModelParams):
    """Constant steady state of the mass-conserving system at average mass M.

    Returns (u1bar, u2bar, vbar) with vbar = (alpha/beta) M and the slow/fast
    split on the exchange equilibrium ratio p : q.
    """
    if not (M > 0.0):
        raise DomainError(f"average mass M must be positive, got {M}")
    vbar = params.alpha / params.beta * M
    u1bar, u2bar = _manifold_split(M, vbar, params)
    return u1bar, u2bar, vbar


def constant_steady_growth(params: ModelParams):
    """Unique constant steady state of the system with logistic growth.

    Returns (u1bar, u2bar, vbar); total density is 1 and vbar = alpha/beta.
    """
    vbar = params.alpha / params.beta
    u1bar, u2bar = _manifold_split(1.0, vbar, params)
    return u1bar, u2bar, vbar
