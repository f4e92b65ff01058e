"""Linearisation of constant steady states and neutral stability curves.

For Fourier cosine mode n the linearised dynamics are governed by a 3x3
matrix: ``which='A'`` is the mass-conserving system (parametrised by the
average mass M), ``which='B'`` the system with logistic growth (parametrised
by the common growth rate r = a1 = a2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from roachlab.errors import DomainError
from roachlab.model import (
    ModelParams,
    constant_steady_conserved,
    constant_steady_growth,
    eval_dp,
    eval_dq,
    eval_p,
    eval_q,
)


@dataclass(frozen=True)
class ModeMatrix:
    """Linearisation matrix of one cosine mode around a constant state."""

    n: int
    which: str  # "A" (conserved) or "B" (growth)
    entries: np.ndarray
    k2: float   # wavenumber squared used for the diffusion entries


def with_growth(params: ModelParams, r: float, ratio: float = 1.0) -> ModelParams:
    """Parameter set with growth rates a1 = r, a2 = ratio * r."""
    return replace(params, a1=r, a2=ratio * r)


def _diffusion_diag(params: ModelParams, k2: float) -> np.ndarray:
    return np.array([-params.d * k2, -(params.d + params.D) * k2, -params.D_v * k2])


def assemble_An(n: int, M: float, params: ModelParams, k2: float | None = None) -> ModeMatrix:
    """Mode matrix of the conserved system at the constant state for mass M.

    Growth rates play no role here; the matrix is evaluated from the exchange
    and pheromone terms only.  ``k2`` defaults to (n pi / L)^2; pass the
    discrete Laplacian eigenvalue to match a finite grid exactly.
    """
    if n < 0:
        raise DomainError(f"mode index must be nonnegative, got {n}")
    u1b, u2b, vb = constant_steady_conserved(M, params)
    if k2 is None:
        k2 = (n * np.pi / params.L) ** 2
    q, p = eval_q(vb, params), eval_p(vb, params)
    dq, dp = eval_dq(vb, params), eval_dp(vb, params)
    inv_eps = 1.0 / params.eps
    j3 = inv_eps * (dq * u1b - dp * u2b)
    diff = _diffusion_diag(params, k2)
    entries = np.array(
        [
            [diff[0] - inv_eps * q, inv_eps * p, -j3],
            [inv_eps * q, diff[1] - inv_eps * p, j3],
            [params.alpha, params.alpha, diff[2] - params.beta],
        ]
    )
    return ModeMatrix(n=n, which="A", entries=entries, k2=float(k2))


def assemble_Bn(n: int, params: ModelParams, k2: float | None = None) -> ModeMatrix:
    """Mode matrix of the growth system at its unique constant state."""
    if n < 0:
        raise DomainError(f"mode index must be nonnegative, got {n}")
    u1b, u2b, vb = constant_steady_growth(params)
    if k2 is None:
        k2 = (n * np.pi / params.L) ** 2
    q, p = eval_q(vb, params), eval_p(vb, params)
    dq, dp = eval_dq(vb, params), eval_dp(vb, params)
    inv_eps = 1.0 / params.eps
    j3 = inv_eps * (dq * u1b - dp * u2b)
    diff = _diffusion_diag(params, k2)
    entries = np.array(
        [
            [diff[0] - params.a1 * u1b - inv_eps * q, -params.a1 * u1b + inv_eps * p, -j3],
            [-params.a2 * u2b + inv_eps * q, diff[1] - params.a2 * u2b - inv_eps * p, j3],
            [params.alpha, params.alpha, diff[2] - params.beta],
        ]
    )
    return ModeMatrix(n=n, which="B", entries=entries, k2=float(k2))


def _assemble(which: str, n: int, parameter: float, params: ModelParams) -> ModeMatrix:
    if which == "A":
        return assemble_An(n, parameter, params)
    if which == "B":
        return assemble_Bn(n, with_growth(params, parameter))
    raise DomainError(f"which must be 'A' or 'B', got {which!r}")


def det3(entries: np.ndarray) -> float:
    """Closed-form 3x3 determinant (cofactor expansion along the first row)."""
    a = entries
    return float(
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


def mode_eigenvalues(mat: ModeMatrix) -> np.ndarray:
    """Eigenvalues of the 3x3 mode matrix, sorted by descending real part."""
    vals = np.linalg.eigvals(mat.entries)
    return vals[np.argsort(-vals.real)]


def max_growth_rate(
    which: str, parameter: float, params: ModelParams, n_max: int = 64
) -> tuple[float, int]:
    """Largest eigenvalue real part over modes 0..n_max and its mode index.

    For the conserved system the exact zero eigenvalue of mode 0 (the mass
    direction) is excluded: it reflects the conservation law, not an
    instability.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    best = -np.inf
    best_n = 0
    for n in range(n_max + 1):
        vals = mode_eigenvalues(_assemble(which, n, parameter, params))
        if which == "A" and n == 0:
            keep = np.ones(len(vals), dtype=bool)
            keep[np.argmin(np.abs(vals))] = False
            vals = vals[keep]
        top = float(vals.real.max())
        if top > best:
            best = top
            best_n = n
    return best, best_n


@dataclass
class NeutralCurve:
    """Zero set of det(mode matrix) in the (parameter, D) plane for one mode."""

    which: str
    n: int
    parameter_name: str
    points: np.ndarray          # shape (k, 2): (parameter, D)
    residuals: np.ndarray       # |det| at each point
    scales: np.ndarray          # |det| magnitude at the bracket edges
    rtol: float


def _det_at(which: str, n: int, parameter: float, D: float, params: ModelParams) -> float:
    return det3(_assemble(which, n, parameter, replace(params, D=D)).entries)


def neutral_curve(
    which: str,
    n: int,
    params: ModelParams,
    parameter_values: np.ndarray,
    D_range: tuple[float, float],
    D_scan: int = 100,
    rtol: float = 1e-8,
) -> NeutralCurve:
    """Trace det = 0 by bisection in D along a grid of parameter values.

    Parameter grids with no sign change contribute no points (an empty slice
    is not an error).
    """
    parameter_values = np.asarray(parameter_values, dtype=float)
    if parameter_values.size < 2:
        raise DomainError("need at least two parameter values to scan")
    D_lo, D_hi = D_range
    if not (0.0 < D_lo < D_hi):
        raise DomainError(f"invalid D range {D_range}")
    Ds = np.linspace(D_lo, D_hi, D_scan)
    pts, residuals, scales = [], [], []
    for par in parameter_values:
        dets = np.array([_det_at(which, n, par, D, params) for D in Ds])
        sign_change = np.nonzero(np.sign(dets[:-1]) * np.sign(dets[1:]) < 0)[0]
        for i in sign_change:
            root = brentq(
                lambda D: _det_at(which, n, par, D, params),
                Ds[i],
                Ds[i + 1],
                rtol=max(rtol, 4e-16),
                xtol=1e-14,
            )
            pts.append((par, root))
            residuals.append(abs(_det_at(which, n, par, root, params)))
            scales.append(max(abs(dets[i]), abs(dets[i + 1])))
    return NeutralCurve(
        which=which,
        n=n,
        parameter_name="M" if which == "A" else "r",
        points=np.array(pts).reshape(-1, 2),
        residuals=np.array(residuals),
        scales=np.array(scales),
        rtol=rtol,
    )


def det_roots(
    which: str,
    n: int,
    params: ModelParams,
    parameter_range: tuple[float, float],
    scan: int = 400,
    rtol: float = 1e-8,
) -> list[float]:
    """Roots of det(mode matrix) in the scan parameter at the params' own D."""
    lo, hi = parameter_range
    if not (0.0 < lo < hi):
        raise DomainError(f"invalid parameter range {parameter_range}")
    grid_vals = np.linspace(lo, hi, scan)
    dets = np.array([det3(_assemble(which, n, g, params).entries) for g in grid_vals])
    roots = []
    for i in np.nonzero(np.sign(dets[:-1]) * np.sign(dets[1:]) < 0)[0]:
        roots.append(
            brentq(
                lambda g: det3(_assemble(which, n, g, params).entries),
                grid_vals[i],
                grid_vals[i + 1],
                rtol=max(rtol, 4e-16),
                xtol=1e-14,
            )
        )
    return roots
