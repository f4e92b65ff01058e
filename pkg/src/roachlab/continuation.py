"""Steady states, pseudo-arclength continuation and bifurcation detection.

Discretised steady problems for the three-component system (with or without
growth) and for the two-component limit system, all in one space dimension.
The mass-conserving variants carry the average-mass constraint plus a scalar
multiplier, which removes the neutral mass direction from the Newton system;
the multiplier vanishes at any true solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from roachlab.errors import (
    ConfigError,
    EigenSolverError,
    NoConvergenceError,
    RefinementNeededError,
    StuckBranchError,
)
from roachlab.grid import Grid
from roachlab.model import ModelParams, _dq_raw, _q_raw

SYSTEMS = ("rd3-conserved", "rd3-growth", "cross-conserved", "cross-growth")

# |Im| above this counts as a genuine complex pair when classifying crossings
IMAG_TOL = 1e-6
# |lambda| below this is flagged as the conserved-mass neutral eigenvalue
NEUTRAL_TOL = 1e-6


@dataclass(frozen=True)
class SteadyProblem:
    """A discretised steady-state problem with one continuation parameter.

    The parameter is the average mass M for the conserved systems and the
    growth rate r (a1 = r, a2 = growth_ratio * r) for the growth systems.
    """

    system: str
    params: ModelParams
    grid: Grid
    growth_ratio: float = 1.0

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}, got {self.system!r}")
        if self.grid.dim != 1:
            raise ConfigError("continuation supports one-dimensional grids only")
        if self.conserved and (self.params.a1 != 0.0 or self.params.a2 != 0.0):
            raise ConfigError("conserved steady problems require a1 = a2 = 0")

    @property
    def conserved(self) -> bool:
        return self.system.endswith("conserved")

    @property
    def nfields(self) -> int:
        return 3 if self.system.startswith("rd3") else 2

    @property
    def nx(self) -> int:
        return self.grid.n

    @property
    def nunk(self) -> int:
        return self.nfields * self.nx + (1 if self.conserved else 0)

    def params_at(self, parameter: float) -> ModelParams:
        if self.conserved:
            return self.params
        return replace(self.params, a1=parameter, a2=self.growth_ratio * parameter)


_LAP_CACHE: dict = {}


def neumann_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse 1D Neumann Laplacian matching :func:`roachlab.grid.laplacian`."""
    key = (grid.n, grid.L)
    mat = _LAP_CACHE.get(key)
    if mat is None:
        n, h = grid.n, grid.h
        main = np.full(n, -2.0)
        main[0] = main[-1] = -1.0
        off = np.ones(n - 1)
        mat = sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)
        _LAP_CACHE[key] = mat
    return mat


def _split(problem: SteadyProblem, x: np.ndarray):
    n = problem.nx
    fields = [x[i * n : (i + 1) * n] for i in range(problem.nfields)]
    mu = x[problem.nfields * n] if problem.conserved else 0.0
    return fields, mu


def _switch(problem: SteadyProblem, v: np.ndarray, params: ModelParams):
    q = _q_raw(v, params, params.switching)
    dq = _dq_raw(v, params, params.switching)
    return q, 1.0 - q, dq, -dq


def residual(problem: SteadyProblem, x: np.ndarray, parameter: float) -> np.ndarray:
    """Steady residual; for conserved systems the last entry is the mass error."""
    pp = problem.params_at(parameter)
    lap = neumann_matrix(problem.grid)
    fields, mu = _split(problem, x)
    out = np.empty(problem.nunk)
    n = problem.nx
    if problem.nfields == 3:
        u1, u2, v = fields
        q, p, _, _ = _switch(problem, v, pp)
        exch = (q * u1 - p * u2) / pp.eps
        s = u1 + u2
        out[:n] = pp.d * (lap @ u1) + pp.a1 * (1.0 - s) * u1 - exch + mu
        out[n : 2 * n] = (pp.d + pp.D) * (lap @ u2) + pp.a2 * (1.0 - s) * u2 + exch + mu
        out[2 * n : 3 * n] = pp.D_v * (lap @ v) + pp.alpha * s - pp.beta * v
        if problem.conserved:
            out[3 * n] = s.sum() / n - parameter
    else:
        u, v = fields
        q, p, _, _ = _switch(problem, v, pp)
        c = pp.d + pp.D * q / (p + q)
        phi = (pp.a1 * p + pp.a2 * q) / (p + q)
        out[:n] = lap @ (c * u) + phi * (1.0 - u) * u + mu
        out[n : 2 * n] = pp.D_v * (lap @ v) + pp.alpha * u - pp.beta * v
        if problem.conserved:
            out[2 * n] = u.sum() / n - parameter
    return out


def plain_jacobian(problem: SteadyProblem, x: np.ndarray, parameter: float) -> sp.csc_matrix:
    """Linearisation of the time-dependent right-hand side (no constraint)."""
    pp = problem.params_at(parameter)
    lap = neumann_matrix(problem.grid)
    fields, _ = _split(problem, x)
    if problem.nfields == 3:
        u1, u2, v = fields
        q, p, dq, dp = _switch(problem, v, pp)
        inv_eps = 1.0 / pp.eps
        s = u1 + u2
        j3 = inv_eps * (dq * u1 - dp * u2)
        j11 = pp.d * lap + sp.diags(pp.a1 * (1.0 - s - u1) - inv_eps * q)
        j12 = sp.diags(-pp.a1 * u1 + inv_eps * p)
        j13 = sp.diags(-j3)
        j21 = sp.diags(-pp.a2 * u2 + inv_eps * q)
        j22 = (pp.d + pp.D) * lap + sp.diags(pp.a2 * (1.0 - s - u2) - inv_eps * p)
        j23 = sp.diags(j3)
        j31 = sp.diags(np.full(problem.nx, pp.alpha))
        j32 = sp.diags(np.full(problem.nx, pp.alpha))
        j33 = pp.D_v * lap - pp.beta * sp.identity(problem.nx)
        blocks = [[j11, j12, j13], [j21, j22, j23], [j31, j32, j33]]
    else:
        u, v = fields
        q, p, dq, dp = _switch(problem, v, pp)
        total = p + q
        c = pp.d + pp.D * q / total
        dc = pp.D * (dq * p - dp * q) / total**2
        phi = (pp.a1 * p + pp.a2 * q) / total
        dphi = ((pp.a1 * dp + pp.a2 * dq) * total - (pp.a1 * p + pp.a2 * q) * (dp + dq)) / total**2
        j11 = lap @ sp.diags(c) + sp.diags(phi * (1.0 - 2.0 * u))
        j12 = lap @ sp.diags(dc * u) + sp.diags(dphi * (1.0 - u) * u)
        j21 = sp.diags(np.full(problem.nx, pp.alpha))
        j22 = pp.D_v * lap - pp.beta * sp.identity(problem.nx)
        blocks = [[j11, j12], [j21, j22]]
    return sp.bmat(blocks, format="csc")


def jacobian(problem: SteadyProblem, x: np.ndarray, parameter: float) -> sp.csc_matrix:
    """Square Newton matrix: plain Jacobian plus constraint row and multiplier column."""
    core = plain_jacobian(problem, x, parameter)
    if not problem.conserved:
        return core
    n = problem.nx
    col = np.zeros((problem.nfields * n, 1))
    row = np.zeros((1, problem.nfields * n))
    if problem.nfields == 3:
        col[: 2 * n, 0] = 1.0
        row[0, : 2 * n] = 1.0 / n
    else:
        col[:n, 0] = 1.0
        row[0, :n] = 1.0 / n
    return sp.bmat([[core, col], [row, None]], format="csc")


def dresidual_dparameter(problem: SteadyProblem, x: np.ndarray, parameter: float) -> np.ndarray:
    out = np.zeros(problem.nunk)
    n = problem.nx
    if problem.conserved:
        out[-1] = -1.0
        return out
    pp = problem.params_at(parameter)
    fields, _ = _split(problem, x)
    if problem.nfields == 3:
        u1, u2, _ = fields
        s = u1 + u2
        out[:n] = (1.0 - s) * u1
        out[n : 2 * n] = problem.growth_ratio * (1.0 - s) * u2
    else:
        u, v = fields
        q, p, _, _ = _switch(problem, v, pp)
        out[:n] = (p + problem.growth_ratio * q) / (p + q) * (1.0 - u) * u
    return out


def reflect(problem: SteadyProblem, x: np.ndarray) -> np.ndarray:
    """Spatial reflection x -> L - x applied blockwise (multiplier unchanged)."""
    out = x.copy()
    n = problem.nx
    for i in range(problem.nfields):
        out[i * n : (i + 1) * n] = x[i * n : (i + 1) * n][::-1]
    return out


def pack_constant(problem: SteadyProblem, values) -> np.ndarray:
    """Unknown vector for a spatially constant state (zero multiplier)."""
    x = np.zeros(problem.nunk)
    n = problem.nx
    for i, val in enumerate(values[: problem.nfields]):
        x[i * n : (i + 1) * n] = val
    return x


def field_profiles(problem: SteadyProblem, x: np.ndarray) -> dict:
    fields, _ = _split(problem, x)
    if problem.nfields == 3:
        return {"u1": fields[0], "u2": fields[1], "v": fields[2], "usum": fields[0] + fields[1]}
    return {"u": fields[0], "v": fields[1], "usum": fields[0]}


@dataclass
class BranchPoint:
    """One converged point of a steady branch."""

    parameter: float
    x: np.ndarray
    residual_norm: float
    eigs: np.ndarray | None = None
    neutral_mask: np.ndarray | None = None
    stable: bool | None = None
    arclength: float = 0.0
    tangent: np.ndarray | None = None  # weighted-normalised, length nunk+1

    def leading(self, count: int = 6) -> np.ndarray:
        return self.eigs[:count] if self.eigs is not None else np.array([])


@dataclass
class BifurcationEvent:
    """A classified eigenvalue/tangent crossing between two branch points."""

    kind: str                     # "fold" | "pitchfork" | "hopf"
    parameter: float
    bracket: tuple[float, float]  # parameter values of the flanking points
    omega: float = 0.0            # |Im| of the crossing pair (hopf only)
    parity: str = ""              # "odd" / "even" reflection parity (pitchfork)
    point: BranchPoint | None = None


@dataclass
class Branch:
    """Ordered continuation points with stability flags and detected events."""

    problem: SteadyProblem
    points: list = field(default_factory=list)
    events: list = field(default_factory=list)
    termination: str = ""

    def parameters(self) -> np.ndarray:
        return np.array([pt.parameter for pt in self.points])

    def value_at_origin(self) -> np.ndarray:
        return np.array([field_profiles(self.problem, pt.x)["usum"][0] for pt in self.points])


def newton_steady(
    problem: SteadyProblem,
    guess: np.ndarray,
    parameter: float,
    tol: float = 1e-10,
    max_iter: int = 30,
    compute_eigs: bool = True,
    eig_count: int = 6,
) -> BranchPoint:
    """Damped Newton solve of the steady problem at a fixed parameter."""
    x = np.asarray(guess, dtype=float).copy()
    if problem.conserved and x.size == problem.nunk - 1:
        x = np.append(x, 0.0)
    if x.size != problem.nunk:
        raise ConfigError(f"guess has size {x.size}, expected {problem.nunk}")
    res = residual(problem, x, parameter)
    norm = np.abs(res).max()
    best = norm
    for _ in range(max_iter):
        if norm <= tol:
            break
        jac = jacobian(problem, x, parameter)
        try:
            delta = spla.splu(jac).solve(-res)
        except RuntimeError as exc:
            raise NoConvergenceError(
                f"singular Newton matrix at parameter {parameter}", best_residual=best
            ) from exc
        lam = 1.0
        while True:
            x_try = x + lam * delta
            res_try = residual(problem, x_try, parameter)
            norm_try = np.abs(res_try).max()
            if norm_try <= (1.0 - 0.25 * lam) * norm or norm_try <= tol:
                x, res, norm = x_try, res_try, norm_try
                break
            lam *= 0.5
            if lam < 1.0 / 256.0:
                raise NoConvergenceError(
                    f"Newton damping stalled at parameter {parameter} "
                    f"(residual {norm:.3e})",
                    best_residual=min(best, norm),
                )
        best = min(best, norm)
    if norm > tol:
        raise NoConvergenceError(
            f"Newton did not reach tolerance {tol} at parameter {parameter} "
            f"(residual {norm:.3e})",
            best_residual=norm,
        )
    point = BranchPoint(parameter=float(parameter), x=x, residual_norm=float(norm))
    if compute_eigs:
        attach_eigs(problem, point, count=eig_count)
    return point


def leading_eigs(
    problem: SteadyProblem,
    x: np.ndarray,
    parameter: float,
    count: int = 6,
    k: int = 16,
    sigma: float = 0.25,
):
    """Rightmost eigenpairs of the plain Jacobian via shift-invert Arnoldi.

    Falls back to a dense eigensolve when the iteration stagnates or its
    residuals fail validation.  Returns (values, vectors, neutral_mask),
    values sorted by descending real part; for conserved systems the mask
    flags the exact mass-neutral eigenvalue.
    """
    jac = plain_jacobian(problem, x, parameter).tocsc()
    size = jac.shape[0]
    k_eff = min(k, size - 2)
    vals = vecs = None
    for shift in (sigma, sigma + 0.13):
        try:
            vals, vecs = spla.eigs(jac, k=k_eff, sigma=shift, which="LM")
        except (spla.ArpackError, spla.ArpackNoConvergence, RuntimeError):
            continue
        resid = np.linalg.norm(jac @ vecs - vecs * vals, axis=0)
        if np.all(resid <= 1e-8 * np.maximum(1.0, np.abs(vals))):
            break
        vals = vecs = None
    if vals is None:
        try:
            vals, vecs = np.linalg.eig(jac.toarray())
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise EigenSolverError("dense eigensolve failed") from exc
    order = np.argsort(-vals.real)
    vals = vals[order][: max(count, k_eff)]
    vecs = vecs[:, order][:, : max(count, k_eff)]
    mask = np.zeros(len(vals), dtype=bool)
    if problem.conserved:
        small = np.abs(vals) <= NEUTRAL_TOL
        if np.any(small):
            mask[np.argmin(np.where(small, np.abs(vals), np.inf))] = True
    return vals, vecs, mask


def attach_eigs(problem: SteadyProblem, point: BranchPoint, count: int = 6) -> None:
    vals, _, mask = leading_eigs(problem, point.x, point.parameter, count=count)
    point.eigs = vals
    point.neutral_mask = mask
    active = vals[~mask]
    point.stable = bool(np.all(active.real < 1e-9))


def _crossing_counts(point: BranchPoint):
    vals = point.eigs[~point.neutral_mask]
    real_pos = int(np.sum((vals.real > 0) & (np.abs(vals.imag) <= IMAG_TOL)))
    cplx_pos = int(np.sum((vals.real > 0) & (vals.imag > IMAG_TOL)))
    return real_pos, cplx_pos


@dataclass(frozen=True)
class ContinuationControl:
    """Step-size policy and bounds for pseudo-arclength continuation."""

    ds0: float = 0.02
    ds_min: float = 1e-8
    ds_max: float = 0.05
    max_steps: int = 500
    parameter_min: float = -np.inf
    parameter_max: float = np.inf
    newton_tol: float = 1e-10
    newton_max: int = 8
    eig_count: int = 6
    refine_events: bool = True


def _wdot(problem: SteadyProblem, z1: np.ndarray, z2: np.ndarray) -> float:
    n = problem.nunk
    return float(z1[:n] @ z2[:n]) / n + z1[n] * z2[n]


def _tangent(
    problem: SteadyProblem, x: np.ndarray, parameter: float, prev: np.ndarray
) -> np.ndarray:
    """Solve the bordered system for the branch tangent, oriented along prev."""
    n = problem.nunk
    jac = jacobian(problem, x, parameter)
    fp = dresidual_dparameter(problem, x, parameter)
    border = sp.bmat(
        [
            [jac, fp.reshape(-1, 1)],
            [sp.csr_matrix(prev[:n][None, :] / n), sp.csr_matrix([[prev[n]]])],
        ],
        format="csc",
    )
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    t = spla.splu(border).solve(rhs)
    t /= np.sqrt(_wdot(problem, t, t))
    if _wdot(problem, t, prev) < 0:
        t = -t
    return t


def _correct(
    problem: SteadyProblem,
    z_pred: np.ndarray,
    z_base: np.ndarray,
    tangent: np.ndarray,
    ds: float,
    ctrl: ContinuationControl,
):
    """Newton corrector on the extended system (residual + arclength row).

    Returns (z, iterations) on success, (None, iterations) on failure.
    """
    n = problem.nunk
    z = z_pred.copy()
    for it in range(ctrl.newton_max):
        res = residual(problem, z[:n], z[n])
        arc = _wdot(problem, tangent, z - z_base) - ds
        norm = max(np.abs(res).max(), abs(arc))
        if norm <= ctrl.newton_tol:
            return z, it
        jac = jacobian(problem, z[:n], z[n])
        fp = dresidual_dparameter(problem, z[:n], z[n])
        ext = sp.bmat(
            [
                [jac, fp.reshape(-1, 1)],
                [sp.csr_matrix(tangent[:n][None, :] / n), sp.csr_matrix([[tangent[n]]])],
            ],
            format="csc",
        )
        rhs = -np.append(res, arc)
        try:
            z = z + spla.splu(ext).solve(rhs)
        except RuntimeError:
            return None, it
        if not np.all(np.isfinite(z)):
            return None, it
    res = residual(problem, z[:n], z[n])
    arc = _wdot(problem, tangent, z - z_base) - ds
    if max(np.abs(res).max(), abs(arc)) <= ctrl.newton_tol:
        return z, ctrl.newton_max
    return None, ctrl.newton_max


def _as_z(point: BranchPoint) -> np.ndarray:
    return np.append(point.x, point.parameter)


def _solve_natural(problem: SteadyProblem, guess_z: np.ndarray, ctrl: ContinuationControl):
    """Fixed-parameter Newton solve used by secant event refinement."""
    n = problem.nunk
    return newton_steady(
        problem,
        guess_z[:n],
        guess_z[n],
        tol=ctrl.newton_tol,
        max_iter=ctrl.newton_max + 12,
        compute_eigs=True,
        eig_count=ctrl.eig_count,
    )


def _crossing_measure(point: BranchPoint, kind: str) -> float:
    """Real part of the eigenvalue closest to the axis of the requested type."""
    vals = point.eigs[~point.neutral_mask]
    if kind == "hopf":
        vals = vals[vals.imag > IMAG_TOL]
    else:
        vals = vals[np.abs(vals.imag) <= IMAG_TOL]
    if len(vals) == 0:
        return np.nan
    return float(vals.real[np.argmin(np.abs(vals.real))])


def _null_parity(problem: SteadyProblem, vec: np.ndarray) -> str:
    v = vec.real
    padded = np.append(v, 0.0) if problem.conserved else v
    refl = reflect(problem, padded)[: v.size]
    sym = np.linalg.norm(v - refl)
    anti = np.linalg.norm(v + refl)
    return "odd" if anti < sym else "even"


def _refine_eig_event(
    problem: SteadyProblem,
    kind: str,
    a: BranchPoint,
    b: BranchPoint,
    ctrl: ContinuationControl,
    tol: float = 1e-4,
) -> BifurcationEvent:
    """Secant iteration on the crossing eigenvalue's real part vs parameter."""
    sa, sb = a.parameter, b.parameter
    fa, fb = _crossing_measure(a, kind), _crossing_measure(b, kind)
    pa, pb = a, b
    best = b if abs(fb) < abs(fa) else a
    for _ in range(16):
        if not np.isfinite(fa) or not np.isfinite(fb) or fa == fb:
            break
        s_new = sb - fb * (sb - sa) / (fb - fa)
        lo, hi = min(sa, sb), max(sa, sb)
        if not (lo < s_new < hi):
            s_new = 0.5 * (sa + sb)
        w = (s_new - sa) / (sb - sa) if sb != sa else 0.5
        guess = (1 - w) * _as_z(pa) + w * _as_z(pb)
        guess[-1] = s_new
        try:
            pt = _solve_natural(problem, guess, ctrl)
        except NoConvergenceError:
            break
        f_new = _crossing_measure(pt, kind)
        if not np.isfinite(f_new):
            break
        if abs(f_new) < abs(_crossing_measure(best, kind)):
            best = pt
        if fa * f_new <= 0:
            sb, fb, pb = s_new, f_new, pt
        else:
            sa, fa, pa = s_new, f_new, pt
        if abs(sb - sa) <= tol:
            break
    omega = 0.0
    parity = ""
    if kind == "hopf":
        vals = best.eigs[~best.neutral_mask]
        pair = vals[vals.imag > IMAG_TOL]
        if len(pair):
            omega = float(pair.imag[np.argmin(np.abs(pair.real))])
    else:
        vals, vecs, mask = leading_eigs(
            problem, best.x, best.parameter, count=ctrl.eig_count
        )
        active = np.where(~mask & (np.abs(vals.imag) <= IMAG_TOL))[0]
        if len(active):
            idx = active[np.argmin(np.abs(vals.real[active]))]
            parity = _null_parity(problem, vecs[:, idx])
    return BifurcationEvent(
        kind=kind,
        parameter=best.parameter,
        bracket=(a.parameter, b.parameter),
        omega=omega,
        parity=parity,
        point=best,
    )


def _refine_fold(
    problem: SteadyProblem,
    a: BranchPoint,
    b: BranchPoint,
    ds_used: float,
    ctrl: ContinuationControl,
) -> BifurcationEvent:
    """Bisection in arclength on the tangent's parameter component."""
    base = _as_z(a)
    tang = a.tangent
    tau_lo = tang[-1]
    lo, hi = 0.0, ds_used
    pt_best = b if abs(b.tangent[-1]) < abs(a.tangent[-1]) else a
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        z_pred = base + mid * tang
        z_mid, _ = _correct(problem, z_pred, base, tang, mid, ctrl)
        if z_mid is None:
            break
        t_mid = _tangent(problem, z_mid[:-1], z_mid[-1], tang)
        pt_mid = BranchPoint(
            parameter=float(z_mid[-1]),
            x=z_mid[:-1],
            residual_norm=0.0,
            tangent=t_mid,
        )
        if abs(t_mid[-1]) < abs(pt_best.tangent[-1]):
            pt_best = pt_mid
        if t_mid[-1] * tau_lo > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 or abs(t_mid[-1]) < 1e-10:
            break
    # A turning point whose profile amplitude collapses relative to its
    # bracket is the branch meeting the constant family: a pitchfork
    # traversed end-on, not a fold (folds keep neighbour-scale amplitude).
    profile = field_profiles(problem, pt_best.x)["usum"]
    amp_turn = np.ptp(profile)
    amp_bracket = min(
        np.ptp(field_profiles(problem, a.x)["usum"]),
        np.ptp(field_profiles(problem, b.x)["usum"]),
    )
    kind = "fold"
    parity = ""
    if amp_turn <= max(0.25 * amp_bracket, 1e-3 * (1.0 + np.abs(profile).max())):
        kind = "pitchfork"
        vals, vecs, mask = leading_eigs(
            problem, pt_best.x, pt_best.parameter, count=ctrl.eig_count
        )
        active = np.where(~mask & (np.abs(vals.imag) <= IMAG_TOL))[0]
        if len(active):
            idx = active[np.argmin(np.abs(vals.real[active]))]
            parity = _null_parity(problem, vecs[:, idx])
    return BifurcationEvent(
        kind=kind,
        parameter=pt_best.parameter,
        bracket=(a.parameter, b.parameter),
        parity=parity,
        point=pt_best,
    )


def _detect_event(prev: BranchPoint, new: BranchPoint):
    """Classify the crossings between two accepted points (None if quiet).

    Returns (kind, ambiguous); ``ambiguous`` asks for a smaller step because
    several crossings happened inside one bracket.
    """
    r0, c0 = _crossing_counts(prev)
    r1, c1 = _crossing_counts(new)
    d_real, d_cplx = abs(r1 - r0), abs(c1 - c0)
    turned = (
        prev.tangent is not None
        and new.tangent is not None
        and prev.tangent[-1] * new.tangent[-1] < 0
    )
    if d_real + d_cplx == 0 and not turned:
        return None, False
    if turned:
        # a generic fold carries exactly one real crossing
        if d_cplx > 0 or d_real > 1:
            return None, True
        return "fold", False
    if d_real == 1 and d_cplx == 0:
        return "pitchfork", False
    if d_cplx == 1 and d_real == 0:
        return "hopf", False
    return None, True


def classify_event(
    problem: SteadyProblem,
    before: BranchPoint,
    after: BranchPoint,
    ctrl: ContinuationControl = ContinuationControl(),
) -> BifurcationEvent | None:
    """Classify and refine the crossing between two adjacent branch points.

    Both points need eigenvalues and tangents attached (as produced by
    :func:`continue_branch`).  Returns None for a quiet bracket; raises
    :class:`RefinementNeededError` when the bracket holds several crossings
    and smaller continuation steps are required.
    """
    kind, ambiguous = _detect_event(before, after)
    if ambiguous:
        raise RefinementNeededError(
            f"multiple crossings between parameters {before.parameter} and "
            f"{after.parameter}; retrace with smaller steps"
        )
    if kind is None:
        return None
    if kind == "fold":
        ds = after.arclength - before.arclength
        return _refine_fold(problem, before, after, ds, ctrl)
    return _refine_eig_event(problem, kind, before, after, ctrl)


def continue_branch(
    problem: SteadyProblem,
    start: BranchPoint,
    direction: int = 1,
    ctrl: ContinuationControl = ContinuationControl(),
) -> Branch:
    """Pseudo-arclength predictor-corrector from a converged start point.

    The step shrinks on corrector failure or ambiguous event brackets and
    grows after fast convergence; fold/pitchfork/Hopf events are appended as
    they are crossed.  Terminates at parameter bounds or the step-count cap;
    raises :class:`StuckBranchError` (carrying the partial branch) when the
    step underflows.
    """
    branch = Branch(problem=problem)
    point = start
    if point.eigs is None:
        attach_eigs(problem, point, count=ctrl.eig_count)
    n = problem.nunk
    seed = np.zeros(n + 1)
    seed[-1] = float(direction)
    point.tangent = _tangent(problem, point.x, point.parameter, seed)
    point.arclength = 0.0
    branch.points.append(point)

    ds = ctrl.ds0
    for _ in range(ctrl.max_steps):
        base = branch.points[-1]
        z_base = _as_z(base)
        accepted = None
        while accepted is None:
            z_pred = z_base + ds * base.tangent
            z_new, iters = _correct(problem, z_pred, z_base, base.tangent, ds, ctrl)
            if z_new is None:
                ds *= 0.5
                if ds < ctrl.ds_min:
                    branch.termination = "step-underflow"
                    raise StuckBranchError(
                        f"continuation step underflowed at parameter {base.parameter}",
                        branch=branch,
                    )
                continue
            tang = _tangent(problem, z_new[:-1], z_new[-1], base.tangent)
            new = BranchPoint(
                parameter=float(z_new[-1]),
                x=z_new[:-1],
                residual_norm=float(
                    np.abs(residual(problem, z_new[:-1], z_new[-1])).max()
                ),
                arclength=base.arclength + ds,
                tangent=tang,
            )
            attach_eigs(problem, new, count=ctrl.eig_count)
            kind, ambiguous = _detect_event(base, new)
            if ambiguous:
                ds *= 0.5
                if ds < 10 * ctrl.ds_min:
                    branch.termination = "ambiguous-bracket"
                    raise RefinementNeededError(
                        f"multiple crossings between parameters {base.parameter} "
                        f"and {new.parameter}; reduce ds below {ds}"
                    )
                continue
            accepted = (new, kind, iters, ds)
        new, kind, iters, ds_used = accepted
        branch.points.append(new)
        if kind is not None:
            if ctrl.refine_events:
                if kind == "fold":
                    event = _refine_fold(problem, base, new, ds_used, ctrl)
                else:
                    event = _refine_eig_event(problem, kind, base, new, ctrl)
            else:
                event = BifurcationEvent(
                    kind=kind,
                    parameter=0.5 * (base.parameter + new.parameter),
                    bracket=(base.parameter, new.parameter),
                )
            branch.events.append(event)
        if not (ctrl.parameter_min <= new.parameter <= ctrl.parameter_max):
            branch.termination = "parameter-bound"
            return branch
        if kind is None and iters <= 3:
            ds = min(ds * 1.3, ctrl.ds_max)
    branch.termination = "max-steps"
    return branch


def switch_branch(
    problem: SteadyProblem,
    event: BifurcationEvent,
    amplitude: float = 1e-3,
    ctrl: ContinuationControl = ContinuationControl(),
) -> BranchPoint:
    """Jump onto the branch emerging at a pitchfork.

    Takes one bordered corrector step from the event state along the
    approximate null vector with the step length pinned (amplitude relative
    to the state norm).  Pinning the null-direction amplitude deflates the
    branch the event sits on, so Newton cannot slide back onto it; the
    parameter adjusts itself to wherever the bifurcating branch lives.
    """
    if event.point is None:
        raise ConfigError("event carries no refined point to switch from")
    vals, vecs, mask = leading_eigs(
        problem, event.point.x, event.point.parameter, count=ctrl.eig_count
    )
    active = np.where(~mask & (np.abs(vals.imag) <= IMAG_TOL))[0]
    if len(active) == 0:
        raise ConfigError("no real eigenvalue available for branch switching")
    order = active[np.argsort(np.abs(vals.real[active]))]
    base_profile = field_profiles(problem, event.point.x)["usum"]
    on_constant_family = np.ptp(base_profile) <= 1e-6 * (1.0 + np.abs(base_profile).max())
    null = None
    for idx in order[:3]:
        candidate = vecs[:, idx].real.copy()
        if on_constant_family:
            # at a pitchfork of the conserved constant branch the crossing
            # eigenvalue degenerates with the mass-neutral one; strip the
            # spatially constant component to isolate the symmetry-breaking mode
            n = problem.nx
            for i in range(problem.nfields):
                block = candidate[i * n : (i + 1) * n]
                block -= block.mean()
        norm = np.linalg.norm(candidate)
        if norm > 1e-6 * np.linalg.norm(vecs[:, idx].real):
            null = candidate / norm
            break
    if null is None:
        raise ConfigError("could not isolate a symmetry-breaking null vector")
    if problem.conserved:
        null = np.append(null, 0.0)
    tangent = np.append(null, 0.0)  # no parameter drift in the predictor
    tangent /= np.sqrt(_wdot(problem, tangent, tangent))
    z_base = _as_z(event.point)
    scale = np.linalg.norm(event.point.x) / np.sqrt(problem.nunk)
    for boost in (1.0, 3.0, 10.0, 0.3):
        ds = amplitude * boost * max(scale, 1.0)
        z_pred = z_base + ds * tangent
        z_new, _ = _correct(problem, z_pred, z_base, tangent, ds, ctrl)
        if z_new is None:
            continue
        point = BranchPoint(
            parameter=float(z_new[-1]),
            x=z_new[:-1],
            residual_norm=float(np.abs(residual(problem, z_new[:-1], z_new[-1])).max()),
        )
        profile = field_profiles(problem, point.x)["usum"]
        if profile.max() - profile.min() > 1e-8:
            attach_eigs(problem, point, count=ctrl.eig_count)
            return point
    raise NoConvergenceError(
        f"branch switching failed at the event near parameter "
        f"{event.parameter}",
        best_residual=np.nan,
    )
