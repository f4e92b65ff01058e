import numpy as np
import pytest

from roachlab.continuation import (
    ContinuationControl,
    SteadyProblem,
    continue_branch,
    field_profiles,
    leading_eigs,
    newton_steady,
    pack_constant,
    reflect,
    residual,
    switch_branch,
)
from roachlab.errors import ConfigError, NoConvergenceError
from roachlab.grid import Grid
from roachlab.linstab import assemble_An, mode_eigenvalues
from roachlab.model import ModelParams, constant_steady_conserved
from roachlab.rd3 import RDState, StepControl, constant_state, run, step

PARAMS = ModelParams()
GRID = Grid(1, 256)
PROBLEM = SteadyProblem("rd3-conserved", PARAMS, GRID)


@pytest.fixture(scope="module")
def pattern_point():
    """Stable nonconstant steady state at M = 1 (time integration + Newton)."""
    st = constant_state(GRID, constant_steady_conserved(1.0, PARAMS))
    st.v = st.v + 0.01 * GRID.cosine_mode(1)
    traj = run(st, PARAMS, StepControl(dt=2e-3), t_end=60.0)
    final = traj.final
    guess = np.concatenate([final.u1, final.u2, final.v])
    return newton_steady(PROBLEM, guess, 1.0)


def test_newton_converges_immediately_at_exact_constant():
    x0 = pack_constant(PROBLEM, constant_steady_conserved(1.0, PARAMS))
    point = newton_steady(PROBLEM, x0, 1.0, max_iter=2, compute_eigs=False)
    assert point.residual_norm <= 1e-10
    assert np.abs(point.x - np.append(x0[:-1], 0.0)).max() <= 1e-9


def test_newton_finds_nonconstant_pattern(pattern_point):
    profile = field_profiles(PROBLEM, pattern_point.x)["usum"]
    assert np.ptp(profile) > 0.1
    assert pattern_point.residual_norm <= 1e-10
    assert pattern_point.stable


def test_steady_point_is_time_stepper_fixed_point(pattern_point):
    # the operator-split step has an O(dt^2) defect at nonconstant steady
    # states, so the 1e-8 fixed-point contract is checked in the small-dt
    # regime; a long coarse-dt run must also stay in an O(dt) neighbourhood
    n = GRID.n
    st = RDState(
        0.0,
        pattern_point.x[:n].copy(),
        pattern_point.x[n : 2 * n].copy(),
        pattern_point.x[2 * n : 3 * n].copy(),
        GRID,
    )
    new = step(st, StepControl(dt=1e-7), PARAMS)
    assert np.abs(new.u1 - st.u1).max() <= 1e-8
    assert np.abs(new.u2 - st.u2).max() <= 1e-8
    assert np.abs(new.v - st.v).max() <= 1e-8
    coarse = run(st, PARAMS, StepControl(dt=1e-3), t_end=2.0).final
    assert np.abs(coarse.u1 - st.u1).max() <= 0.1


def test_reflection_partner_is_also_a_solution(pattern_point):
    mirrored = reflect(PROBLEM, pattern_point.x)
    point = newton_steady(PROBLEM, mirrored, 1.0, max_iter=2, compute_eigs=False)
    assert point.residual_norm <= 1e-10
    assert np.abs(point.x - mirrored).max() <= 1e-8


def test_residual_equivariant_under_reflection():
    rng = np.random.default_rng(0)
    x = pack_constant(PROBLEM, constant_steady_conserved(1.0, PARAMS))
    x[:-1] += 0.1 * rng.standard_normal(x.size - 1)
    r1 = residual(PROBLEM, reflect(PROBLEM, x), 1.0)
    r2 = reflect(PROBLEM, residual(PROBLEM, x, 1.0))
    scale = np.abs(r2).max()
    assert np.abs(r1 - r2).max() <= 1e-12 * scale


def test_resolve_from_stored_state_reproduces(pattern_point):
    again = newton_steady(PROBLEM, pattern_point.x, 1.0, compute_eigs=False)
    assert np.abs(again.x - pattern_point.x).max() <= 1e-9


def test_constant_state_eigs_match_mode_matrices():
    x0 = pack_constant(PROBLEM, constant_steady_conserved(1.0, PARAMS))
    point = newton_steady(PROBLEM, x0, 1.0)
    expected = []
    for n in range(0, 8):
        k2 = -GRID.mode_eigenvalue(n)  # discrete wavenumber of the grid
        expected.extend(mode_eigenvalues(assemble_An(n, 1.0, PARAMS, k2=k2)))
    expected = np.array(expected)
    expected = expected[np.argsort(-expected.real)]
    got = point.eigs[:6]
    assert np.abs(got - expected[:6]).max() <= 1e-6
    assert point.neutral_mask is not None and point.neutral_mask.sum() == 1


def test_discretization_gap_shrinks_at_second_order():
    # analytic wavenumber vs the discrete one: eigenvalue gap is O(h^2)
    gaps = []
    for n_cells in (128, 256):
        grid = Grid(1, n_cells)
        analytic = mode_eigenvalues(assemble_An(1, 1.0, PARAMS)).real.max()
        discrete = mode_eigenvalues(
            assemble_An(1, 1.0, PARAMS, k2=-grid.mode_eigenvalue(1))
        ).real.max()
        gaps.append(abs(analytic - discrete))
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.15)


def test_stability_flags_follow_mass():
    stable_pt = newton_steady(
        PROBLEM, pack_constant(PROBLEM, constant_steady_conserved(2.0, PARAMS)), 2.0
    )
    unstable_pt = newton_steady(
        PROBLEM, pack_constant(PROBLEM, constant_steady_conserved(1.0, PARAMS)), 1.0
    )
    assert stable_pt.stable
    assert not unstable_pt.stable


def test_pitchfork_detected_on_constant_branch():
    start = newton_steady(
        PROBLEM, pack_constant(PROBLEM, constant_steady_conserved(0.9, PARAMS)), 0.9
    )
    ctrl = ContinuationControl(
        ds0=0.01, ds_max=0.02, max_steps=12, parameter_min=0.85, parameter_max=0.98
    )
    branch = continue_branch(PROBLEM, start, direction=1, ctrl=ctrl)
    kinds = [e.kind for e in branch.events]
    assert "pitchfork" in kinds
    event = branch.events[kinds.index("pitchfork")]
    assert abs(event.parameter - 0.936341) <= 0.01
    assert event.parity == "odd"


def test_branch_points_satisfy_residual_contract():
    start = newton_steady(
        PROBLEM, pack_constant(PROBLEM, constant_steady_conserved(1.5, PARAMS)), 1.5
    )
    ctrl = ContinuationControl(
        ds0=0.02, ds_max=0.05, max_steps=8, parameter_min=1.3, parameter_max=1.8
    )
    branch = continue_branch(PROBLEM, start, direction=1, ctrl=ctrl)
    assert len(branch.points) >= 5
    for pt in branch.points:
        assert pt.residual_norm <= 1e-10
    # parameters move monotonically along the stable constant branch
    params_along = branch.parameters()
    assert np.all(np.diff(params_along) > 0)


def test_switch_branch_leaves_constant_family():
    start = newton_steady(
        PROBLEM, pack_constant(PROBLEM, constant_steady_conserved(0.9, PARAMS)), 0.9
    )
    ctrl = ContinuationControl(
        ds0=0.01, ds_max=0.02, max_steps=12, parameter_min=0.85, parameter_max=0.98
    )
    branch = continue_branch(PROBLEM, start, direction=1, ctrl=ctrl)
    event = next(e for e in branch.events if e.kind == "pitchfork")
    point = switch_branch(PROBLEM, event, amplitude=1e-3)
    profile = field_profiles(PROBLEM, point.x)["usum"]
    assert np.ptp(profile) > 1e-4
    # subcritical: the bifurcating branch lives at masses below the pitchfork
    assert point.parameter < event.parameter + 1e-6


def test_conserved_problem_requires_zero_growth():
    with pytest.raises(ConfigError):
        SteadyProblem("rd3-conserved", ModelParams(a1=1.0), GRID)


def test_unknown_system_rejected():
    with pytest.raises(ConfigError):
        SteadyProblem("rd4", PARAMS, GRID)


def test_newton_failure_raises_with_best_residual():
    # absurd guess far outside the attraction basin with a single iteration
    bad = pack_constant(PROBLEM, (50.0, -30.0, 80.0))
    with pytest.raises(NoConvergenceError) as info:
        newton_steady(PROBLEM, bad, 1.0, max_iter=1, compute_eigs=False)
    assert np.isfinite(info.value.best_residual)


def test_leading_eigs_residuals_validated(pattern_point):
    vals, vecs, mask = leading_eigs(PROBLEM, pattern_point.x, 1.0, count=6)
    from roachlab.continuation import plain_jacobian

    jac = plain_jacobian(PROBLEM, pattern_point.x, 1.0)
    for i in range(min(6, vecs.shape[1])):
        r = np.linalg.norm(jac @ vecs[:, i] - vals[i] * vecs[:, i])
        assert r <= 1e-8 * max(1.0, abs(vals[i]))


def test_growth_constant_branch_pitchfork_matches_mode_root():
    # the constant branch of the growth system, continued in r, must lose
    # stability exactly where det B_1 = 0
    from roachlab.linstab import det_roots
    from roachlab.model import constant_steady_growth, ModelParams as MP

    grid = Grid(1, 128)
    problem = SteadyProblem("rd3-growth", PARAMS, grid)
    root = det_roots("B", 1, PARAMS, (5.5, 6.8))[0]
    start_r = root + 0.25
    triple = constant_steady_growth(problem.params_at(start_r))
    start = newton_steady(problem, pack_constant(problem, triple), start_r)
    ctrl = ContinuationControl(
        ds0=0.05, ds_max=0.1, max_steps=14,
        parameter_min=root - 0.4, parameter_max=start_r + 0.1,
    )
    branch = continue_branch(problem, start, direction=-1, ctrl=ctrl)
    pitchforks = [e for e in branch.events if e.kind == "pitchfork"]
    assert pitchforks
    assert min(abs(e.parameter - root) for e in pitchforks) <= 1e-3


def test_event_location_stable_under_step_halving():
    grid = Grid(1, 128)
    problem = SteadyProblem("rd3-conserved", PARAMS, grid)
    locations = []
    for ds in (0.01, 0.005):
        start = newton_steady(
            problem, pack_constant(problem, constant_steady_conserved(0.91, PARAMS)), 0.91
        )
        ctrl = ContinuationControl(
            ds0=ds, ds_max=ds, max_steps=int(0.08 / ds) + 4,
            parameter_min=0.9, parameter_max=0.97,
        )
        branch = continue_branch(problem, start, direction=1, ctrl=ctrl)
        event = next(e for e in branch.events if e.kind == "pitchfork")
        locations.append(event.parameter)
    assert abs(locations[0] - locations[1]) <= 1e-3


def test_classify_event_public_surface():
    from roachlab.continuation import classify_event

    grid = Grid(1, 128)
    problem = SteadyProblem("rd3-conserved", PARAMS, grid)
    start = newton_steady(
        problem, pack_constant(problem, constant_steady_conserved(0.92, PARAMS)), 0.92
    )
    ctrl = ContinuationControl(
        ds0=0.01, ds_max=0.015, max_steps=8,
        parameter_min=0.9, parameter_max=0.96, refine_events=False,
    )
    branch = continue_branch(problem, start, direction=1, ctrl=ctrl)
    events = [
        classify_event(problem, a, b)
        for a, b in zip(branch.points[:-1], branch.points[1:])
    ]
    found = [e for e in events if e is not None]
    # the window crosses the 1-mode and (at its upper edge) the 2-mode onset
    assert [e.kind for e in found] == ["pitchfork", "pitchfork"]
    assert abs(found[0].parameter - 0.936341) <= 0.01
    assert abs(found[1].parameter - 0.962311) <= 0.01  # det A_2 = 0 root
    # quiet brackets classify to None
    assert events[0] is None
