import numpy as np
import pytest

from roachlab.continuation import (
    ContinuationControl,
    SteadyProblem,
    continue_branch,
    newton_steady,
    pack_constant,
)
from roachlab.errors import AlignmentError, ConfigError, FitError
from roachlab.grid import Grid
from roachlab.model import ModelParams, constant_steady_conserved
from roachlab.sweeps import eps_sweep, slope_fit, split_initial, steady_structure_compare

PARAMS = ModelParams(a1=1.0, a2=1.0)
GRID = Grid(1, 128)


def test_slope_fit_recovers_exact_power():
    eps = np.logspace(-1, -4, 4)
    assert slope_fit(list(zip(eps, eps**0.5))) == pytest.approx(0.5, abs=1e-12)


def test_slope_fit_constant_data():
    eps = np.logspace(-1, -4, 4)
    assert slope_fit(list(zip(eps, np.full(4, 2.0)))) == pytest.approx(0.0, abs=1e-12)


def test_slope_fit_affine_data_matches_closed_form():
    eps = np.logspace(-1, -4, 4)
    values = 3.0 * eps + 0.01
    lx = np.log(eps) - np.log(eps).mean()
    ly = np.log(values) - np.log(values).mean()
    expected = float(lx @ ly / (lx @ lx))
    got = slope_fit(list(zip(eps, values)))
    assert got == pytest.approx(expected, abs=1e-14)
    assert 0.0 < got < 1.0


def test_slope_fit_rejects_bad_input():
    with pytest.raises(FitError):
        slope_fit([(1e-1, 1.0), (1e-2, 2.0)])
    with pytest.raises(FitError):
        slope_fit([(1e-1, 1.0), (1e-2, -2.0), (1e-3, 1.0)])


def test_split_modes():
    v0 = np.full(GRID.shape, 1.0)
    total = np.full(GRID.shape, 0.8)
    u1, u2 = split_initial(total, v0, PARAMS, "manifold")
    np.testing.assert_allclose(u1 + u2, total, rtol=1e-14)
    assert u1[0] == pytest.approx(0.8 * 0.4999546021312976, rel=1e-10)
    h1, h2 = split_initial(total, v0, PARAMS, "half")
    np.testing.assert_allclose(h1, h2)
    with pytest.raises(ConfigError):
        split_initial(total, v0, PARAMS, "thirds")


@pytest.fixture(scope="module")
def small_sweep():
    rng = np.random.Generator(np.random.Philox(key=11))
    v0 = 1.0 + 0.01 * (2 * rng.random(GRID.shape) - 1)
    u0 = np.ones(GRID.shape)
    return eps_sweep(
        PARAMS, GRID, (1e-1, 1e-2, 1e-3), u0, v0, dt=5e-4, t_end=0.5
    )


def test_eps_sweep_gaps_decrease(small_sweep):
    assert not small_sweep.errors
    assert np.all(np.diff(small_sweep.gap_u_l2) < 0)
    assert np.all(np.diff(small_sweep.gap_v_l2) < 0)
    assert np.all(np.diff(small_sweep.defect_l2) < 0)


def test_eps_sweep_reports_slopes(small_sweep):
    assert set(small_sweep.slopes) == {
        "gap_u_l2", "gap_v_l2", "defect_l2", "rel21_residual"
    }
    assert small_sweep.slopes["defect_l2"] > 0.3


def test_eps_sweep_rel21_percell_identity(small_sweep):
    # with p + q = 1 the relation residual equals the defect norm
    np.testing.assert_allclose(
        small_sweep.rel21_residual, small_sweep.defect_l2, rtol=1e-10
    )


def test_eps_sweep_input_validation():
    u0 = np.ones(GRID.shape)
    v0 = np.ones(GRID.shape)
    with pytest.raises(ConfigError):
        eps_sweep(PARAMS, GRID, (1e-1, 1e-2), u0, v0)
    with pytest.raises(ConfigError):
        eps_sweep(PARAMS, GRID, (1e-2, 1e-1, 1e-3), u0, v0)


def _constant_branch(system, params, lo, hi):
    problem = SteadyProblem(system, params, GRID)
    triple = constant_steady_conserved(lo, params)
    if problem.nfields == 2:
        triple = (triple[0] + triple[1], triple[2])
    start = newton_steady(problem, pack_constant(problem, triple), lo)
    ctrl = ContinuationControl(
        ds0=0.05, ds_max=0.1, max_steps=40, parameter_min=lo, parameter_max=hi
    )
    return continue_branch(problem, start, direction=1, ctrl=ctrl)


@pytest.fixture(scope="module")
def constant_branches():
    conserved = ModelParams()
    rd = _constant_branch("rd3-conserved", conserved, 1.5, 2.5)
    cross = _constant_branch("cross-conserved", conserved, 1.5, 2.5)
    return rd, cross


def test_structure_compare_self_is_zero(constant_branches):
    rd, _ = constant_branches
    rows = steady_structure_compare({1e-3: rd}, rd, [1.8, 2.2])
    assert all(dist <= 1e-12 for _, _, dist in rows)


def test_structure_compare_constant_branches_coincide(constant_branches):
    # with p + q = 1 the conserved constant states of both systems agree
    rd, cross = constant_branches
    rows = steady_structure_compare({1e-3: rd}, cross, [1.8, 2.2])
    assert all(dist <= 1e-9 for _, _, dist in rows)


def test_structure_compare_outside_window_raises(constant_branches):
    rd, cross = constant_branches
    with pytest.raises(AlignmentError):
        steady_structure_compare({1e-3: rd}, cross, [5.0])


@pytest.mark.slow
def test_structure_distances_shrink_with_eps():
    # growth-system branches approach the limit-system branch at r = 1.0
    from roachlab.rd3 import StepControl, constant_state, run
    from roachlab.cross import CrossState, run_cross
    from roachlab.model import constant_steady_growth

    grid = Grid(1, 128)
    window = ContinuationControl(
        ds0=0.02, ds_max=0.03, max_steps=6,
        parameter_min=0.93, parameter_max=1.01, refine_events=False,
    )

    branches = {}
    for eps in (1e-2, 1e-3, 1e-4):
        params = ModelParams(a1=1.0, a2=1.0, eps=eps)
        st = constant_state(grid, constant_steady_growth(params))
        st.v = st.v + 0.01 * grid.cosine_mode(1)
        final = run(st, params, StepControl(dt=2e-3), t_end=80.0).final
        problem = SteadyProblem("rd3-growth", params, grid)
        start = newton_steady(
            problem, np.concatenate([final.u1, final.u2, final.v]), 1.0,
            compute_eigs=True,
        )
        branches[eps] = continue_branch(problem, start, direction=-1, ctrl=window)

    params = ModelParams(a1=1.0, a2=1.0)
    st = CrossState(0.0, np.ones(grid.shape), 1.0 + 0.01 * grid.cosine_mode(1), grid)
    final = run_cross(st, params, StepControl(dt=2e-3), t_end=80.0).final
    problem = SteadyProblem("cross-growth", params, grid)
    start = newton_steady(problem, np.concatenate([final.u, final.v]), 1.0)
    limit_branch = continue_branch(problem, start, direction=-1, ctrl=window)

    rows = steady_structure_compare(branches, limit_branch, [0.99])
    dists = [d for _, _, d in rows]  # ordered by decreasing eps
    assert all(np.isfinite(dists))
    assert dists[0] > dists[1] > dists[2]


def test_relation_residual_trend(small_sweep):
    # the slow-manifold relation residual collapses along the ladder and
    # stays consistent with its own fitted trend
    r = small_sweep.rel21_residual
    eps = small_sweep.eps
    assert r[-1] <= r[0] / 10.0
    slope = small_sweep.slopes["rel21_residual"]
    predicted = r[0] * (eps[-1] / eps[0]) ** slope
    assert r[-1] <= 10.0 * predicted
