import numpy as np
import pytest

from roachlab.errors import DomainError
from roachlab.linstab import (
    NeutralCurve,
    assemble_An,
    assemble_Bn,
    det3,
    det_roots,
    max_growth_rate,
    mode_eigenvalues,
    neutral_curve,
    with_growth,
)
from roachlab.model import (
    ModelParams,
    constant_steady_conserved,
    constant_steady_growth,
    eval_dp,
    eval_dq,
    reaction_jacobian,
)

PARAMS = ModelParams()  # conserved defaults, D=0.15, eps=1e-3


def test_An_is_reaction_jacobian_plus_diffusion():
    for n, M in ((0, 0.8), (1, 1.0), (3, 1.4)):
        mat = assemble_An(n, M, PARAMS)
        triple = constant_steady_conserved(M, PARAMS)
        k2 = (n * np.pi / PARAMS.L) ** 2
        expected = reaction_jacobian(*triple, PARAMS) + np.diag(
            [-PARAMS.d * k2, -(PARAMS.d + PARAMS.D) * k2, -PARAMS.D_v * k2]
        )
        np.testing.assert_allclose(mat.entries, expected, rtol=0, atol=1e-10)


def test_An_third_column_structure():
    mat = assemble_An(2, 1.1, PARAMS)
    u1b, u2b, vb = constant_steady_conserved(1.1, PARAMS)
    j3 = (eval_dq(vb, PARAMS) * u1b - eval_dp(vb, PARAMS) * u2b) / PARAMS.eps
    assert mat.entries[0, 2] == pytest.approx(-j3, rel=1e-14)
    assert mat.entries[1, 2] == pytest.approx(j3, rel=1e-14)


def test_An_mode_zero_exchange_block():
    mat = assemble_An(0, 1.0, PARAMS)
    block = mat.entries[:2, :2]
    eigs = np.sort(np.linalg.eigvals(block).real)
    assert eigs[1] == pytest.approx(0.0, abs=1e-9)
    assert eigs[0] == pytest.approx(-1.0 / PARAMS.eps, rel=1e-10)
    # rows of the exchange block sum to zero (mass structure)
    np.testing.assert_allclose(block.sum(axis=0), 0.0, atol=1e-9)


def test_Bn_diagonal_closed_form():
    params = with_growth(PARAMS, 0.7)
    u1b, u2b, vb = constant_steady_growth(params)
    from roachlab.model import eval_p, eval_q

    for n in (0, 1, 2):
        mat = assemble_Bn(n, params)
        k2 = (n * np.pi / params.L) ** 2
        b11 = -params.d * k2 - params.a1 * u1b - eval_q(vb, params) / params.eps
        b22 = (
            -(params.d + params.D) * k2
            - params.a2 * u2b
            - eval_p(vb, params) / params.eps
        )
        assert mat.entries[0, 0] == pytest.approx(b11, rel=1e-14)
        assert mat.entries[1, 1] == pytest.approx(b22, rel=1e-14)


def test_Bn_reduces_to_An_without_growth():
    params_zero = with_growth(PARAMS, 0.0)
    for n in (0, 1, 4):
        a = assemble_An(n, 1.0, PARAMS).entries  # alpha = beta -> vbar matches at M=1
        b = assemble_Bn(n, params_zero).entries
        np.testing.assert_allclose(b, a, rtol=0, atol=1e-12)


def test_Bn_matches_reaction_jacobian():
    params = with_growth(PARAMS, 1.3, ratio=0.5)
    triple = constant_steady_growth(params)
    for n in (1, 2):
        k2 = (n * np.pi / params.L) ** 2
        expected = reaction_jacobian(*triple, params) + np.diag(
            [-params.d * k2, -(params.d + params.D) * k2, -params.D_v * k2]
        )
        np.testing.assert_allclose(assemble_Bn(n, params).entries, expected, atol=1e-10)


def test_eigenvalues_match_characteristic_polynomial_roots():
    for n, M in ((1, 1.0), (2, 0.9), (5, 1.6)):
        a = assemble_An(n, M, PARAMS).entries
        tr = np.trace(a)
        m2 = (
            a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
            + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
            + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
        )
        roots = np.roots([1.0, -tr, m2, -det3(a)])
        got = np.sort_complex(mode_eigenvalues(assemble_An(n, M, PARAMS)))
        want = np.sort_complex(roots)
        scale = np.abs(want).max()
        assert np.abs(got - want).max() <= 1e-9 * scale


def test_det_two_evaluations_agree():
    for M in np.linspace(0.6, 1.8, 7):
        a = assemble_An(1, M, PARAMS).entries
        d1 = det3(a)
        d2 = np.linalg.det(a)
        assert abs(d1 - d2) <= 1e-12 * max(abs(d1), abs(d2), 1.0)


def test_A0_has_conserved_neutral_eigenvalue():
    for M in np.linspace(0.3, 2.5, 12):
        mat = assemble_An(0, M, PARAMS)
        eigs = np.linalg.eigvals(mat.entries)
        norm = np.abs(mat.entries).max()
        assert np.abs(eigs).min() <= 1e-8 * norm


def test_neutral_roots_of_first_mode():
    roots = det_roots("A", 1, PARAMS, (0.5, 2.0))
    assert len(roots) == 2
    assert abs(roots[0] - 0.936341) <= 0.005
    assert abs(roots[1] - 1.09886) <= 0.005


def test_higher_mode_roots_nested_inside_first():
    r1 = det_roots("A", 1, PARAMS, (0.5, 2.0))
    r2 = det_roots("A", 2, PARAMS, (0.5, 2.0))
    r3 = det_roots("A", 3, PARAMS, (0.5, 2.0))
    assert r1[0] < r2[0] < r3[0] < r3[1] < r2[1] < r1[1]


def test_growth_rate_spot_checks():
    lam, mode = max_growth_rate("A", 1.0, PARAMS)
    assert lam > 0 and mode >= 1
    lam_low, _ = max_growth_rate("A", 0.5, PARAMS)
    lam_high, _ = max_growth_rate("A", 2.0, PARAMS)
    assert lam_low < 0
    assert lam_high < 0


def test_growth_rate_increases_with_extra_diffusivity():
    import dataclasses

    weak = dataclasses.replace(PARAMS, D=1e-6)
    lam_weak, _ = max_growth_rate("A", 1.0, weak)
    lam_strong, _ = max_growth_rate("A", 1.0, PARAMS)
    assert lam_weak < lam_strong


def test_growth_system_unstable_for_small_r():
    lam, _ = max_growth_rate("B", 0.5, PARAMS)
    assert lam > 0


def test_neutral_curve_in_parameter_D_plane():
    curve = neutral_curve(
        "A", 1, PARAMS, np.linspace(0.8, 1.2, 41), (0.005, 0.5), D_scan=160
    )
    assert isinstance(curve, NeutralCurve)
    assert curve.points.shape[0] > 0
    assert np.all(curve.residuals <= 1e-8 * np.maximum(curve.scales, 1.0))
    # at M = 1 the mode destabilises already at small D (tongue floor),
    # so D = 0.15 lies inside the unstable region
    at_m1 = curve.points[np.isclose(curve.points[:, 0], 1.0)]
    assert at_m1.shape[0] >= 1
    assert at_m1[:, 1].min() < 0.15


def test_growth_neutral_curve_exists():
    curve = neutral_curve(
        "B", 1, PARAMS, np.linspace(0.5, 8.0, 40), (0.02, 0.4), D_scan=80
    )
    assert curve.points.shape[0] > 0
    assert curve.parameter_name == "r"


def test_empty_scan_is_not_an_error():
    curve = neutral_curve(
        "A", 1, PARAMS, np.linspace(2.5, 3.0, 11), (0.02, 0.1), D_scan=30
    )
    assert curve.points.shape == (0, 2)


def test_mode_index_validation():
    with pytest.raises(DomainError):
        assemble_An(-1, 1.0, PARAMS)
    with pytest.raises(DomainError):
        max_growth_rate("A", 1.0, PARAMS, n_max=0)
    with pytest.raises(DomainError):
        det_roots("C", 1, PARAMS, (0.5, 2.0))
