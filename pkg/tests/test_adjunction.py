import warnings

import numpy as np
import pytest

from conftest import HEX, NONSINGULAR, TORI, branch_points, lattice, random_configuration
from greenlame import UnsupportedError, c_p, det_hessian, hessian_Gn, verify_adjunction
from greenlame.adjunction import (
    A_matrix,
    c_p_all_minors,
    closed_form_defects,
    cp_half_periods,
    cp_half_periods_unit_exponents,
    det_hessian_half_periods,
    g_identity_defect,
    jg_bridge_defect,
)
from oracles import gradient_fd

# closed-form values of det D^2 G_n and c_p
FROZEN = {
    (1j, "h1"): (-0.9473169873731518, 2.3946339747463026),
    (1j, "h3"): (0.25, 1.197316987373153),
    (1.1j, "h12"): (15.24609155321817, 14.112275497088088),
    (1.1j, "h13"): (-4.328890948112472, 8.510975684499062),
    (1.1j, "h23"): (-2.5422860577908866, 5.601299812589081),
    (1.1j, "q+"): (9.937309372905462, 15.820076663331657),
    (1.1j, "q-"): (3.4773448211164673, 6.971160698981091),
}


def _point(tau, label):
    n = 1 if len(label) == 2 and label[0] == "h" else 2
    return next(b for b in branch_points(tau, n) if b.label == label)


# ---------------------------------------------------------------- the identity


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("tau", TORI)
def test_adjunction_identity(n, tau):
    L = lattice(tau)
    for bp in branch_points(tau, n):
        rep = verify_adjunction(bp, L, jg=False)
        assert rep.c_p >= 0
        if rep.singular:
            # both sides vanish at a merged point
            assert max(abs(rep.H), rep.c_p) < 1e-6 * L.scale**n
        else:
            assert rep.defect < 1e-7


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("tau", NONSINGULAR)
def test_sign_of_hessian_follows_D(n, tau):
    L = lattice(tau)
    for bp in branch_points(tau, n):
        rep = verify_adjunction(bp, L, jg=False)
        assert rep.sign == (-1) ** n * int(np.sign(rep.D))


@pytest.mark.parametrize("tau", TORI)
def test_c_p_independent_of_minor(tau):
    L = lattice(tau)
    for bp in branch_points(tau, 2):
        vals = c_p_all_minors(bp, L)
        assert np.max(vals) - np.min(vals) <= 1e-8 * max(np.max(vals), 1e-300)
        assert c_p(bp, L) == vals[-1]


@pytest.mark.parametrize("key", sorted(FROZEN, key=str))
def test_frozen_values(key):
    tau, label = key
    L = lattice(tau)
    H, cp = FROZEN[key]
    bp = _point(tau, label)
    assert det_hessian(bp.p, L)[0] == pytest.approx(H, rel=1e-9)
    assert c_p(bp, L) == pytest.approx(cp, rel=1e-9)


def test_square_torus_third_half_period():
    # at omega_3/2 on the square torus D^2 G = I/2 by symmetry, and D^2 G_1 = -D^2 G
    L = lattice(1j)
    bp = _point(1j, "h3")
    assert np.allclose(hessian_Gn(bp.p, L), -0.5 * np.eye(2), atol=1e-13)


def test_hessian_matches_finite_differences():
    from greenlame import multiple_green_grad

    L = lattice(0.3 + 1.2j)
    a = random_configuration(L, 2, np.random.default_rng(3))
    x = np.ravel(np.column_stack([a.real, a.imag]))
    fd = np.column_stack([
        gradient_fd(lambda v, c=c: multiple_green_grad(v[0::2] + 1j * v[1::2], L)[c], x, 1e-4) for c in range(4)
    ])
    H = hessian_Gn(a, L)
    assert np.max(np.abs(fd - H)) <= 1e-7 * max(1.0, np.max(np.abs(H)))
    assert np.allclose(H, H.T, atol=1e-13)


def test_singular_point_flags_and_vanishes():
    L = lattice(HEX)
    bp = _point(HEX, "q0")
    rep = verify_adjunction(bp, L, jg=False)
    assert rep.singular
    assert rep.c_p < 1e-6 and abs(rep.H) < 1e-6
    assert abs(rep.det_minor) < 1e-2


def test_ill_conditioned_hessian_warns(monkeypatch):
    import greenlame.adjunction as adj

    L = lattice(1.1j)
    a = _point(1.1j, "h12").p
    _, cond = det_hessian(a, L, warn=False)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        det_hessian(a, L)
    monkeypatch.setattr(adj, "ILL_CONDITIONED", cond / 2)
    with pytest.warns(RuntimeWarning):
        det_hessian(a, L)


# ---------------------------------------------------------------- n = 2 closed forms


@pytest.mark.parametrize("tau", [1.1j, 0.3 + 1.2j])
def test_closed_forms(tau):
    L = lattice(tau)
    for bp in branch_points(tau, 2):
        d = closed_form_defects(bp, L)
        assert d["hessian_matrix"] < 1e-10
        assert d["det"] < 1e-8
        assert d["c_p"] < 1e-8


@pytest.mark.parametrize("tau", [1.1j, 0.3 + 1.2j])
def test_commonly_quoted_c_p_differs(tau):
    # the product |e_i - e_j||e_i - e_k||e_j - e_k| with unit exponents is not c_p
    L = lattice(tau)
    for bp in branch_points(tau, 2)[:3]:
        i, j = (h - 1 for h in bp.template.half)
        good = cp_half_periods(L, i, j, bp.exp_c)
        bad = cp_half_periods_unit_exponents(L, i, j, bp.exp_c)
        assert good == pytest.approx(c_p(bp, L), rel=1e-8)
        assert abs(bad / good - 1) > 1e-2


def test_half_period_det_symmetric_in_labels():
    L = lattice(0.3 + 1.2j)
    assert det_hessian_half_periods(L, 0, 1) == pytest.approx(det_hessian_half_periods(L, 1, 0), rel=1e-14)


def test_closed_forms_need_n2():
    with pytest.raises(UnsupportedError):
        closed_form_defects(branch_points(1j, 1)[0], lattice(1j))


# ---------------------------------------------------------------- J(g) bridge


@pytest.mark.parametrize("n", [1, 2, 3])
def test_A_matrix_determinant(n):
    assert np.linalg.det(A_matrix(n)) == pytest.approx((-1) ** (n - 1) / n**2, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("tau", NONSINGULAR)
def test_g_is_linear_image_of_gradient(n, tau):
    L = lattice(tau)
    rng = np.random.default_rng(20 + n)
    for _ in range(5):
        assert g_identity_defect(random_configuration(L, n, rng), L) < 1e-10


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("tau", [1.1j, 0.3 + 1.2j])
def test_jg_bridge(n, tau):
    L = lattice(tau)
    rng = np.random.default_rng(30 + n)
    for _ in range(10):
        assert jg_bridge_defect(random_configuration(L, n, rng), L) < 1e-5


def test_jg_bridge_at_branch_points():
    L = lattice(1.1j)
    for bp in branch_points(1.1j, 2):
        assert verify_adjunction(bp, L).jg_defect < 1e-5
