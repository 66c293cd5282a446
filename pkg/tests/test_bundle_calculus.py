from fractions import Fraction

import numpy as np
import pytest

from conftest import order
from hyprigid import bundle_calculus as bc
from hyprigid import coordinate_forms as cf
from hyprigid.identities import adjointness_residual, cross_term_residual, section_laplacian_correspondence
from hyprigid.minkowski_lie import geometric_basis, to_rational
from hyprigid.warped_geometry import CrossSectionChart


def label(n, name):
    return geometric_basis(n).labels.index(name)


def unit_form(n, g, slot=None, over="W", backend="rational"):
    phi = bc.EForm.zeros(n, 0 if slot is None else 1, over, backend)
    idx = (g,) if slot is None else (g, slot)
    phi.coeffs[idx] = Fraction(1) if backend == "rational" else 1.0
    return phi


def nonzero(phi):
    gb = geometric_basis(phi.n)
    out = {}
    for idx in zip(*np.nonzero(np.asarray(phi.coeffs != 0))):
        out[(gb.labels[idx[0]],) + tuple(int(i) for i in idx[1:])] = phi.coeffs[idx]
    return out


def random_field(n, degree, seed, scale=0.7):
    gb = geometric_basis(n)
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(gb.dim,) + (n,) * degree + (n,)) * scale
    off = rng.normal(size=(gb.dim,) + (n,) * degree)

    def field(y):
        return np.sin(np.einsum("...b,kb->k...", M, np.atleast_2d(y)) + off)
    return field


# -- pointwise algebra ----------------------------------------------------------

def test_T_of_N_and_rotations():
    n = 4
    TN = nonzero(bc.apply_T(unit_form(n, label(n, "N"))))
    assert TN == {(f"R_n{i}", i): -1 for i in range(1, n)}
    TR = nonzero(bc.apply_T(unit_form(n, label(n, "R_13"))))
    assert TR == {("E_3", 1): 1, ("E_1", 3): -1}
    assert nonzero(bc.apply_T(bc.EForm.zeros(n, 0, backend="rational"))) == {}


def test_degree_limits():
    with pytest.raises(ValueError):
        bc.apply_T(bc.EForm.zeros(3, 2))
    with pytest.raises(ValueError):
        bc.apply_Tstar(bc.EForm.zeros(3, 0))
    with pytest.raises(ValueError):
        bc.EForm(np.zeros((6, 3)), 3, 3)


def test_Tstar_of_translation_forms():
    n = 4
    for i in range(1, n):
        for j in range(1, n):
            if i == j:
                continue
            out = nonzero(bc.apply_Tstar(unit_form(n, label(n, f"E_{i}"), j)))
            a, b = min(i, j), max(i, j)
            assert out == {(f"R_{a}{b}",): 1 if (j, i) == (a, b) else -1}


def test_Tstar_kills_symmetric_translational_forms():
    rng = np.random.default_rng(0)
    n, m = 4, 3
    b = rng.integers(-5, 6, size=(m, m))
    b = b + b.T
    phi = bc.EForm.zeros(n, 1, "M", "rational")
    for i in range(m):
        for j in range(m):
            phi.coeffs[label(n, f"E_{i + 1}"), j] = Fraction(int(b[i, j]))
    assert nonzero(bc.apply_Tstar(phi)) == {}


@pytest.mark.parametrize("n", [3, 4])
def test_T_Tstar_adjoint(n):
    assert adjointness_residual(n, 200, seed=n, backend="float") < 1e-12
    assert adjointness_residual(n, 20, seed=n, backend="rational") == 0


def test_T_swaps_translations_and_rotations():
    for n in (3, 4):
        gb = geometric_basis(n)
        M, cols, rows = bc.operator_matrix(bc.apply_T, n, 0)
        trans = set(gb.translation_indices)
        for i, (g_out, _) in enumerate(rows):
            for j, (g_in, _) in enumerate(cols):
                if M[i, j] != 0:
                    assert (g_in in trans) != (g_out in trans)


def test_H_self_adjoint_nonnegative_and_split_preserving():
    n = 3
    gb = geometric_basis(n)
    H, cols, rows = bc.operator_matrix(bc.curvature_H, n, 1)
    assert (H == H.T).all()
    assert np.linalg.eigvalsh(H.astype(float)).min() > -1e-12
    trans = set(gb.translation_indices)
    for i, (g_out, _) in enumerate(rows):
        for j, (g_in, _) in enumerate(cols):
            if H[i, j] != 0:
                assert (g_in in trans) == (g_out in trans)


# -- blocks ------------------------------------------------------------------

def test_block_layout_examples():
    n = 4
    bl = bc.block_decompose(unit_form(n, label(n, "E_2"), 1))
    assert bl.A[1, 0] == 1
    total = sum(np.count_nonzero(np.asarray(getattr(bl, k) != 0)) for k in "ABCDEFGH")
    assert total == 1
    bl = bc.block_decompose(unit_form(n, label(n, "N"), 0))
    assert bl.F[0, 0] == 1
    shapes = {k: getattr(bl, k).shape for k in "ABCDEFGH"}
    assert shapes == {"A": (3, 3), "B": (3, 3), "C": (3, 1), "D": (3, 1), "E": (3, 1), "F": (1, 1),
                      "G": (1, 3), "H": (3, 3)}


def test_block_roundtrip_exact():
    rng = np.random.default_rng(1)
    for n in (3, 4, 5):
        gb = geometric_basis(n)
        for _ in range(100 // 3 + 1):
            c = to_rational(rng.integers(-9, 10, size=(gb.dim, n)))
            phi = bc.EForm(c, 1, n)
            back = bc.block_reassemble(bc.block_decompose(phi), n)
            assert (back.coeffs == c).all()


def test_block_decompose_requires_normal():
    with pytest.raises(ValueError):
        bc.block_decompose(bc.EForm.zeros(3, 1, "M"))


def test_trace_of_identity_block():
    for n in (3, 4, 5):
        phi = bc.EForm.zeros(n, 1)
        for i in range(1, n):
            phi.coeffs[i, i] = 1.0
        assert bc.trace(phi.coeffs, n) == n - 1


# -- differential operators ----------------------------------------------------

def constant_frame_field(n, g, slot):
    gb = geometric_basis(n)

    def f(p):
        c = np.zeros((len(np.atleast_2d(p)), gb.dim, n))
        c[:, g, slot] = 1
        return c
    return f


def test_D_of_constant_field_at_center():
    chart = CrossSectionChart(3)
    out = bc.apply_D(constant_frame_field(4, label(4, "E_1"), 1), chart, np.zeros((1, 4)))
    assert np.abs(out).max() < 1e-9


def test_Dstar_model_terms():
    chart = CrossSectionChart(3)
    r = 0.6
    y = np.array([[r, 0, 0, 0.0]])
    out = bc.apply_Dstar(constant_frame_field(4, label(4, "R_n1"), 2), chart, y)[0]
    want = np.zeros_like(out)
    want[label(4, "R_12")] = np.tanh(r)      # -tanh r R_21
    np.testing.assert_allclose(out, want, atol=1e-9)
    out = bc.apply_Dstar(constant_frame_field(4, label(4, "E_1"), 1), chart, y)[0]
    want = np.zeros_like(out)
    want[label(4, "N")] = np.tanh(r)
    np.testing.assert_allclose(out, want, atol=1e-9)


def test_split_route_equals_flat_route():
    n = 3
    chart = CrossSectionChart(2)
    y = np.random.default_rng(2).uniform(-0.25, 0.25, size=(5, n))
    field = random_field(n, 1, seed=3)
    errs_d, errs_delta = [], []
    for h in (0.02, 0.01):
        split_d = bc.apply_D(field, chart, y, h) + bc.apply_T(bc.EForm(field(y), 1, n)).coeffs
        split_delta = bc.apply_Dstar(field, chart, y, h) + bc.apply_Tstar(bc.EForm(field(y), 1, n)).coeffs
        errs_d.append(np.abs(split_d - bc.flat_d(field, chart, h)(y)).max())
        errs_delta.append(np.abs(split_delta - bc.flat_delta(field, chart, h)(y)).max())
    assert order(errs_d) >= 1.9 and order(errs_delta) >= 1.9


def test_cross_terms_vanish():
    res = cross_term_residual(3)
    assert res["order"] == "exact" or res["order"] >= 1.9


def test_d_E_squared_on_sections():
    n = 3
    chart = CrossSectionChart(2)
    y = np.random.default_rng(4).uniform(-0.2, 0.2, size=(4, n))
    s = random_field(n, 0, seed=5)
    errs = [np.abs(bc.flat_d(bc.flat_d(s, chart, h), chart, h)(y)).max() for h in (0.02, 0.01)]
    assert errs[1] < 1e-3 and (errs[1] < 1e-9 or order(errs) >= 1.9)


def test_TstarT_on_sections_exact():
    for n in (3, 4, 5):
        M, cols, _ = bc.operator_matrix(lambda p: bc.apply_Tstar(bc.apply_T(p)), n, 0)
        gb = geometric_basis(n)
        want = np.diag([n - 1] * (n) + [2] * (gb.dim - n))
        assert (M == want).all()


def test_laplacian_on_zero_section():
    chart = CrossSectionChart(2)
    zero = lambda p: np.zeros((len(np.atleast_2d(p)), 6))  # noqa: E731
    assert np.abs(bc.laplacian_on_sections(zero, chart, np.zeros((2, 3)), 0.02)).max() == 0


def test_section_laplacian_matches_shifted_hodge_laplacian():
    res = section_laplacian_correspondence(2)
    assert min(res["orders"].values()) >= 1.9


# -- canonical lifts -------------------------------------------------------------

def killing_section(chart, X):
    gb = chart.basis
    c = gb.coefficients(X)

    def s(p):
        return np.einsum("kgb,b->kg", chart.frame_data(np.atleast_2d(p)).adF_inv, c)
    return s


def test_lift_of_killing_field_is_flat():
    chart = CrossSectionChart(2)
    rng = np.random.default_rng(6)
    X = chart.basis.from_coefficients(rng.normal(size=chart.basis.dim))
    s = killing_section(chart, X)
    y = rng.uniform(-0.2, 0.2, size=(5, 3))
    errs, dE = [], []
    for h in (0.02, 0.01):
        lift = bc.canonical_lift(lambda p: s(p)[:, :3], chart, h)
        errs.append(np.abs(lift(y) - s(y)).max())
        dE.append(np.abs(bc.flat_d(lift, chart, h)(y)).max())
    assert order(errs) >= 1.9 and order(dE) >= 1.9


def test_lift_translational_block_symmetric():
    n = 4
    chart = CrossSectionChart(3)
    rng = np.random.default_rng(7)
    M = rng.normal(size=(n, n))
    u = lambda p: np.sin(np.atleast_2d(p) @ M.T)  # noqa: E731
    y = rng.uniform(-0.2, 0.2, size=(5, n))
    asym = []
    for h in (2e-3, 1e-3):
        A = bc.flat_d(bc.canonical_lift(u, chart, h), chart, h)(y)[:, :n, :]
        asym.append(np.abs(A - np.swapaxes(A, 1, 2)).max())
    scale = np.abs(bc.covariant_derivative(lambda p: np.pad(u(p), ((0, 0), (0, 6))), chart, y)).max()
    assert asym[1] < 1e-5 * scale and order(asym) >= 1.9


def test_lift_of_radial_field_has_no_rotation():
    chart = CrossSectionChart(2)

    def radial(p):
        p = np.atleast_2d(p)
        fd = chart.frame_data(p)
        grad = np.einsum("kma,km->ka", fd.theta_inv, np.column_stack([np.zeros(len(p)), p[:, 1:]]))
        return grad
    y = np.random.default_rng(8).uniform(-0.3, 0.3, size=(5, 3))
    y[:, 0] = 0.0
    lift = bc.canonical_lift(radial, chart, 1e-3)
    rot = lift(y)[:, chart.basis.slice_Rab]
    assert np.abs(rot).max() < 1e-5


def test_trace_of_d_E_is_divergence():
    n = 3
    chart = CrossSectionChart(2)
    rng = np.random.default_rng(9)
    M = rng.normal(size=(n, n))
    u = lambda p: np.cos(np.atleast_2d(p) @ M.T)  # noqa: E731
    y = rng.uniform(-0.2, 0.2, size=(5, n))
    errs = []
    for h in (0.02, 0.01):
        tr = bc.trace(bc.flat_d(bc.canonical_lift(u, chart, h), chart, h)(y), n)

        def tau(p):
            return np.einsum("ka,kam->km", u(p), chart.frame_data(p).theta)[:, None, :]
        div = -cf.codifferential(tau, y, h, chart.metric)[:, 0]
        errs.append(np.abs(tr - div).max())
    assert order(errs) >= 1.9


def test_Tstar_D_dual_to_codifferential_of_rotation_form():
    n = 3
    chart = CrossSectionChart(2)
    gb = chart.basis
    rng = np.random.default_rng(0)
    M = rng.normal(size=(gb.dim, n)) * 0.7
    mask = np.zeros(gb.dim)
    mask[gb.rotation_indices] = 1
    s = lambda p: np.sin(np.atleast_2d(p) @ M.T + 0.2) * mask  # noqa: E731
    y = rng.uniform(-0.2, 0.2, size=(4, n))
    errs = []
    for h in (0.02, 0.01):
        TsD = bc.apply_Tstar(bc.EForm(bc.apply_D(s, chart, y, h), 1, n)).coeffs
        tau, _ = bc.section_duals(TsD, chart.frame_data(y))

        def two(p):
            return bc.section_duals(s(p), chart.frame_data(p))[1][:, None]
        errs.append(np.abs(tau - cf.codifferential(two, y, h, chart.metric)[:, 0]).max())
    assert order(errs) >= 1.9


def test_render_blocks_golden(golden):
    n = 4
    gb = geometric_basis(n)
    phi = bc.EForm(np.arange(gb.dim * n, dtype=float).reshape(gb.dim, n), 1, n)
    golden("blocks_m3.txt", bc.render_blocks(phi))
