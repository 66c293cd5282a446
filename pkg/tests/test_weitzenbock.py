import numpy as np
import pytest

from conftest import order
from hyprigid import bundle_calculus as bc
from hyprigid.coordinate_forms import StencilError
from hyprigid.minkowski_lie import geometric_basis
from hyprigid.model_forms import bend_from_quadratic_differential, extend_model
from hyprigid.warped_geometry import CrossSectionChart
from hyprigid.weitzenbock import (
    PatchGrid, boundary_integrand, boundary_integrand_hodge, check_zero_blocks, contraction_blocks,
    divergence_identity_residual, flux_density, integrand_reduction, normal_contraction, render_contraction_table,
    rot_of, tangential_killing_field, wedge_boundary_density, weitzenbock_balance,
)


def random_form(m, count=6, seed=0):
    gb = geometric_basis(m + 1)
    return bc.EForm(np.random.default_rng(seed).normal(size=(count, gb.dim, m + 1)), 1, m + 1)


def unit_blocks(m, **blocks):
    phi = bc.EForm.zeros(m + 1, 1)
    bl = bc.block_decompose(phi)
    for name, value in blocks.items():
        getattr(bl, name)[...] = value
    return phi


def test_contraction_table_golden(golden):
    golden("contraction_m3.txt", render_contraction_table(3))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_block_formula_matches_operator(m):
    phi = random_form(m, seed=m)
    a, b = normal_contraction(phi), contraction_blocks(phi)
    np.testing.assert_allclose(a.stacked(), b.stacked(), atol=1e-13)


def test_normal_contraction_examples():
    m = 3
    A = np.arange(9.0).reshape(3, 3)
    rep = normal_contraction(unit_blocks(m, A=A))
    np.testing.assert_array_equal(rep.fourth, A)
    assert np.abs(rep.first).max() == rep.second.max() == rep.third.max() == 0
    np.testing.assert_array_equal(normal_contraction(unit_blocks(m, F=1.0)).fourth, np.eye(m))
    E = np.array([[1.0], [-2.0], [0.5]])
    np.testing.assert_array_equal(normal_contraction(unit_blocks(m, E=E)).third, rot_of(E, m))


def test_contraction_needs_one_form_over_w():
    with pytest.raises(ValueError):
        normal_contraction(bc.EForm.zeros(3, 0))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_integrand_is_normal_flux_plus_dual_term(m):
    phi = random_form(m, seed=10 + m)
    s = np.einsum("kg,kg->k", phi.coeffs[:, :, 0], bc.apply_Tstar(phi).coeffs)
    b = boundary_integrand(phi)
    np.testing.assert_allclose(b, flux_density(phi)[:, 0] + s, atol=1e-12)
    np.testing.assert_allclose(b, boundary_integrand_hodge(phi), atol=1e-12)
    # the literal density picks up (-1)^m on its first term
    np.testing.assert_allclose(wedge_boundary_density(phi), (-1) ** m * b - s, atol=1e-12)


def test_integrand_quadratic():
    phi, psi = random_form(2, seed=1), random_form(2, seed=2)
    Q = boundary_integrand
    np.testing.assert_allclose(Q(bc.EForm(3 * phi.coeffs, 1, 3)), 9 * Q(phi), rtol=1e-13)
    polar = Q(bc.EForm(phi.coeffs + psi.coeffs, 1, 3)) - Q(phi) - Q(psi)
    swapped = Q(bc.EForm(psi.coeffs + phi.coeffs, 1, 3)) - Q(psi) - Q(phi)
    np.testing.assert_allclose(polar, swapped, atol=1e-13)


def test_model_form_integrand_vanishes_on_boundary():
    chart = CrossSectionChart(2)
    w0 = extend_model(bend_from_quadratic_differential([1.0, 0.3j], chart))
    y = np.column_stack([np.zeros(8), np.random.default_rng(0).uniform(-0.3, 0.3, size=(8, 2))])
    assert np.abs(boundary_integrand(bc.EForm(w0(y), 1, 3))).max() < 1e-14


def test_integrand_reduces_to_cross_term():
    chart = CrossSectionChart(2)
    w0 = extend_model(bend_from_quadratic_differential([1.0, 0.5], chart))
    killing = tangential_killing_field(chart, [0.3, -0.2, 0.7])
    lift = bc.canonical_lift(killing, chart, 1e-3)
    x = np.random.default_rng(4).uniform(-0.3, 0.3, size=(6, 2))
    rep = integrand_reduction(w0, lift, chart, x, 1e-3)
    assert rep["model_only"] < 1e-14
    assert rep["residual"] < 1e-6 * max(1.0, rep["scale"])


class TestZeroBlocks:
    chart = CrossSectionChart(2)
    x = np.random.default_rng(7).uniform(-0.3, 0.3, size=(5, 2))

    def test_constant_section(self):
        rep = check_zero_blocks(lambda p: np.zeros((len(p), self.chart.basis.dim)), self.chart, self.x)
        assert max(rep["total"].values()) == 0

    def test_killing_lift(self):
        killing = tangential_killing_field(self.chart, [1.0, 0.5, -0.4])
        rep = check_zero_blocks(bc.canonical_lift(killing, self.chart, 1e-2), self.chart, self.x, 1e-2)
        assert rep["precondition"]["normal_component"] == 0
        assert max(rep["total"].values()) < 1e-12

    def test_odd_field_second_order(self):
        def field(p):
            r, x = p[:, 0], p[:, 1:]
            out = np.zeros((len(p), 3))
            out[:, 0] = r * np.sin(x[:, 1]) + r ** 2
            out[:, 1] = np.cos(x[:, 0]) + r ** 3
            out[:, 2] = x[:, 0] * x[:, 1] - r ** 2 * x[:, 0]
            return out
        errs = [max(check_zero_blocks(bc.canonical_lift(field, self.chart, h), self.chart, self.x, h)
                    ["total"].values()) for h in (0.02, 0.01)]
        assert errs[1] < 1e-3 and order(errs) >= 1.9

    def test_normal_component_breaks_g_block(self):
        def field(p):
            out = np.zeros((len(p), 3))
            out[:, 0] = 1.0 + p[:, 1]
            return out
        rep = check_zero_blocks(bc.canonical_lift(field, self.chart, 1e-3), self.chart, self.x, 1e-3)
        assert rep["precondition"]["normal_component"] > 0.5
        assert rep["total"]["G"] > 0.1


def test_balance_trivial_for_zero_form():
    chart = CrossSectionChart(2)
    rep = weitzenbock_balance(lambda p: np.zeros((len(p), 6, 3)), chart, PatchGrid(2, 5, 0.3, 0.3))
    assert rep["residual"] == 0 and rep["boundary"] == 0


def test_patch_outside_chart_rejected():
    chart = CrossSectionChart(2, radius=0.5)
    with pytest.raises(StencilError):
        weitzenbock_balance(lambda p: np.zeros((len(p), 6, 3)), chart, PatchGrid(2, 5, 0.4, 0.3))


def test_pointwise_divergence_identity():
    chart = CrossSectionChart(2)
    w0 = extend_model(bend_from_quadratic_differential([0.5, 1.0], chart))
    y = np.column_stack([np.linspace(-0.5, 0.0, 6), np.random.default_rng(2).uniform(-0.3, 0.3, size=(6, 2))])
    errs = [divergence_identity_residual(w0, chart, y, h) for h in (2e-2, 1e-2)]
    assert errs[1] < 1e-3 and order(errs) >= 1.9
