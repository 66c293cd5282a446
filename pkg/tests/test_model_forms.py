import numpy as np
import pytest

from hyprigid.model_forms import (
    BendField, NonHarmonicError, bend_from_quadratic_differential, bend_residuals, cauchy_riemann_residual,
    extend_model, verify_model_harmonic,
)
from hyprigid.warped_geometry import CrossSectionChart

CHART = CrossSectionChart(2)
X = np.random.default_rng(3).uniform(-0.3, 0.3, size=(15, 2))


def test_zero_differential_gives_zero_form():
    B = bend_from_quadratic_differential([], CHART)
    assert np.abs(B(X)).max() == 0
    w0 = extend_model(B)
    y = np.column_stack([np.full(len(X), 0.4), X])
    assert np.abs(w0(y)).max() == 0


@pytest.mark.parametrize("coeffs", [[1.0], [0.0, 1.0], [0.3 - 0.2j, 0.5, 1j]])
def test_bend_field_symmetric_traceless(coeffs):
    b = bend_from_quadratic_differential(coeffs, CHART)(X)
    assert np.abs(b - np.swapaxes(b, 1, 2)).max() == 0
    assert np.abs(np.trace(b, axis1=1, axis2=2)).max() == 0
    assert np.abs(b).max() > 0


def test_constructor_requires_surface_slice():
    with pytest.raises(ValueError, match="m must be 2"):
        bend_from_quadratic_differential([1.0], CrossSectionChart(3))


def test_model_blocks_scale_by_minus_tanh():
    w0 = extend_model(bend_from_quadratic_differential([1.0, 0.5], CHART))
    y = np.column_stack([np.full(len(X), 0.7), X])
    bl = w0.blocks(y)
    np.testing.assert_allclose(bl.A, -np.tanh(0.7) * bl.B, atol=1e-15)
    assert -np.tanh(0.7) == pytest.approx(-0.6044, abs=1e-4)
    for name in ("C", "D", "E", "F", "G", "H"):
        assert np.abs(getattr(bl, name)).max() == 0


def test_model_is_constant_along_normal_geodesics():
    # in the extended frame the R_n coefficients do not depend on r
    w0 = extend_model(bend_from_quadratic_differential([0.2, 1.0], CHART))
    y0 = np.column_stack([np.zeros(len(X)), X])
    for r in (-0.9, 0.5):
        y = y0.copy()
        y[:, 0] = r
        np.testing.assert_array_equal(w0.blocks(y).B, w0.blocks(y0).B)


def test_non_harmonic_bend_rejected():
    def b(x):
        s = x[:, 0] ** 2
        return np.stack([np.stack([s, 0 * s], -1), np.stack([0 * s, -s], -1)], -2)
    with pytest.raises(NonHarmonicError) as err:
        extend_model(BendField(CHART, b, "x0^2 diag(1,-1)"))
    assert err.value.residuals["Dstar"] > 1e-2
    extend_model(BendField(CHART, b), check=False)


def test_harmonic_residuals_and_cauchy_riemann():
    res = bend_residuals(bend_from_quadratic_differential([0.0, 0.0, 1.0], CHART), X, 1e-3)
    assert res["D"] < 1e-5 and res["Dstar"] < 1e-5
    assert res["symmetry"] == 0 and res["trace"] == 0
    assert cauchy_riemann_residual([1.0, -2.0, 0.5j], X, 1e-3) < 1e-9


def test_verify_reports_trace_and_orders():
    w0 = extend_model(bend_from_quadratic_differential([1.0], CHART))
    y = np.column_stack([np.linspace(-0.3, 0.3, len(X)), X])
    rep = verify_model_harmonic(w0, y)
    assert rep["trace"] < 1e-14 and rep["Tstar"] < 1e-14 and rep["Tstar_exact_zero"]
    assert all(v == "exact" or v >= 1.9 for v in rep["orders"].values())
