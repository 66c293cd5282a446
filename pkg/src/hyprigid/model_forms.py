"""Harmonic bend fields on cross-section patches and their model extensions.

A bend field is a symmetric traceless m x m matrix field ``b`` on the core
slice. Its model extension over the warped chart is

    w0 = sum b_ij (R_ni - tanh(r) E_i) (x) w_j

in extended-frame coefficients, independent of ``r`` apart from the tanh factor.
For m = 2, holomorphic quadratic differentials ``phi(z) dz^2`` on the disk
model give harmonic bend fields via ``b_ij = Re(phi dz(e_i) dz(e_j))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bundle_calculus as bc
from . import coordinate_forms as cf
from .minkowski_lie import to_rational
from .warped_geometry import CrossSectionChart

__all__ = [
    "BendField", "ModelForm", "NonHarmonicError", "bend_from_quadratic_differential",
    "bend_residuals", "extend_model", "verify_model_harmonic", "cauchy_riemann_residual",
    "HARMONIC_TOLERANCE_CONSTANT",
]

# residual <= C h^2 max|b|, C calibrated on the m = 2 quadratic-differential family
HARMONIC_TOLERANCE_CONSTANT = 50.0


class NonHarmonicError(ValueError):
    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class BendField:
    """``b(x)`` as a callable on slice points (K, m) returning (K, m, m)."""

    chart: CrossSectionChart
    b: object
    label: str = ""
    harmonic: bool = False

    def __call__(self, x):
        return self.b(np.atleast_2d(np.asarray(x, dtype=float)))

    def as_slice_form(self, y) -> np.ndarray:
        """The r-independent W-form ``sum b_ij R_ni (x) w_j`` at chart points."""
        y = np.atleast_2d(y)
        gb = self.chart.basis
        b = self(y[:, 1:])
        out = np.zeros((y.shape[0], gb.dim, self.chart.n))
        out[:, gb.slice_Rn, 1:] = b
        return out


@dataclass
class ModelForm:
    bend: BendField

    @property
    def chart(self):
        return self.bend.chart

    def __call__(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        gb = self.chart.basis
        b = self.bend(y[:, 1:])
        out = np.zeros((y.shape[0], gb.dim, self.chart.n))
        out[:, gb.slice_Rn, 1:] = b
        out[:, gb.slice_E, 1:] = -np.tanh(y[:, 0])[:, None, None] * b
        return out

    def blocks(self, y):
        return bc.block_decompose(bc.EForm(self(y), 1, self.chart.n))


def bend_from_quadratic_differential(coefficients, chart: CrossSectionChart, label: str = "") -> BendField:
    """Bend field of ``phi(z) dz^2`` with ``phi(z) = sum_k coefficients[k] z^k``."""
    if chart.m != 2:
        raise ValueError("unsupported dimension for this constructor: m must be 2")
    coeffs = np.asarray(coefficients, dtype=complex)

    def b(x):
        z = chart.disk_coordinate(x)
        w1 = chart.disk_frame_derivative(x)[:, 0]
        phi = np.polynomial.polynomial.polyval(z, coeffs) if coeffs.size else np.zeros_like(z)
        # the chart frame is conformal with dz(e_2) = i dz(e_1), so b is built from a
        # single complex number and is symmetric and traceless bit for bit
        a = phi * w1 * w1
        return np.stack([np.stack([a.real, -a.imag], -1), np.stack([-a.imag, -a.real], -1)], -2)

    return BendField(chart, b, label or f"phi={list(coefficients)}", harmonic=True)


def cauchy_riemann_residual(coefficients, points, h: float) -> float:
    """Flat divergence of ``[[Re phi, -Im phi], [-Im phi, -Re phi]]`` in disk coordinates."""
    coeffs = np.asarray(coefficients, dtype=complex)

    def field(p):
        phi = np.polynomial.polynomial.polyval(p[:, 0] + 1j * p[:, 1], coeffs) if coeffs.size else 0 * p[:, 0]
        M = np.stack([np.stack([phi.real, -phi.imag], -1), np.stack([-phi.imag, -phi.real], -1)], -2)
        return M

    P = cf.partials(field, points, h)     # (K, mu, i, j)
    div = np.einsum("kmim->ki", P)
    return float(np.abs(div).max())


def bend_residuals(B: BendField, points, h: float) -> dict:
    """Max residuals of D B and D* B on the slice, plus symmetry and trace."""
    chart = B.chart
    pts = np.atleast_2d(points)
    y = np.column_stack([np.zeros(len(pts)), pts])
    DB = bc.apply_D(B.as_slice_form, chart, y, h)[:, :, 1:, 1:]
    DsB = bc.apply_Dstar(B.as_slice_form, chart, y, h)
    b = B(pts)
    return {
        "D": float(np.abs(DB).max()),
        "Dstar": float(np.abs(DsB).max()),
        "symmetry": float(np.abs(b - np.swapaxes(b, 1, 2)).max()),
        "trace": float(np.abs(np.trace(b, axis1=1, axis2=2)).max()),
        "scale": float(np.abs(b).max()),
    }


def extend_model(B: BendField, points=None, h: float | None = None, check: bool = True) -> ModelForm:
    """Model form of a harmonic bend field; rejects non-harmonic input."""
    if check:
        h = B.chart.h if h is None else h
        if points is None:
            rng = np.random.default_rng(0)
            points = _sample_ball(rng, 20, B.chart.m, 0.5 * B.chart.radius)
        res = bend_residuals(B, points, h)
        tol = HARMONIC_TOLERANCE_CONSTANT * h ** 2 * max(res["scale"], 1.0)
        bad = {k: v for k, v in res.items() if k != "scale" and v > tol}
        if bad:
            raise NonHarmonicError(f"bend field is not harmonic: {bad} exceed {tol:.3g}", res)
    return ModelForm(B)


def _sample_ball(rng, count, m, radius):
    v = rng.normal(size=(count, m))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / m)


def verify_model_harmonic(w0: ModelForm, points, hs=(0.02, 0.01)) -> dict:
    """Residuals of d_E w0, delta_E w0 and D* w0 at two spacings with observed orders.

    A residual sequence at roundoff level is reported with order ``"exact"``.
    """
    chart = w0.chart
    y = np.atleast_2d(points)
    table = {"d_E": [], "delta_E": [], "Dstar": []}
    for h in hs:
        table["d_E"].append(float(np.abs(bc.flat_d(w0, chart, h)(y)).max()))
        table["delta_E"].append(float(np.abs(bc.flat_delta(w0, chart, h)(y)).max()))
        table["Dstar"].append(float(np.abs(bc.apply_Dstar(w0, chart, y, h)).max()))
    report = {"h": list(hs), "residuals": table, "orders": {}}
    floor = 1e-9 * max(1.0, float(np.abs(w0(y)).max()))
    for k, errs in table.items():
        if max(errs) < floor:
            report["orders"][k] = "exact"
        else:
            report["orders"][k] = cf.measured_order(errs, hs[0] / hs[1])
    ts = bc.apply_Tstar(bc.EForm(w0(y), 1, chart.n)).coeffs
    report["Tstar"] = float(np.abs(ts).max())
    # sampled coefficients are exact binary fractions, so this is an exact evaluation
    ts_exact = bc.apply_Tstar(bc.EForm(to_rational(w0(y)), 1, chart.n)).coeffs
    report["Tstar_exact_zero"] = bool(all(v == 0 for v in ts_exact.ravel()))
    report["trace"] = float(np.abs(bc.trace(w0(y), chart.n)).max())
    return report
