"""Boundary calculus for bundle-valued 1-forms near a geodesic boundary slice.

The boundary is the slice r = 0 of the warped chart with outward normal
``n = d/dr``; the manifold side is r <= 0. Block names follow the layout
of :func:`hyprigid.bundle_calculus.block_decompose`.

The Weitzenboeck balance is evaluated in the form

    |d_E w|^2 + |delta_E w|^2 = |D w|^2 + |D* w|^2 + (H w, w) + B,
    B = int_{boundary} <w, i(nu) T w> - <w(nu), T* w>,

which is the divergence theorem applied to the vector field
``X^a = <w, (T w)(e_a, .)> - <w(e_a), T* w>`` whose divergence is
``2 (<D w, T w> + <D* w, T* w>)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import bundle_calculus as bc
from . import coordinate_forms as cf
from .minkowski_lie import geometric_basis

__all__ = [
    "BoundaryBlockReport", "normal_contraction", "contraction_blocks", "boundary_integrand",
    "boundary_integrand_hodge", "wedge_boundary_density", "flux_density", "skew_of", "rot_of",
    "frame_wedge", "frame_hodge", "levi_civita", "check_zero_blocks", "weitzenbock_balance",
    "divergence_identity_residual", "render_contraction_table", "PatchGrid", "tangential_killing_field",
    "integrand_reduction", "compact_bump_form",
]


@dataclass
class BoundaryBlockReport:
    """Blocks of ``i(n) T w``: N-row (1 x m), E-rows (m x m), R_ab-rows (k' x m), R_n-rows (m x m)."""

    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    fourth: np.ndarray
    integrand: object = None

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.first, self.second, self.third, self.fourth], axis=-2)


def _check_boundary_form(phi):
    if not isinstance(phi, bc.EForm) or phi.degree != 1 or phi.over != "W":
        raise ValueError("a boundary-framed 1-form over W with distinguished normal is required")


def _split_rows(mat, n):
    gb = geometric_basis(n)
    return (mat[..., gb.slice_N, :], mat[..., gb.slice_E, :],
            mat[..., gb.slice_Rab, :], mat[..., gb.slice_Rn, :])


def normal_contraction(phi: bc.EForm) -> BoundaryBlockReport:
    """``i(n) T w`` read off from the full operator T (the normal slot is frame 0)."""
    _check_boundary_form(phi)
    Tw = bc.apply_T(phi).coeffs
    inT = Tw[..., :, 0, 1:]
    return BoundaryBlockReport(*_split_rows(inT, phi.n))


def skew_of(D: np.ndarray, m: int) -> np.ndarray:
    """The so(m) matrix of the ``R_ab (x) dr`` column (k' x 1 -> m x m)."""
    gb = geometric_basis(m + 1)
    out = np.zeros(D.shape[:-2] + (m, m), dtype=D.dtype)
    if D.dtype == object:
        out.fill(0)
    for k, (a, b) in enumerate(gb.tangential_pairs):
        out[..., a - 1, b - 1] = D[..., k, 0]
        out[..., b - 1, a - 1] = -D[..., k, 0]
    return out


def rot_of(E: np.ndarray, m: int) -> np.ndarray:
    """Image of the tangent vector ``E`` under ``E_i -> sum_j R_ij (x) w_j`` (k' x m)."""
    gb = geometric_basis(m + 1)
    out = np.zeros(E.shape[:-2] + (gb.kprime, m), dtype=E.dtype)
    if E.dtype == object:
        out.fill(0)
    for k, (a, b) in enumerate(gb.tangential_pairs):
        out[..., k, b - 1] = E[..., a - 1, 0]
        out[..., k, a - 1] = -E[..., b - 1, 0]
    return out


def contraction_blocks(phi: bc.EForm) -> BoundaryBlockReport:
    """Blocks of ``i(n) T w`` assembled from the blocks C^T, B + skew(D), rot(E), A + F Id."""
    _check_boundary_form(phi)
    m = phi.n - 1
    bl = bc.block_decompose(phi)
    eye = np.eye(m, dtype=int).astype(phi.coeffs.dtype)
    return BoundaryBlockReport(
        first=np.swapaxes(bl.C, -1, -2),
        second=bl.B + skew_of(bl.D, m),
        third=rot_of(bl.E, m),
        fourth=bl.A + bl.F[..., 0:1, 0:1] * eye,
    )


def boundary_integrand(phi: bc.EForm):
    """``G.C^T + A.B + A.skew(D) + H.rot(E) + B.A + B.F(Id)`` per node."""
    _check_boundary_form(phi)
    m = phi.n - 1
    bl = bc.block_decompose(phi)
    t2 = contraction_blocks(phi)

    def dot(x, y):
        return (x * y).sum(axis=(-1, -2))

    eye = np.eye(m, dtype=int).astype(phi.coeffs.dtype)
    return (dot(bl.G, t2.first) + dot(bl.A, bl.B) + dot(bl.A, skew_of(bl.D, m))
            + dot(bl.H, t2.third) + dot(bl.B, bl.A) + dot(bl.B, bl.F[..., 0:1, 0:1] * eye))


# ---------------------------------------------------------------------------
# frame exterior algebra (orientation e_1..e_m, n; n is frame slot 0)

def _perm_sign(p) -> int:
    p = list(p)
    s = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def levi_civita(n: int) -> np.ndarray:
    """Volume form ``w_1 ^ .. ^ w_m ^ dr`` as an antisymmetric array over frame slots."""
    order = list(range(1, n)) + [0]
    eps = np.zeros((n,) * n)
    for p in permutations(range(n)):
        eps[tuple(order[i] for i in p)] = _perm_sign(p)
    return eps


def frame_wedge(a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
    """Wedge of scalar frame forms with leading batch axes."""
    batch = a.shape[: a.ndim - p]
    t = a.reshape(batch + a.shape[a.ndim - p:] + (1,) * q) * b.reshape(batch + (1,) * p + b.shape[b.ndim - q:])
    k = p + q
    nb = len(batch)
    out = np.zeros_like(t)
    for perm in permutations(range(k)):
        out = out + _perm_sign(perm) * np.transpose(t, tuple(range(nb)) + tuple(nb + i for i in perm))
    return out / (math.factorial(p) * math.factorial(q))


def frame_hodge(a: np.ndarray, p: int, n: int) -> np.ndarray:
    eps = levi_civita(n)
    letters = "abcdefgh"
    src = letters[:p]
    rest = letters[p:n]
    expr = f"...{src},{src}{rest}->...{rest}"
    return np.einsum(expr, a, eps) / math.factorial(p)


def boundary_integrand_hodge(phi: bc.EForm):
    """``(w ^ *T w)(e_1..e_m) / vol_M(e_1..e_m)`` with ``vol_M = i(n) vol_W``, summed over the bundle index."""
    _check_boundary_form(phi)
    n = phi.n
    Tw = bc.apply_T(phi).coeffs.astype(float)
    w = phi.coeffs.astype(float)
    star = frame_hodge(Tw, 2, n)                       # (..., g, n-2 slots)
    wedge = frame_wedge(w, 1, star, n - 2).sum(axis=-n)  # sum over g (value axis)
    idx = tuple(range(1, n))
    volM = levi_civita(n)[(0,) + idx]
    return wedge[(Ellipsis,) + idx] / volM


def wedge_boundary_density(phi: bc.EForm):
    """``-(*T w ^ w + T* w ^ *w)`` on the boundary divided by ``vol_M``."""
    _check_boundary_form(phi)
    n = phi.n
    w = phi.coeffs.astype(float)
    Tw = bc.apply_T(phi).coeffs.astype(float)
    Ts = bc.apply_Tstar(phi).coeffs.astype(float)
    first = frame_wedge(frame_hodge(Tw, 2, n), n - 2, w, 1).sum(axis=-n)
    second = (Ts.reshape(Ts.shape + (1,) * (n - 1)) * frame_hodge(w, 1, n)).sum(axis=-n)
    idx = tuple(range(1, n))
    volM = levi_civita(n)[(0,) + idx]
    return -(first[(Ellipsis,) + idx] + second[(Ellipsis,) + idx]) / volM


def flux_density(phi: bc.EForm):
    """Frame components of ``X^a = <w, (T w)(e_a, .)> - <w(e_a), T* w>``."""
    w = phi.coeffs
    Tw = bc.apply_T(phi).coeffs
    Ts = bc.apply_Tstar(phi).coeffs
    return np.einsum("...gb,...gab->...a", w, Tw) - np.einsum("...ga,...g->...a", w, Ts)


# ---------------------------------------------------------------------------
# zero-block checks on canonical lifts

def check_zero_blocks(s, chart, x_points, h=None) -> dict:
    """Blocks B, D, E, G of ``d_E s`` at boundary points, split into D and T parts.

    Preconditions are reported as residuals: the normal component ``u^n`` and
    the normal derivative of the tangential part ``nabla_n v``.
    """
    h = chart.h if h is None else h
    x = np.atleast_2d(x_points)
    y = np.column_stack([np.zeros(len(x)), x])
    n = chart.n
    c = np.asarray(s(y))
    Dpart = bc.apply_D(s, chart, y, h)
    Tpart = bc.apply_T(bc.EForm(c, 0, n)).coeffs
    names = ("B", "D", "E", "G")
    out = {"D_part": {}, "T_part": {}, "total": {}}
    for label, arr in (("D_part", Dpart), ("T_part", Tpart), ("total", Dpart + Tpart)):
        bl = bc.block_decompose(bc.EForm(arr, 1, n))
        for nm in names:
            out[label][nm] = float(np.abs(getattr(bl, nm)).max())
    nab = bc.covariant_derivative(lambda p: _translation_only(s, p, chart), chart, y, h)
    out["precondition"] = {
        "normal_component": float(np.abs(c[:, 0]).max()),
        "normal_derivative_tangential": float(np.abs(nab[:, 0, 1:n]).max()),
    }
    return out


def _translation_only(s, p, chart):
    c = np.asarray(s(p)).copy()
    c[:, chart.n:] = 0.0
    return c


# ---------------------------------------------------------------------------
# patch integrals

@dataclass
class PatchGrid:
    """Tensor grid on ``[-depth, 0] x [-half_width, half_width]^m`` with trapezoid weights."""

    m: int
    nodes: int
    half_width: float
    depth: float

    def axes(self):
        r = np.linspace(-self.depth, 0.0, self.nodes)
        xs = [np.linspace(-self.half_width, self.half_width, self.nodes) for _ in range(self.m)]
        return [r] + xs

    @staticmethod
    def weights(ax):
        w = np.full(len(ax), ax[1] - ax[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def spacing(self) -> float:
        return min(self.depth, 2 * self.half_width) / (self.nodes - 1)

    def points(self):
        axes = self.axes()
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        wmesh = np.meshgrid(*[self.weights(a) for a in axes], indexing="ij")
        w = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
        return pts, w

    def face(self, axis: int, side: int):
        """Points and (n-1)-dim trapezoid weights of one face; side 0 = low, 1 = high."""
        axes = self.axes()
        fixed = axes[axis][0 if side == 0 else -1]
        others = [a for i, a in enumerate(axes) if i != axis]
        mesh = np.meshgrid(*others, indexing="ij")
        cols = [g.ravel() for g in mesh]
        cols.insert(axis, np.full(cols[0].shape, fixed))
        wmesh = np.meshgrid(*[self.weights(a) for a in others], indexing="ij")
        w = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
        return np.stack(cols, axis=1), w


def _chunks(pts, size=4096):
    for i in range(0, len(pts), size):
        yield slice(i, i + size)


def weitzenbock_balance(field, chart, grid: PatchGrid, h=None) -> dict:
    """Both sides of the Weitzenboeck identity on a patch, face by face.

    ``h`` defaults to the grid spacing so stencil and quadrature errors are
    both second order.
    """
    h = grid.spacing if h is None else h
    if grid.half_width * math.sqrt(grid.m) + h > chart.radius:
        raise cf.StencilError("patch too large for the chart ball plus stencil")
    n = chart.n
    pts, wts = grid.points()
    terms = dict(dE=0.0, deltaE=0.0, D=0.0, Dstar=0.0, H=0.0)
    for sl in _chunks(pts):
        y = pts[sl]
        fd = chart.frame_data(y)
        dv = wts[sl] * fd.sqrtg
        w = bc.EForm(np.asarray(field(y)), 1, n)
        dE = bc.EForm(bc.flat_d(field, chart, h)(y), 2, n)
        de = bc.EForm(bc.flat_delta(field, chart, h)(y), 0, n)
        Dw = bc.EForm(bc.apply_D(field, chart, y, h), 2, n)
        Dsw = bc.EForm(bc.apply_Dstar(field, chart, y, h), 0, n)
        Hw = bc.curvature_H(w)
        terms["dE"] += float(dv @ bc.form_inner(dE, dE))
        terms["deltaE"] += float(dv @ bc.form_inner(de, de))
        terms["D"] += float(dv @ bc.form_inner(Dw, Dw))
        terms["Dstar"] += float(dv @ bc.form_inner(Dsw, Dsw))
        terms["H"] += float(dv @ bc.form_inner(Hw, w))
    faces = {}
    names = ["r"] + [f"x{i}" for i in range(1, n)]
    for axis in range(n):
        for side in (0, 1):
            fp, fw = grid.face(axis, side)
            fd = chart.frame_data(fp)
            X = flux_density(bc.EForm(np.asarray(field(fp)), 1, n))
            Xcoord = np.einsum("kma,ka->km", fd.theta_inv, X)
            sign = 1.0 if side == 1 else -1.0
            faces[f"{names[axis]}{'+' if side else '-'}"] = float(sign * (fw * fd.sqrtg) @ Xcoord[:, axis])
    boundary = sum(faces.values())
    lhs = terms["dE"] + terms["deltaE"]
    rhs = terms["D"] + terms["Dstar"] + terms["H"] + boundary
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return {"terms": terms, "faces": faces, "boundary": boundary, "lhs": lhs, "rhs": rhs,
            "residual": lhs - rhs, "relative_residual": (lhs - rhs) / scale, "h": h,
            "nodes": grid.nodes}


def divergence_identity_residual(field, chart, y, h=None) -> float:
    """Max of ``|div X - 2(<Dw,Tw> + <D*w,T*w>)|`` at the given chart points."""
    h = chart.h if h is None else h
    n = chart.n
    y = np.atleast_2d(y)

    def flux(p):
        fd = chart.frame_data(p)
        X = flux_density(bc.EForm(np.asarray(field(p)), 1, n))
        return (fd.sqrtg[:, None] * np.einsum("kma,ka->km", fd.theta_inv, X))

    P = cf.partials(flux, y, h)
    div = np.einsum("kmm->k", P) / chart.frame_data(y).sqrtg
    w = bc.EForm(np.asarray(field(y)), 1, n)
    Dw = bc.EForm(bc.apply_D(field, chart, y, h), 2, n)
    Dsw = bc.EForm(bc.apply_Dstar(field, chart, y, h), 0, n)
    rhs = 2 * (bc.form_inner(Dw, bc.apply_T(w)) + bc.form_inner(Dsw, bc.apply_Tstar(w)))
    return float(np.abs(div - rhs).max())


def render_contraction_table(m: int) -> str:
    """Symbolic text layout of ``i(n) T w`` for a generic 1-form, built from unit probes."""
    n = m + 1
    gb = geometric_basis(n)
    labels = {}
    for g in range(gb.dim):
        for a in range(n):
            phi = bc.EForm.zeros(n, 1, backend="rational")
            phi.coeffs[g, a] = 1
            rep = normal_contraction(phi).stacked()
            bl_name = _block_name(g, a, gb)
            for row in range(gb.dim):
                for j in range(m):
                    v = rep[row, j]
                    if v != 0:
                        sign = "+" if v > 0 else "-"
                        labels.setdefault((row, j), []).append(f"{sign}{bl_name}")
    width = 2 + max((len(" ".join(v)) for v in labels.values()), default=1)
    lines = ["".ljust(6) + "dr".rjust(4) + " |" + "".join(f"w_{j}".rjust(width) for j in range(1, m + 1))]
    for row in range(gb.dim):
        cells = [" ".join(labels.get((row, j), ["0"])).rjust(width) for j in range(m)]
        lines.append(gb.labels[row].ljust(6) + "0".rjust(4) + " |" + "".join(cells))
    return "\n".join(lines) + "\n"


def _block_name(g, a, gb):
    m = gb.m
    if g == 0:
        return "F" if a == 0 else f"G[{a}]"
    if g <= m:
        return f"E[{g}]" if a == 0 else f"A[{g},{a}]"
    if g <= m + gb.kprime:
        p, q = gb.tangential_pairs[g - m - 1]
        return f"D[{p}{q}]" if a == 0 else f"H[{p}{q},{a}]"
    i = g - m - gb.kprime
    return f"C[{i}]" if a == 0 else f"B[{i},{a}]"


# ---------------------------------------------------------------------------
# shipped test data

def tangential_killing_field(chart, coefficients):
    """Frame components ``[u^n, u^1..u^m]`` of the Killing field of an h-element.

    ``coefficients`` lists the h-part of a Lie algebra element (E_i and R_ab in
    basis order). The field is evaluated on the core slice and extended
    independently of ``r``, so ``u^n = 0`` and ``nabla_n v = 0``.
    """
    gb = chart.basis
    c = np.zeros(gb.dim)
    c[gb.h_indices] = np.asarray(coefficients, dtype=float)
    X = gb.from_coefficients(c)
    J = np.diag([-1.0] + [1.0] * chart.n)
    axis = list(gb.axis)

    def u(y):
        y0 = np.atleast_2d(np.asarray(y, dtype=float)).copy()
        y0[:, 0] = 0.0
        F = chart.frame_matrix(y0)
        V = F[:, :, 0] @ X.T
        return np.einsum("ki,ij,kja->ka", V, J, F[:, :, axis])

    return u


def integrand_reduction(model, lift, chart, x_points, h) -> dict:
    """``boundary_integrand(w0 + d_E s)`` against ``2 A(d_E s) . B(w0)`` on the boundary."""
    x = np.atleast_2d(x_points)
    y = np.column_stack([np.zeros(len(x)), x])
    n = chart.n
    dEs = bc.flat_d(lift, chart, h)(y)
    w0 = np.asarray(model(y))
    total = boundary_integrand(bc.EForm(w0 + dEs, 1, n))
    bl = bc.block_decompose(bc.EForm(dEs, 1, n))
    bh = bc.block_decompose(bc.EForm(w0, 1, n))
    reduced = 2 * (bl.A * bh.B).sum(axis=(-1, -2))
    model_only = boundary_integrand(bc.EForm(w0, 1, n))
    return {"residual": float(np.abs(total - reduced).max()), "scale": float(np.abs(reduced).max()),
            "model_only": float(np.abs(model_only).max())}


def compact_bump_form(chart, half_width, depth, power=3, amplitude=0.3, seed=0):
    """Smooth 1-form supported inside the patch: a polynomial bump times a cosine field."""
    gb = chart.basis
    n = chart.n
    M = np.random.default_rng(seed).normal(size=(gb.dim, n, n)) * amplitude

    def bump(y):
        r = (y[:, 0] + depth / 2) / (depth / 2)
        xs = y[:, 1:] / half_width
        return (np.clip(1 - r ** 2, 0, None) ** power) * np.prod(np.clip(1 - xs ** 2, 0, None) ** power, axis=1)

    def field(y):
        y = np.atleast_2d(y)
        return bump(y)[:, None, None] * np.cos(np.einsum("gab,kb->kga", M, y))

    return field
