"""Bundle-valued forms for E = TW + so(TW) over the warped chart.

A form of degree k is stored by its coefficients ``c[..., g, a_1, ..., a_k]``:
``g`` runs over the geometric basis (translations then rotations) at the frame
point and each ``a`` over frame slots. Forms over W use all frame slots
``[n, e_1..e_m]``; forms over the cross-section M use ``e_1..e_m`` only.

Two independent routes are provided:

* the split route ``d_E = D + T`` with the Levi-Civita covariant derivative
  ``D`` and the algebraic operator ``T`` (pointwise, exact in rationals);
* the flat route, where a section is identified with a constant-basis
  so(1,n)-valued function and ``d_E``/``delta_E`` are ordinary exterior
  calculus with the bundle metric as fibre metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from . import coordinate_forms as cf
from .minkowski_lie import geometric_basis, is_rational

__all__ = [
    "EForm", "Section", "CanonicalLift", "BlockDecomposition",
    "form_slots", "apply_T", "apply_Tstar", "curvature_H", "form_inner", "operator_matrix",
    "covariant_derivative", "apply_D", "apply_Dstar", "flat_d", "flat_delta",
    "to_coordinates", "from_coordinates", "laplacian_on_sections", "canonical_lift",
    "section_duals", "trace", "block_decompose", "block_reassemble", "render_blocks",
]


@dataclass
class EForm:
    """Coefficients of a bundle-valued form at one or many framed points."""

    coeffs: np.ndarray
    degree: int
    n: int
    over: str = "W"

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ValueError("unsupported degree")
        if self.over not in ("W", "M"):
            raise ValueError("forms live over W or over M")
        gb = geometric_basis(self.n)
        s = len(form_slots(self.n, self.over))
        tail = (gb.dim,) + (s,) * self.degree
        if tuple(self.coeffs.shape[-len(tail):]) != tail:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not end in {tail}")

    @classmethod
    def zeros(cls, n, degree, over="W", backend="float", batch=()):
        gb = geometric_basis(n)
        s = len(form_slots(n, over))
        shape = tuple(batch) + (gb.dim,) + (s,) * degree
        if backend == "rational":
            arr = np.empty(shape, dtype=object)
            arr.fill(Fraction(0))
        else:
            arr = np.zeros(shape)
        return cls(arr, degree, n, over)

    @property
    def exact(self) -> bool:
        return is_rational(self.coeffs)

    def _same(self, coeffs, degree=None):
        return EForm(coeffs, self.degree if degree is None else degree, self.n, self.over)

    def __add__(self, other):
        return self._same(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self._same(self.coeffs - other.coeffs)

    def __mul__(self, s):
        return self._same(self.coeffs * s)

    __rmul__ = __mul__


@dataclass
class Section:
    """A section (u, u~): translational part ``u`` and rotational part ``u~``.

    Both are stored in one coefficient vector over the geometric basis; ``u``
    is the frame-component vector of translations and ``u_tilde[a, b]`` the
    skew matrix with ``u~ = sum_{a<b} u_tilde[a, b] R_ab`` (frame indices).
    """

    coeffs: np.ndarray
    n: int

    @property
    def u(self) -> np.ndarray:
        return self.coeffs[..., : self.n]

    @property
    def u_tilde(self) -> np.ndarray:
        gb = geometric_basis(self.n)
        out = np.zeros(self.coeffs.shape[:-1] + (self.n, self.n), dtype=self.coeffs.dtype)
        for a in range(self.n):
            for b in range(self.n):
                if a != b:
                    k, sgn = gb.rotation_index(a, b)
                    out[..., a, b] = sgn * self.coeffs[..., k]
        return out


@dataclass
class CanonicalLift:
    """Field ``y -> Section coefficients`` with rotational part skew(Du)."""

    field: object
    vector_field: object
    n: int

    def __call__(self, y):
        return self.field(y)


@dataclass
class BlockDecomposition:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    extra: dict = dc_field(default_factory=dict)


# ---------------------------------------------------------------------------
# pointwise algebra

def form_slots(n: int, over: str = "W") -> list:
    """Translation basis indices paired with the form slots."""
    return list(range(n)) if over == "W" else list(range(1, n))


def _ad_slots(n, over, exact):
    gb = geometric_basis(n)
    A = gb.structure[form_slots(n, over)]
    return A.astype(object) if exact else A.astype(float)


def apply_T(phi: EForm) -> EForm:
    """``(T phi)(e_a0, .., e_ak) = sum_s (-1)^s [E_as, phi(.. ^a_s ..)]``."""
    if phi.degree > 1:
        raise ValueError("unsupported degree")
    k = phi.degree
    A = _ad_slots(phi.n, phi.over, phi.exact)
    c = phi.coeffs
    P = np.tensordot(c, A, axes=([c.ndim - 1 - k], [2]))     # (..., slots, a, g)
    P = np.moveaxis(P, [-2, -1], [-(k + 2), -(k + 1)])       # (..., a, g, slots)
    return phi._same(cf.alternate(P, k), k + 1)


def apply_Tstar(psi: EForm) -> EForm:
    """``(T* psi)(..) = sum_a ad(E_a)^T psi(e_a, ..)``; adjoint of :func:`apply_T`."""
    if psi.degree == 0:
        raise ValueError("unsupported degree")
    k = psi.degree
    A = _ad_slots(psi.n, psi.over, psi.exact)
    c = psi.coeffs
    vax = c.ndim - 1 - k
    out = np.tensordot(c, A, axes=([vax, vax + 1], [1, 0]))   # (..., rest slots, g)
    out = np.moveaxis(out, -1, vax)
    return psi._same(out, k - 1)


def curvature_H(phi: EForm) -> EForm:
    """``H = T T* + T* T``."""
    out = apply_Tstar(apply_T(phi))
    if phi.degree > 0:
        out = out + apply_T(apply_Tstar(phi))
    return out


def form_inner(a: EForm, b: EForm):
    """Pointwise inner product: bundle metric times the induced coframe product."""
    k = a.degree
    tail = tuple(range(a.coeffs.ndim - 1 - k, a.coeffs.ndim))
    s = (a.coeffs * b.coeffs).sum(axis=tail)
    if a.exact or b.exact:
        return s * Fraction(1, math.factorial(k))
    return s / math.factorial(k)


def operator_matrix(op, n: int, degree: int, over: str = "W", backend: str = "rational"):
    """Matrix of a linear pointwise operator on the full coefficient space.

    Columns run over antisymmetric basis forms ``e_g (x) w^{a_1} ^ .. ^ w^{a_k}``
    with ``a_1 < .. < a_k``; rows use the same basis for the output degree.
    Returned as (matrix, input labels, output labels).
    """
    from itertools import combinations

    gb = geometric_basis(n)
    s = len(form_slots(n, over))

    def basis_forms(k):
        out = []
        for g in range(gb.dim):
            for idx in combinations(range(s), k):
                out.append((g, idx))
        return out

    def unit(g, idx, k):
        phi = EForm.zeros(n, k, over, backend)
        one = Fraction(1) if backend == "rational" else 1.0
        from itertools import permutations
        for perm in permutations(range(k)):
            sign = _perm_sign(perm)
            phi.coeffs[(g,) + tuple(idx[p] for p in perm)] = one * sign
        return phi

    cols = basis_forms(degree)
    out_deg = op(EForm.zeros(n, degree, over, backend)).degree
    rows = basis_forms(out_deg)
    mat = np.empty((len(rows), len(cols)), dtype=object if backend == "rational" else float)
    for j, (g, idx) in enumerate(cols):
        res = op(unit(g, idx, degree)).coeffs
        for i, (g2, idx2) in enumerate(rows):
            mat[i, j] = res[(g2,) + tuple(idx2)]
    return mat, cols, rows


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# covariant exterior calculus on fields over the warped chart

def _domain(chart):
    def inside(pts):
        return np.sqrt((pts[:, 1:] ** 2).sum(axis=1)) <= chart.radius
    return inside


def covariant_derivative(field, chart, y, h=None) -> np.ndarray:
    """``nabla_{f_j}`` of a frame-coefficient field, shape (K, j, dim, slots)."""
    h = chart.h if h is None else h
    y = np.atleast_2d(np.asarray(y, dtype=float))
    c = np.asarray(field(y))
    k = c.ndim - 2
    P = cf.partials(field, y, h, _domain(chart))
    fd = chart.frame_data(y)
    nab = np.einsum("kma,km...->ka...", fd.theta_inv, P)
    nab = nab + np.einsum("kjgb,kb...->kjg...", fd.ad_gamma, c)
    gf = fd.gamma_frame  # [j, b, a] = <nabla_j f_a, f_b>
    for s in range(k):
        ax = 2 + s
        moved = np.moveaxis(c, ax, -1)                       # (..., b)
        corr = np.einsum("kjba,k...b->kj...a", gf, moved)
        nab = nab - np.moveaxis(corr, -1, ax + 1)
    return nab


def apply_D(field, chart, y, h=None) -> np.ndarray:
    """Covariant exterior derivative ``D = sum_j w^j ^ nabla_j``."""
    nab = covariant_derivative(field, chart, y, h)
    return cf.alternate(nab, nab.ndim - 3)


def apply_Dstar(field, chart, y, h=None) -> np.ndarray:
    """``D* = -sum_j i(f_j) nabla_j``."""
    nab = covariant_derivative(field, chart, y, h)
    return -np.einsum("kjgj...->kg...", nab)


def to_coordinates(c: np.ndarray, fd) -> np.ndarray:
    """Frame coefficients -> constant-basis values with coordinate form slots."""
    k = c.ndim - 2
    W = np.einsum("kgb,kb...->kg...", fd.adF, c)
    return cf.apply_on_slots(W, np.swapaxes(fd.theta, 1, 2), k)


def from_coordinates(W: np.ndarray, fd) -> np.ndarray:
    k = W.ndim - 2
    c = np.einsum("kgb,kb...->kg...", fd.adF_inv, W)
    return cf.apply_on_slots(c, np.swapaxes(fd.theta_inv, 1, 2), k)


def _flat(field, chart):
    def W(pts):
        return to_coordinates(np.asarray(field(pts)), chart.frame_data(pts))
    return W


def flat_d(field, chart, h=None):
    """``d_E`` through the flat picture; returns a frame-coefficient field."""
    h = chart.h if h is None else h
    Wf = _flat(field, chart)

    def out(y):
        y = np.atleast_2d(y)
        return from_coordinates(cf.exterior_derivative(Wf, y, h, _domain(chart)), chart.frame_data(y))
    return out


def flat_delta(field, chart, h=None):
    """``delta_E`` through the flat picture; returns a frame-coefficient field."""
    h = chart.h if h is None else h
    Wf = _flat(field, chart)

    def gram(pts):
        return chart.frame_data(pts).gram

    def out(y):
        y = np.atleast_2d(y)
        W = cf.codifferential(Wf, y, h, chart.metric, gram, _domain(chart))
        return from_coordinates(W, chart.frame_data(y))
    return out


def laplacian_on_sections(section, chart, y, h=None) -> np.ndarray:
    """``Delta_E s = delta_E d_E s`` for a section field, frame coefficients."""
    return flat_delta(flat_d(section, chart, h), chart, h)(y)


def canonical_lift(u, chart, h=None) -> CanonicalLift:
    """Lift a vector field (frame components, (K, n)) to ``(u, skew(Du))``.

    ``u~_ab = ((nabla_b u)^a - (nabla_a u)^b) / 2``.
    """
    n = chart.n
    gb = chart.basis

    def translational(pts):
        vals = np.asarray(u(pts))
        out = np.zeros((vals.shape[0], gb.dim))
        out[:, :n] = vals
        return out

    def lifted(pts):
        pts = np.atleast_2d(pts)
        nab = covariant_derivative(translational, chart, pts, h)[:, :, :n]   # [k, b, a] = (nabla_b u)^a
        out = translational(pts)
        for a in range(n):
            for b in range(a + 1, n):
                idx, sgn = gb.rotation_index(a, b)
                out[:, idx] = sgn * 0.5 * (nab[:, b, a] - nab[:, a, b])
        return out

    return CanonicalLift(lifted, u, n)


def section_duals(c: np.ndarray, fd):
    """Dual forms (tau, tau~) of section coefficients in coordinates.

    ``tau`` is the 1-form dual to ``u`` and ``tau~`` the 2-form of ``u~`` with
    ``R_ij <-> w_j ^ w_i``.
    """
    n = fd.theta.shape[1]
    gb = geometric_basis(n)
    K = c.shape[0]
    tau_frame = c[:, :n]
    two = np.zeros((K, n, n))
    for a in range(n):
        for b in range(a + 1, n):
            idx, sgn = gb.rotation_index(a, b)
            two[:, b, a] += sgn * c[:, idx]
            two[:, a, b] -= sgn * c[:, idx]
    tau = np.einsum("ka,kam->km", tau_frame, fd.theta)
    tau2 = np.einsum("kab,kam,kbl->kml", two, fd.theta, fd.theta)
    return tau, tau2


def trace(phi: np.ndarray, n: int) -> np.ndarray:
    """Trace of the translational part of a W 1-form viewed in Hom(TW, TW)."""
    return sum(phi[..., a, a] for a in range(n))


# ---------------------------------------------------------------------------
# block decomposition

def block_decompose(phi: EForm) -> BlockDecomposition:
    if phi.degree != 1 or phi.over != "W":
        raise ValueError("block decomposition needs a 1-form over W with a distinguished normal")
    gb = geometric_basis(phi.n)
    c = phi.coeffs
    tang = slice(1, phi.n)
    return BlockDecomposition(
        A=c[..., gb.slice_E, tang], B=c[..., gb.slice_Rn, tang],
        C=c[..., gb.slice_Rn, 0:1], D=c[..., gb.slice_Rab, 0:1],
        E=c[..., gb.slice_E, 0:1], F=c[..., gb.slice_N, 0:1],
        G=c[..., gb.slice_N, tang], H=c[..., gb.slice_Rab, tang])


def block_reassemble(blocks: BlockDecomposition, n: int) -> EForm:
    gb = geometric_basis(n)
    top = np.concatenate([blocks.F, blocks.G], axis=-1)
    e = np.concatenate([blocks.E, blocks.A], axis=-1)
    r = np.concatenate([blocks.D, blocks.H], axis=-1)
    rn = np.concatenate([blocks.C, blocks.B], axis=-1)
    c = np.concatenate([top, e, r, rn], axis=-2)
    assert c.shape[-2] == gb.dim
    return EForm(c, 1, n)


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    v = float(v)
    if v == int(v) and abs(v) < 1e12:
        return str(int(v))
    return f"{v:.6g}"


def render_blocks(phi: EForm) -> str:
    """Plain-text table: rows are basis elements, columns dr | w_1..w_m."""
    gb = geometric_basis(phi.n)
    m = phi.n - 1
    c = phi.coeffs
    block_of = {}
    for g in range(gb.dim):
        if g == 0:
            block_of[g] = ("F", "G")
        elif g < m + 1:
            block_of[g] = ("E", "A")
        elif g < m + 1 + gb.kprime:
            block_of[g] = ("D", "H")
        else:
            block_of[g] = ("C", "B")
    header = ["", "dr", "|"] + [f"w_{j}" for j in range(1, m + 1)]
    rows = [header]
    prev = None
    for g in range(gb.dim):
        if prev is not None and block_of[g] != prev:
            rows.append(None)
        prev = block_of[g]
        left, right = block_of[g]
        rows.append([gb.labels[g], f"{left}:{_fmt(c[g, 0])}", "|"]
                    + [f"{right}:{_fmt(c[g, j])}" for j in range(1, m + 1)])
    width = max(len(x) for r in rows if r for x in r)
    lines = []
    for r in rows:
        if r is None:
            lines.append("-" * ((width + 1) * len(header)))
        else:
            lines.append(" ".join(x.rjust(width) for x in r))
    return "\n".join(lines) + "\n"
