"""so(1,n), O(1,n) and the hyperboloid model, with an exact and a float backend.

Conventions
-----------
Ambient coordinates are ``0..n`` with ``J = diag(-1, 1, ..., 1)``. The base
point is ``x0 = (1, 0, ..., 0)``. The standard hyperplane is ``x_n = 0``, so
ambient axis ``n`` is the normal direction and axes ``1..m`` (``m = n - 1``)
are tangential.

The geometric basis at ``x0`` is ordered ``N, E_1..E_m, R_ab (a<b), R_n1..R_nm``.
``N`` and ``E_i`` are unit infinitesimal translations, ``R_ab`` rotates ``e_b``
to ``e_a`` and ``R_ni`` rotates ``e_i`` to the normal. The basis is
orthonormal for ``<X, Y> = tr(X^T Y) / 2``.

Arrays with ``dtype=object`` holding :class:`fractions.Fraction` are the
rational backend; ``float64`` arrays are the float backend. Most functions
accept either and preserve the dtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.linalg

from ._kernels import structure_contract

PRECONDITION_TOL = 1e-9

__all__ = [
    "Signature", "LieElement", "Isometry", "HPoint", "Frame", "GeometricBasis",
    "bracket", "adjoint_action", "infinitesimal_translation", "infinitesimal_rotation",
    "bundle_metric", "hyperplane_split", "expm", "minkowski", "hyperbolic_distance",
    "to_rational", "to_float", "is_rational", "isometry_inverse", "transvection",
    "random_rational_lie", "random_rational_isometry", "random_isometry", "reflection",
    "geometric_basis",
]


# ---------------------------------------------------------------------------
# backend helpers

def is_rational(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def _fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def to_rational(a) -> np.ndarray:
    """Exact copy of ``a`` as an object array of Fractions (strings like "3/4" allowed)."""
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = _fraction(x)
    return out


def to_float(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr) if arr.size else arr.astype(float)
    return arr.astype(float)


def _like(template, values) -> np.ndarray:
    return to_rational(values) if is_rational(template) else np.asarray(values, dtype=float)


def _backend_array(values, backend: str) -> np.ndarray:
    if backend == "rational":
        return to_rational(values)
    if backend == "float":
        return np.asarray(values, dtype=float)
    raise ValueError(f"unknown backend {backend!r}")


def _zero(a):
    return Fraction(0) if is_rational(a) else 0.0


def _max_abs(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(max(abs(x) for x in a.ravel())) if a.dtype == object else float(np.max(np.abs(a)))


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class Signature:
    """Dimension ``n`` of H^n; the ambient form is ``J = diag(-1, 1, ..., 1)``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"Signature needs an integer n >= 2, got {self.n!r}")

    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    def J(self, backend: str = "float") -> np.ndarray:
        return _backend_array(np.diag([-1] + [1] * self.n), backend)


def minkowski(x, y):
    """``<x, y>_J`` for vectors, batched over leading axes."""
    x = np.asarray(x)
    y = np.asarray(y)
    return -x[..., 0] * y[..., 0] + (x[..., 1:] * y[..., 1:]).sum(axis=-1)


def hyperbolic_distance(x, y) -> float:
    return float(np.arccosh(max(1.0, -float(minkowski(to_float(x), to_float(y))))))


def _check_algebra(mat, tol):
    n = mat.shape[0] - 1
    J = _like(mat, np.diag([-1] + [1] * n))
    res = mat.T @ J + J @ mat
    return _max_abs(res) <= (0 if is_rational(mat) else tol)


@dataclass(frozen=True, eq=False)
class LieElement:
    """An element of so(1,n) stored as an ``(n+1)x(n+1)`` matrix."""

    mat: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = self.mat if is_rational(self.mat) else np.asarray(self.mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 3:
            raise ValueError(f"LieElement needs a square matrix of size >= 3, got {mat.shape}")
        if self.check and not _check_algebra(mat, 1e-12 * max(1.0, _max_abs(mat))):
            raise ValueError("matrix is not in so(1,n): X^T J + J X != 0")
        object.__setattr__(self, "mat", mat)

    @property
    def signature(self) -> Signature:
        return Signature(self.mat.shape[0] - 1)

    def __add__(self, other):
        return LieElement(self.mat + other.mat, check=False)

    def __sub__(self, other):
        return LieElement(self.mat - other.mat, check=False)

    def __mul__(self, c):
        return LieElement(self.mat * c, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return LieElement(-self.mat, check=False)

    def __eq__(self, other):
        return isinstance(other, LieElement) and self.mat.shape == other.mat.shape and bool(
            np.all(self.mat == other.mat))

    def __hash__(self):
        return hash(tuple(self.mat.ravel().tolist()))

    def norm(self) -> float:
        return float(np.sqrt(float(np.sum(to_float(self.mat) ** 2))))


@dataclass(frozen=True, eq=False)
class Isometry:
    """A matrix in O(1,n) preserving the upper sheet of the hyperboloid."""

    mat: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = self.mat if is_rational(self.mat) else np.asarray(self.mat, dtype=float)
        if self.check:
            n = mat.shape[0] - 1
            J = _like(mat, np.diag([-1] + [1] * n))
            tol = 0 if is_rational(mat) else 1e-9 * max(1.0, _max_abs(mat)) ** 2
            if _max_abs(mat.T @ J @ mat - J) > tol:
                raise ValueError("matrix does not preserve the Minkowski form")
            if mat[0, 0] < 1 - (0 if is_rational(mat) else 1e-9):
                raise ValueError("matrix does not preserve the upper hyperboloid")
        object.__setattr__(self, "mat", mat)

    def inverse(self) -> "Isometry":
        return Isometry(isometry_inverse(self.mat), check=False)

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return Isometry(self.mat @ other.mat, check=False)
        if isinstance(other, HPoint):
            return HPoint(self.mat @ other.coords, check=False)
        return self.mat @ other


@dataclass(frozen=True, eq=False)
class HPoint:
    """A point of the upper hyperboloid ``<x,x>_J = -1, x_0 > 0``."""

    coords: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        x = self.coords if is_rational(self.coords) else np.asarray(self.coords, dtype=float)
        if self.check:
            tol = 0 if is_rational(x) else PRECONDITION_TOL * max(1.0, _max_abs(x)) ** 2
            if abs(minkowski(x, x) + 1) > tol or x[0] <= 0:
                raise ValueError("point is not on the upper hyperboloid")
        object.__setattr__(self, "coords", x)

    @classmethod
    def base(cls, n: int, backend: str = "float") -> "HPoint":
        return cls(_backend_array([1] + [0] * n, backend), check=False)


@dataclass(frozen=True, eq=False)
class Frame:
    """A point and ``n`` Minkowski-orthonormal tangent vectors (rows of ``vectors``)."""

    base: HPoint
    vectors: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        v = self.vectors if is_rational(self.vectors) else np.asarray(self.vectors, dtype=float)
        if self.check:
            p = self.base.coords
            gram = np.array([[minkowski(a, b) for b in v] for a in v], dtype=v.dtype)
            tol = 0 if is_rational(v) else 1e-10
            if _max_abs(gram - _like(v, np.eye(len(v)))) > tol:
                raise ValueError("frame vectors are not orthonormal")
            if _max_abs(np.array([minkowski(a, p) for a in v], dtype=v.dtype)) > tol:
                raise ValueError("frame vectors are not tangent at the base point")
        object.__setattr__(self, "vectors", v)

    def matrix(self) -> np.ndarray:
        """Columns ``[p, v_1, ..., v_n]``; an element of O(1,n)."""
        return np.column_stack([self.base.coords, *self.vectors])


# ---------------------------------------------------------------------------
# Lie operations

def bracket(X: LieElement, Y: LieElement) -> LieElement:
    if X.mat.shape != Y.mat.shape:
        raise ValueError(f"dimension mismatch {X.mat.shape} vs {Y.mat.shape}")
    return LieElement(X.mat @ Y.mat - Y.mat @ X.mat, check=False)


def isometry_inverse(g: np.ndarray) -> np.ndarray:
    """``g^{-1} = J g^T J`` for g in O(1,n); batched over leading axes."""
    g = np.asarray(g) if not is_rational(g) else g
    sign = np.ones(g.shape[-1])
    sign[0] = -1
    if is_rational(g):
        s = to_rational(sign)
        return np.swapaxes(g, -1, -2) * s[..., :, None] * s[..., None, :]
    return np.swapaxes(g, -1, -2) * sign[:, None] * sign[None, :]


def adjoint_action(g, X):
    """``Ad(g) X = g X g^{-1}``. Accepts Isometry/LieElement or raw (batched) arrays."""
    gm = g.mat if isinstance(g, Isometry) else g
    xm = X.mat if isinstance(X, LieElement) else X
    out = gm @ xm @ isometry_inverse(gm)
    return LieElement(out, check=False) if isinstance(X, LieElement) else out


def _translation_matrix(p, v):
    # (p v^T - v p^T) J, batched
    P = np.asarray(p) if not is_rational(p) else p
    V = np.asarray(v) if not is_rational(v) else v
    M = P[..., :, None] * V[..., None, :] - V[..., :, None] * P[..., None, :]
    M = M.copy()
    M[..., :, 0] = -M[..., :, 0]
    return M


def _rotation_matrix(v, w):
    # (v w^T - w v^T) J
    M = v[..., :, None] * w[..., None, :] - w[..., :, None] * v[..., None, :]
    M = M.copy()
    M[..., :, 0] = -M[..., :, 0]
    return M


def _tangent_unit_ok(p, v, tol=PRECONDITION_TOL):
    exact = is_rational(v)
    t = 0 if exact else tol
    return abs(minkowski(p, v)) <= t and abs(minkowski(v, v) - 1) <= t


def infinitesimal_translation(p: HPoint, v) -> LieElement:
    """The Lie element whose flow translates along the geodesic through ``p`` with velocity ``v``."""
    x = p.coords
    v = _like(x, v)
    if not _tangent_unit_ok(x, v):
        raise ValueError("v must be a unit tangent vector at p")
    return LieElement(_translation_matrix(x, v), check=False)


def infinitesimal_rotation(p: HPoint, v, w) -> LieElement:
    """Rotation fixing ``p`` with ``w -> v`` and ``v -> -w``."""
    x = p.coords
    v = _like(x, v)
    w = _like(x, w)
    exact = is_rational(x)
    tol = 0 if exact else PRECONDITION_TOL
    if not (_tangent_unit_ok(x, v) and _tangent_unit_ok(x, w) and abs(minkowski(v, w)) <= tol):
        raise ValueError("v, w must be an orthonormal pair tangent at p")
    return LieElement(_rotation_matrix(v, w), check=False)


def bundle_metric(p: HPoint, X: LieElement, Y: LieElement):
    """Metric on the fiber at ``p`` making translations and rotations at ``p`` orthonormal.

    Split ``X`` into the translation with velocity ``Xp`` and a rotation ``K``
    fixing ``p``; then ``<X,Y> = <Xp, Yp>_J - tr(K_X K_Y) / 2``.
    """
    x = p.coords
    a, b = X.mat @ x, Y.mat @ x
    KX = X.mat - _translation_matrix(x, a)
    KY = Y.mat - _translation_matrix(x, b)
    half = Fraction(1, 2) if is_rational(X.mat) else 0.5
    return minkowski(a, b) - half * np.trace(KX @ KY)


def expm(X) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    mat = X.mat if isinstance(X, LieElement) else X
    return scipy.linalg.expm(to_float(mat))


def transvection(x) -> np.ndarray:
    """``exp(sum_i x_i E_i)`` at ``x0`` in closed form, batched over rows of ``x``.

    ``x`` has shape ``(..., k)`` with ``k <= n`` tangential components; the
    result lives in SO(1, k) embedded in the top-left block.
    """
    x = np.asarray(x, dtype=float)
    k = x.shape[-1]
    rho2 = (x ** 2).sum(axis=-1)
    rho = np.sqrt(rho2)
    # sinh(rho)/rho and (cosh(rho)-1)/rho^2 are even entire functions
    small = rho < 1e-4
    safe = np.where(small, 1.0, rho)
    sinhc = np.where(small, 1 + rho2 / 6 + rho2 ** 2 / 120, np.sinh(safe) / safe)
    coshm = np.where(small, 0.5 + rho2 / 24 + rho2 ** 2 / 720, (np.cosh(safe) - 1) / safe ** 2)
    X = np.zeros(x.shape[:-1] + (k + 1, k + 1))
    X[..., 0, 1:] = x
    X[..., 1:, 0] = x
    X2 = X @ X
    eye = np.broadcast_to(np.eye(k + 1), X.shape)
    return eye + sinhc[..., None, None] * X + coshm[..., None, None] * X2


def reflection(v) -> np.ndarray:
    """Reflection in the hyperplane J-orthogonal to a spacelike vector ``v``."""
    v = np.asarray(v) if not is_rational(v) else v
    n1 = len(v)
    Jv = v.copy()
    Jv[0] = -Jv[0]
    two = Fraction(2) if is_rational(v) else 2.0
    eye = _like(v, np.eye(n1, dtype=int))
    return eye - two * np.outer(v, Jv) / minkowski(v, v)


# ---------------------------------------------------------------------------
# geometric basis

class GeometricBasis:
    """The ordered basis ``N, E_1..E_m, R_ab, R_n1..R_nm`` of so(1,n) at ``x0``.

    Frame index ``f`` in ``0..m`` refers to the frame vector ``[n, e_1..e_m][f]``;
    its translation is basis element ``f``. ``axis[f]`` is the ambient axis of
    frame vector ``f``.
    """

    def __init__(self, n: int):
        self.sig = Signature(n)
        self.n = n
        self.m = m = n - 1
        self.dim = self.sig.dim
        self.axis = [n] + list(range(1, m + 1))
        self.tangential_pairs = list(combinations(range(1, m + 1), 2))
        self.kprime = len(self.tangential_pairs)
        labels = ["N"] + [f"E_{i}" for i in range(1, m + 1)]
        labels += [f"R_{a}{b}" for a, b in self.tangential_pairs]
        labels += [f"R_n{i}" for i in range(1, m + 1)]
        self.labels = labels
        self.slice_N = slice(0, 1)
        self.slice_E = slice(1, m + 1)
        self.slice_Rab = slice(m + 1, m + 1 + self.kprime)
        self.slice_Rn = slice(m + 1 + self.kprime, self.dim)
        mats = []
        e = np.eye(n + 1, dtype=int)
        for f in range(m + 1):
            mats.append(_translation_matrix(e[0], e[self.axis[f]]))
        for a, b in self.tangential_pairs:
            mats.append(_rotation_matrix(e[a], e[b]))
        for i in range(1, m + 1):
            mats.append(_rotation_matrix(e[n], e[i]))
        self.int_matrices = np.array(mats, dtype=np.int64)
        self.translation_indices = list(range(m + 1))
        self.rotation_indices = list(range(m + 1, self.dim))
        self.h_indices = list(range(1, m + 1)) + list(range(m + 1, m + 1 + self.kprime))
        self.s_indices = [0] + list(range(m + 1 + self.kprime, self.dim))
        # rotation basis index (and sign) for an ordered pair of frame indices
        self._rot = {}
        for k, (a, b) in enumerate(self.tangential_pairs):
            self._rot[(a, b)] = (m + 1 + k, 1)
            self._rot[(b, a)] = (m + 1 + k, -1)
        for i in range(1, m + 1):
            idx = m + 1 + self.kprime + i - 1
            self._rot[(0, i)] = (idx, 1)
            self._rot[(i, 0)] = (idx, -1)
        self.structure = self._structure_constants()

    def rotation_index(self, a: int, b: int):
        """Basis index and sign of the rotation taking frame vector ``b`` to ``a``."""
        return self._rot[(a, b)]

    def matrices(self, backend: str = "float") -> np.ndarray:
        return _backend_array(self.int_matrices, backend) if backend == "rational" else self.int_matrices.astype(float)

    def element(self, k: int, backend: str = "float") -> LieElement:
        return LieElement(self.matrices(backend)[k], check=False)

    def coefficients(self, X) -> np.ndarray:
        """Coordinates of ``X`` (matrix, batched) in the basis: ``tr(B_k^T X)/2``."""
        mat = X.mat if isinstance(X, LieElement) else X
        B = self.int_matrices
        if is_rational(mat):
            out = np.einsum("kij,...ij->...k", B.astype(object), mat)
            return out * Fraction(1, 2)
        return 0.5 * np.einsum("kij,...ij->...k", B.astype(float), mat)

    def from_coefficients(self, c) -> np.ndarray:
        c = np.asarray(c) if not is_rational(c) else c
        B = self.int_matrices.astype(object if is_rational(c) else float)
        return np.einsum("...k,kij->...ij", c, B)

    def _structure_constants(self) -> np.ndarray:
        # C[j, g, b] = coefficient of basis g in [B_j, B_b]; integers
        B = self.int_matrices
        br = np.einsum("jik,bkl->jbil", B, B) - np.einsum("bik,jkl->jbil", B, B)
        C = np.einsum("gil,jbil->jgb", B, br)
        assert np.all(C % 2 == 0)
        return C // 2

    def ad(self, k: int) -> np.ndarray:
        """Matrix of ``ad(B_k)`` on coefficient vectors (integers)."""
        return self.structure[k]

    def ad_of(self, c) -> np.ndarray:
        """Matrix of ``ad(X)`` for ``X`` with coefficients ``c`` (batched)."""
        if is_rational(c):
            return np.einsum("...k,kgb->...gb", c, self.structure.astype(object))
        return structure_contract(c, self.structure.astype(float))

    def ad_matrix_of_group(self, g) -> np.ndarray:
        """Matrix of ``Ad(g)`` on coefficient vectors (batched over ``g``)."""
        B = self.matrices("rational" if is_rational(g) else "float")
        gi = isometry_inverse(g)
        conj = g[..., None, :, :] @ B @ gi[..., None, :, :]
        return np.swapaxes(self.coefficients(conj), -1, -2)


@lru_cache(maxsize=None)
def geometric_basis(n: int) -> GeometricBasis:
    return GeometricBasis(n)


def hyperplane_split(n: int, backend: str = "float"):
    """Orthogonal projections onto h (tangential) and s (normal) parts of so(1,n).

    Returns two functions ``(proj_h, proj_s)`` acting on LieElements, together
    with their coefficient-space matrices as attributes ``.matrix``.
    """
    gb = geometric_basis(n)
    Ph = np.zeros((gb.dim, gb.dim), dtype=int)
    Ps = np.zeros((gb.dim, gb.dim), dtype=int)
    for k in gb.h_indices:
        Ph[k, k] = 1
    for k in gb.s_indices:
        Ps[k, k] = 1

    def make(P):
        Pb = _backend_array(P, backend)

        def proj(X: LieElement) -> LieElement:
            c = gb.coefficients(X)
            Pm = to_rational(P) if is_rational(c) else P.astype(float)
            return LieElement(gb.from_coefficients(Pm @ c), check=False)

        proj.matrix = Pb
        return proj

    return make(Ph), make(Ps)


# ---------------------------------------------------------------------------
# random generators for property tests

def random_rational_lie(n: int, rng: np.random.Generator, size: int = 5, den: int = 7) -> LieElement:
    gb = geometric_basis(n)
    num = rng.integers(-size, size + 1, gb.dim)
    d = rng.integers(1, den + 1, gb.dim)
    c = np.array([Fraction(int(a), int(b)) for a, b in zip(num, d)], dtype=object)
    return LieElement(gb.from_coefficients(c), check=False)


def _random_rational_spacelike(n: int, rng) -> np.ndarray:
    while True:
        v = np.array([Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))) for _ in range(n + 1)],
                     dtype=object)
        if minkowski(v, v) > 0:
            return v


def random_rational_isometry(n: int, rng: np.random.Generator, reflections: int = 4) -> Isometry:
    """Even product of reflections in rational spacelike vectors (orientation preserving)."""
    g = to_rational(np.eye(n + 1, dtype=int))
    for _ in range(2 * (reflections // 2)):
        g = g @ reflection(_random_rational_spacelike(n, rng))
    return Isometry(g)


def random_isometry(n: int, rng: np.random.Generator, scale: float = 1.0) -> Isometry:
    """``exp`` of a random Lie element, followed by a translation."""
    gb = geometric_basis(n)
    c = rng.normal(size=gb.dim) * scale
    return Isometry(expm(gb.from_coefficients(c)))
