"""Twisted first cohomology H^1(pi; g_Ad rho) from finite presentations.

Words are sequences of signed 1-based generator indices (``-k`` is the inverse
of generator ``k``). Cocycles are stored as a ``(#generators, dim g)`` array of
basis coefficients. The relator equations are assembled by walking each word
left to right: a letter ``x`` at prefix ``p`` contributes ``Ad(rho(p))`` to the
column block of ``x``; an inverse letter contributes ``-Ad(rho(p x^{-1}))``.

Exact ranks use fraction-free (Bareiss) elimination on integer-scaled rows;
float ranks use a relative singular-value gap and serve as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .minkowski_lie import (
    geometric_basis, hyperplane_split, is_rational, isometry_inverse, to_float, to_rational,
)

__all__ = [
    "Presentation", "Representation", "Cocycle", "CohomologyReport", "InvalidRepresentation",
    "exact_rank", "exact_nullspace", "float_rank", "evaluate_word", "word_magnitude", "fox_matrix",
    "coboundary_matrix", "cocycle_space", "coboundary_space", "centralizer", "h1_report",
    "restrict_and_split", "bending_cocycle", "conjugate_relator", "cyclically_permute_relator",
    "invert_relator", "add_derived_generator", "conjugate_representation", "in_coboundaries",
]

FLOAT_GAP = 1e-8


class InvalidRepresentation(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact and float linear algebra

def _integer_rows(M) -> list:
    rows = []
    for row in M:
        fr = [Fraction(x) for x in row]
        den = 1
        for x in fr:
            den = den * x.denominator // math.gcd(den, x.denominator)
        rows.append([int(x * den) for x in fr])
    return rows


def exact_rank(M) -> int:
    """Rank by Bareiss fraction-free elimination (entries rational)."""
    M = np.asarray(M, dtype=object)
    if M.size == 0:
        return 0
    A = _integer_rows(M)
    rows, cols = len(A), len(A[0])
    rank, prev = 0, 1
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if A[r][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        p = A[rank][c]
        for r in range(rank + 1, rows):
            a = A[r][c]
            A[r] = [(p * A[r][j] - a * A[rank][j]) // prev for j in range(cols)]
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def _rref(M):
    A = [[Fraction(x) for x in row] for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A, pivots


def exact_nullspace(M, cols: int | None = None) -> np.ndarray:
    """Basis of the right nullspace as rows of Fractions."""
    M = np.asarray(M, dtype=object)
    ncols = M.shape[1] if M.ndim == 2 and M.shape[0] else cols
    if M.size == 0:
        return to_rational(np.eye(ncols, dtype=int))
    R, piv = _rref(M)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(piv):
            v[p] = -R[i][f]
        basis.append(v)
    out = np.empty((len(basis), ncols), dtype=object)
    for i, v in enumerate(basis):
        out[i] = v
    return out


def float_rank(M, gap: float = FLOAT_GAP) -> int:
    M = np.asarray(to_float(M) if is_rational(M) else M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > gap * s[0]).sum())


def _float_nullspace(M, cols, gap=FLOAT_GAP):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.eye(cols)
    _, s, vt = np.linalg.svd(M)
    r = int((s > gap * (s[0] if s.size else 1)).sum())
    return vt[r:]


# ---------------------------------------------------------------------------
# presentations and representations

@dataclass(frozen=True)
class Presentation:
    generators: tuple
    relators: tuple

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "relators", tuple(tuple(int(a) for a in r) for r in self.relators))
        k = len(self.generators)
        for r in self.relators:
            if not r:
                raise ValueError("relators must be nonempty")
            if any(a == 0 or abs(a) > k for a in r):
                raise ValueError(f"relator {r} has a generator index out of range")


@dataclass
class Representation:
    presentation: Presentation
    matrices: list
    n: int
    tolerance: float = 1e-10
    relator_residuals: list = field(default_factory=list)

    def __post_init__(self):
        mats = [np.asarray(m, dtype=object) if is_rational(m) else np.asarray(m, dtype=float)
                for m in self.matrices]
        if len(mats) != len(self.presentation.generators):
            raise InvalidRepresentation("one matrix per generator is required")
        for m in mats:
            if m.shape != (self.n + 1, self.n + 1):
                raise InvalidRepresentation(f"matrix shape {m.shape} does not match n = {self.n}")
        self.matrices = mats
        self.inverses = [isometry_inverse(m) for m in mats]
        eye = np.eye(self.n + 1, dtype=int)
        self.relator_residuals = []
        for r in self.presentation.relators:
            g = evaluate_word(self, r)
            if self.exact:
                ok = all(x == 0 for x in (g - eye).ravel())
                res = 0.0 if ok else float(np.abs(to_float(g) - eye).max())
            else:
                # forward-error scale: the same product taken over entrywise absolute values
                res = float(np.abs(g - eye).max())
                ok = res <= self.tolerance * max(1.0, word_magnitude(self, r))
            self.relator_residuals.append(res)
            if not ok:
                raise InvalidRepresentation(f"relator {r} evaluates away from the identity (residual {res:.3g})")

    @property
    def exact(self) -> bool:
        return all(is_rational(m) for m in self.matrices)

    def as_float(self) -> "Representation":
        return Representation(self.presentation, [to_float(m) for m in self.matrices], self.n)

    def ad(self, backend=None):
        gb = geometric_basis(self.n)
        mats = self.matrices if (backend or ("rational" if self.exact else "float")) == "rational" \
            else [to_float(m) for m in self.matrices]
        return [gb.ad_matrix_of_group(m) for m in mats]


def evaluate_word(rho: Representation, word) -> np.ndarray:
    g = np.eye(rho.n + 1, dtype=int)
    g = to_rational(g) if rho.exact else g.astype(float)
    for a in word:
        g = g @ (rho.matrices[a - 1] if a > 0 else rho.inverses[-a - 1])
    return g


def word_magnitude(rho: Representation, word) -> float:
    """Largest entry of the word's product over entrywise |rho(g)|: the roundoff scale of ``evaluate_word``."""
    g = np.eye(rho.n + 1)
    for a in word:
        g = g @ np.abs(to_float(rho.matrices[a - 1] if a > 0 else rho.inverses[-a - 1]))
    return float(g.max())


# ---------------------------------------------------------------------------
# cocycles

@dataclass
class Cocycle:
    rho: Representation
    values: np.ndarray       # (#generators, dim)

    def __call__(self, word) -> np.ndarray:
        """``z(w)`` by the cocycle rule ``z(uv) = z(u) + Ad(rho(u)) z(v)``."""
        gb = geometric_basis(self.rho.n)
        exact = is_rational(self.values) and self.rho.exact
        zero = to_rational(np.zeros(gb.dim, dtype=int)) if exact else np.zeros(gb.dim)
        out = zero
        prefix = np.eye(self.rho.n + 1, dtype=int)
        prefix = to_rational(prefix) if exact else prefix.astype(float)
        mats = self.rho.matrices if exact else [to_float(m) for m in self.rho.matrices]
        invs = self.rho.inverses if exact else [to_float(m) for m in self.rho.inverses]
        vals = self.values if exact else to_float(self.values) if is_rational(self.values) else self.values
        for a in word:
            if a > 0:
                out = out + gb.ad_matrix_of_group(prefix) @ vals[a - 1]
                prefix = prefix @ mats[a - 1]
            else:
                prefix = prefix @ invs[-a - 1]
                out = out - gb.ad_matrix_of_group(prefix) @ vals[-a - 1]
        return out

    def magnitude(self, word) -> float:
        """Roundoff scale of ``self(word)``: the same sum with every term replaced by its absolute value."""
        gb = geometric_basis(self.rho.n)
        vals = np.abs(to_float(self.values))
        out = np.zeros(gb.dim)
        prefix = np.eye(self.rho.n + 1)
        for a in word:
            if a > 0:
                out += np.abs(gb.ad_matrix_of_group(prefix)) @ vals[a - 1]
                prefix = prefix @ to_float(self.rho.matrices[a - 1])
            else:
                prefix = prefix @ to_float(self.rho.inverses[-a - 1])
                out += np.abs(gb.ad_matrix_of_group(prefix)) @ vals[-a - 1]
        return float(out.max())


def fox_matrix(P: Presentation, rho: Representation, backend=None) -> np.ndarray:
    """Relator equations on ``z in g^{#gen}``: one block row of size dim g per relator."""
    gb = geometric_basis(rho.n)
    exact = (backend or ("rational" if rho.exact else "float")) == "rational"
    dim, k = gb.dim, len(P.generators)
    mats = rho.matrices if exact else [to_float(m) for m in rho.matrices]
    invs = rho.inverses if exact else [to_float(m) for m in rho.inverses]
    blocks = []
    for r in P.relators:
        row = np.zeros((dim, k * dim), dtype=int)
        row = to_rational(row) if exact else row.astype(float)
        prefix = np.eye(rho.n + 1, dtype=int)
        prefix = to_rational(prefix) if exact else prefix.astype(float)
        for a in r:
            j = abs(a) - 1
            if a > 0:
                row[:, j * dim:(j + 1) * dim] += gb.ad_matrix_of_group(prefix)
                prefix = prefix @ mats[j]
            else:
                prefix = prefix @ invs[j]
                row[:, j * dim:(j + 1) * dim] -= gb.ad_matrix_of_group(prefix)
        blocks.append(row)
    if not blocks:
        out = np.zeros((0, k * dim), dtype=object if exact else float)
        return out
    return np.concatenate(blocks, axis=0)


def coboundary_matrix(rho: Representation, backend=None) -> np.ndarray:
    """``V -> (V - Ad(rho(g_k)) V)_k`` as a ``(#gen * dim, dim)`` matrix."""
    gb = geometric_basis(rho.n)
    exact = (backend or ("rational" if rho.exact else "float")) == "rational"
    eye = np.eye(gb.dim, dtype=int)
    eye = to_rational(eye) if exact else eye.astype(float)
    return np.concatenate([eye - A for A in rho.ad("rational" if exact else "float")], axis=0)


@dataclass
class Subspace:
    basis: np.ndarray      # rows
    dimension: int
    float_dimension: int


def cocycle_space(P: Presentation, rho: Representation) -> Subspace:
    """Z^1 as the nullspace of the relator system; orthonormal float basis when inexact."""
    gb = geometric_basis(rho.n)
    cols = len(P.generators) * gb.dim
    Mf = fox_matrix(P, rho, "float")
    fdim = cols - float_rank(Mf)
    if rho.exact:
        M = fox_matrix(P, rho, "rational")
        basis = exact_nullspace(M, cols)
        return Subspace(basis, cols - exact_rank(M) if M.size else cols, fdim)
    basis = _float_nullspace(Mf, cols)
    return Subspace(basis, basis.shape[0], fdim)


def coboundary_space(P: Presentation, rho: Representation) -> Subspace:
    Bf = coboundary_matrix(rho, "float")
    fdim = float_rank(Bf)
    if rho.exact:
        B = coboundary_matrix(rho, "rational")
        return Subspace(B.T, exact_rank(B), fdim)
    u, s, _ = np.linalg.svd(Bf, full_matrices=False)
    return Subspace(u[:, :fdim].T, fdim, fdim)


def centralizer(rho: Representation) -> Subspace:
    """Elements of g fixed by every Ad(rho(g_k)) (H^0)."""
    gb = geometric_basis(rho.n)
    Bf = coboundary_matrix(rho, "float")
    fdim = gb.dim - float_rank(Bf)
    if rho.exact:
        B = coboundary_matrix(rho, "rational")
        basis = exact_nullspace(B, gb.dim)
        return Subspace(basis, basis.shape[0], fdim)
    basis = _float_nullspace(Bf, gb.dim)
    return Subspace(basis, basis.shape[0], fdim)


@dataclass
class CohomologyReport:
    dim_Z1: int
    dim_B1: int
    dim_H1: int
    dim_H0: int
    complement_basis: np.ndarray
    float_dims: dict
    backend: str

    @property
    def infinitesimally_rigid(self) -> bool:
        return self.dim_H1 == 0

    def summary(self) -> dict:
        note = ("dim H^1 = 0: infinitesimally rigid, hence locally rigid by Weil's lemma"
                if self.infinitesimally_rigid else "dim H^1 > 0: not infinitesimally rigid")
        return {"dim_Z1": self.dim_Z1, "dim_B1": self.dim_B1, "dim_H1": self.dim_H1,
                "dim_H0": self.dim_H0, "backend": self.backend, "float_dims": self.float_dims,
                "infinitesimally_rigid": self.infinitesimally_rigid, "note": note}


def h1_report(P: Presentation, rho: Representation) -> CohomologyReport:
    Z = cocycle_space(P, rho)
    B = coboundary_space(P, rho)
    C = centralizer(rho)
    h1 = Z.dimension - B.dimension
    if h1 < 0:
        raise ArithmeticError("coboundaries exceed cocycles; rank decision inconsistent")
    comp = _complement(Z.basis, B.basis, rho.exact)
    return CohomologyReport(Z.dimension, B.dimension, h1, C.dimension, comp,
                            {"Z1": Z.float_dimension, "B1": B.float_dimension,
                             "H1": Z.float_dimension - B.float_dimension, "H0": C.float_dimension},
                            "rational" if rho.exact else "float")


def _complement(Zb, Bb, exact):
    """Rows of Zb extending a basis of span(Bb) to span(Zb), greedily."""
    chosen = []
    current = [row for row in Bb]
    rank = exact_rank(np.array(current, dtype=object)) if (exact and current) else (
        float_rank(np.array(current)) if current else 0)
    for row in Zb:
        trial = current + [row]
        arr = np.array(trial, dtype=object if exact else float)
        r = exact_rank(arr) if exact else float_rank(arr)
        if r > rank:
            current, rank = trial, r
            chosen.append(row)
    if not chosen:
        return np.zeros((0, len(Zb[0]) if len(Zb) else 0))
    return np.array(chosen, dtype=object if exact else float)


def in_coboundaries(z: Cocycle) -> bool:
    """Exact (or float-gap) membership of ``z`` in B^1."""
    rho = z.rho
    exact = rho.exact and is_rational(z.values)
    B = coboundary_matrix(rho, "rational" if exact else "float")
    v = z.values.reshape(-1, 1)
    aug = np.concatenate([B, v if exact else to_float(v)], axis=1)
    if exact:
        return exact_rank(aug) == exact_rank(B)
    return float_rank(aug) == float_rank(B)


# ---------------------------------------------------------------------------
# boundary restriction and bending

def restrict_and_split(z: Cocycle, boundary_words, tol: float = 1e-10):
    """Evaluate ``z`` on boundary words and split each value into (h-part, s-part).

    Returns two lists of coefficient vectors, one per boundary word, plus the
    boundary matrices.
    """
    rho = z.rho
    n = rho.n
    e_n = np.zeros(n + 1, dtype=int)
    e_n[n] = 1
    proj_h, proj_s = hyperplane_split(n, "rational" if rho.exact else "float")
    Ph, Ps = proj_h.matrix, proj_s.matrix
    mats, hs, ss = [], [], []
    for w in boundary_words:
        g = evaluate_word(rho, w)
        ge = g @ (to_rational(e_n) if rho.exact else e_n)
        dev = np.abs(to_float(ge) - e_n).max() if not rho.exact else (0 if all(x == y for x, y in zip(ge, e_n)) else 1)
        dev_neg = np.abs(to_float(ge) + e_n).max() if not rho.exact else (0 if all(x == -y for x, y in zip(ge, e_n)) else 1)
        if min(dev, dev_neg) > tol:
            raise ValueError(f"boundary word {list(w)} does not preserve the standard hyperplane")
        val = z(w)
        P_h = Ph if is_rational(val) else to_float(Ph)
        P_s = Ps if is_rational(val) else to_float(Ps)
        hs.append(P_h @ val)
        ss.append(P_s @ val)
        mats.append(g)
    return np.array(hs), np.array(ss), mats


def bending_cocycle(rho: Representation, A_generators, B_generators, C_words, X, tol: float = 1e-10) -> Cocycle:
    """``z(a) = 0`` on A-side generators, ``z(b) = X - Ad(rho(b)) X`` on B-side ones."""
    gb = geometric_basis(rho.n)
    mat = X.mat if hasattr(X, "mat") else X
    x = gb.coefficients(mat)
    exact = rho.exact and is_rational(x)
    if not exact:
        x = to_float(x) if is_rational(x) else x
    for c in C_words:
        g = evaluate_word(rho, c)
        Ad = gb.ad_matrix_of_group(g if exact else to_float(g))
        res = Ad @ x - x
        bad = (any(v != 0 for v in res) if exact
               else float(np.abs(res).max()) > tol * max(1.0, float(np.abs(Ad).max() * np.abs(x).max())))
        if bad:
            raise ValueError(f"X is not centralized by rho({list(c)}): residual {float(np.abs(to_float(res)).max()):.3g}")
    k = len(rho.presentation.generators)
    vals = np.zeros((k, gb.dim), dtype=int)
    vals = to_rational(vals) if exact else vals.astype(float)
    if set(A_generators) & set(B_generators):
        raise ValueError("amalgam sides must be disjoint generator subsets")
    ads = rho.ad("rational" if exact else "float")
    for b in B_generators:
        vals[b - 1] = x - ads[b - 1] @ x
    return Cocycle(rho, vals)


# ---------------------------------------------------------------------------
# Tietze moves (presentation, representation) -> (presentation, representation)

def conjugate_relator(P: Presentation, index: int, word) -> Presentation:
    w = list(word)
    inv = [-a for a in reversed(w)]
    rels = list(P.relators)
    rels[index] = tuple(w + list(rels[index]) + inv)
    return Presentation(P.generators, rels)


def cyclically_permute_relator(P: Presentation, index: int, shift: int) -> Presentation:
    rels = list(P.relators)
    r = list(rels[index])
    s = shift % len(r)
    rels[index] = tuple(r[s:] + r[:s])
    return Presentation(P.generators, rels)


def invert_relator(P: Presentation, index: int) -> Presentation:
    rels = list(P.relators)
    rels[index] = tuple(-a for a in reversed(rels[index]))
    return Presentation(P.generators, rels)


def add_derived_generator(P: Presentation, rho: Representation, word, name: str = None):
    """Add a generator ``g = word`` with relator ``g word^{-1}``."""
    k = len(P.generators)
    gens = list(P.generators) + [name or f"g{k + 1}"]
    rel = (k + 1,) + tuple(-a for a in reversed(word))
    P2 = Presentation(gens, list(P.relators) + [rel])
    rho2 = Representation(P2, list(rho.matrices) + [evaluate_word(rho, word)], rho.n)
    return P2, rho2


def conjugate_representation(rho: Representation, g) -> Representation:
    gi = isometry_inverse(g)
    return Representation(rho.presentation, [g @ m @ gi for m in rho.matrices], rho.n)
