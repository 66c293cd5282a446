"""Structure checks for the mixed problem ``(Delta + 2m) tau = f``, ``h = 0``, ``d_n sigma = 0``.

A 1-form near a totally geodesic boundary splits as ``tau = h dt + sigma`` with
``t`` the distance into the manifold. Four checks live here:

* the frozen-coefficient half-space ODE (symbol ellipticity),
* a finite-difference strip operator that is self-adjoint in a lumped inner
  product and bounded below by ``2m``,
* the Green boundary pairing on warped-product grids,
* the scalar trace operator ``delta d + 2m`` with a Neumann face.

The strip is ``[0, depth] x [-L, L]^m`` with ``t = 0`` the boundary. Every other
face carries homogeneous Dirichlet data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import kron_sum_coo
from .coordinate_forms import measured_order

__all__ = [
    "SymbolProblem", "SymbolReport", "symbol_ellipticity_check", "StripDiscretization",
    "DiscreteOperator", "assemble_discrete_operator", "manufactured_solution_study",
    "boundary_row_study", "interior_form_check", "WarpedStrip", "green_boundary_pairing",
    "green_defect", "trace_kernel_check", "write_coo",
]

BOUNDARY_CONDITIONS = ("h", "dsigma")


# ---------------------------------------------------------------------------
# half-space symbol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolProblem:
    m: int
    zeta: tuple

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=float)
        if z.shape != (self.m,):
            raise ValueError(f"zeta must have length m = {self.m}")
        if not np.any(z != 0):
            raise ValueError("zeta must be nonzero")
        object.__setattr__(self, "zeta", tuple(float(v) for v in z))


@dataclass
class SymbolReport:
    verdict: str
    zeta_norm: float
    bounded_dimension: int
    boundary_matrix: np.ndarray
    singular_values: np.ndarray
    surviving_dimension: int
    surviving_profiles: np.ndarray = field(repr=False)

    @property
    def elliptic(self) -> bool:
        return self.verdict == "elliptic"


def symbol_ellipticity_check(sp_: SymbolProblem, conditions=BOUNDARY_CONDITIONS,
                             tol: float = 1e-10) -> SymbolReport:
    """Bounded solutions of ``f'' = |zeta|^2 f`` on ``t >= 0`` under boundary rows.

    ``f = (h, sigma_1..sigma_m)``. The bounded space is the stable eigenspace of
    the first-order system in ``(f, f')``. ``conditions`` selects boundary rows:
    ``"h"`` pins ``h(0)``, ``"dsigma"`` pins ``sigma'(0)``, ``"sigma"`` pins
    ``sigma(0)``.
    """
    bad = set(conditions) - {"h", "dsigma", "sigma"}
    if bad:
        raise ValueError(f"unknown boundary conditions {sorted(bad)}")
    n = sp_.m + 1
    k2 = float(np.dot(sp_.zeta, sp_.zeta))
    M = np.block([[np.zeros((n, n)), np.eye(n)], [k2 * np.eye(n), np.zeros((n, n))]])
    w, V = scipy.linalg.eig(M)
    stable = V[:, w.real < 0]
    rows = []
    if "h" in conditions:
        rows.append(np.eye(2 * n)[0])
    if "sigma" in conditions:
        rows.extend(np.eye(2 * n)[1:n])
    if "dsigma" in conditions:
        rows.extend(np.eye(2 * n)[n + 1:])
    B = np.array(rows).reshape(-1, 2 * n) @ stable
    s = scipy.linalg.svdvals(B) if B.size else np.zeros(0)
    scale = max(1.0, float(s.max()) if s.size else 1.0)
    rank = int(np.sum(s > tol * scale))
    null = scipy.linalg.null_space(B, rcond=tol) if B.size else np.eye(stable.shape[1])
    profiles = (stable @ null)[:n].T if null.size else np.zeros((0, n))
    survive = stable.shape[1] - rank
    return SymbolReport("elliptic" if survive == 0 else "counterexample", float(np.sqrt(k2)),
                        stable.shape[1], B, s, survive, profiles)


# ---------------------------------------------------------------------------
# flat strip operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StripDiscretization:
    """Uniform grid with ``nodes`` points per axis, including both ends."""

    m: int
    nodes: int = 8
    depth: float = 1.0
    half_width: float = 0.5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("boundary dimension m must be at least 1")
        if self.nodes < 4:
            raise ValueError("strip grid needs at least 4 nodes per axis")
        if not (self.depth > 0 and self.half_width > 0):
            raise ValueError("strip extents must be positive")

    @property
    def dt(self) -> float:
        return self.depth / (self.nodes - 1)

    @property
    def dx(self) -> float:
        return 2 * self.half_width / (self.nodes - 1)

    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.depth, self.nodes)

    def x_nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.nodes)

    @property
    def interior_shape(self) -> tuple:
        return (self.nodes - 2,) * (self.m + 1)

    def interior_mesh(self):
        """Coordinates of unknowns: t-nodes 1..N-2 and interior x-nodes."""
        t = self.t_nodes()[1:-1]
        x = self.x_nodes()[1:-1]
        return np.meshgrid(t, *([x] * self.m), indexing="ij")


def _dirichlet_band(N: int, step: float) -> np.ndarray:
    b = np.zeros((N, 3))
    b[:, 0], b[:, 1], b[:, 2] = -1.0, 2.0, -1.0
    return b / step ** 2


def _neumann_band(N: int, step: float) -> np.ndarray:
    # sigma_0 = (4 sigma_1 - sigma_2) / 3 from the one-sided row, substituted
    b = _dirichlet_band(N, step)
    b[0, 1] = 2.0 / 3.0 / step ** 2
    b[0, 2] = -2.0 / 3.0 / step ** 2
    return b


def _component_weights(d: StripDiscretization, neumann: bool) -> np.ndarray:
    w_t = np.ones(d.nodes - 2)
    if neumann:
        w_t[0] = 1.5
    w = w_t.reshape((-1,) + (1,) * d.m) * np.ones(d.interior_shape)
    return w.ravel()


@dataclass
class DiscreteOperator:
    """``(Delta + 2m)`` on the interior unknowns of ``h`` then ``sigma_1..sigma_m``.

    ``weights`` is the diagonal inner product in which ``matrix`` is symmetric.
    """

    strip: StripDiscretization
    matrix: sp.csr_matrix
    weights: np.ndarray
    components: tuple
    diagnostics: dict

    def symmetric_form(self) -> sp.csr_matrix:
        return sp.diags(self.weights) @ self.matrix

    def similar_symmetric(self) -> sp.csr_matrix:
        s = np.sqrt(self.weights)
        return sp.diags(s) @ self.matrix @ sp.diags(1.0 / s)

    def split(self, u):
        size = int(np.prod(self.strip.interior_shape))
        return [u[i * size:(i + 1) * size].reshape(self.strip.interior_shape)
                for i in range(len(self.components))]

    def boundary_layer(self, sigma_interior):
        """Reconstruct ``sigma`` on the ``t = 0`` layer from the one-sided row."""
        return (4 * sigma_interior[0] - sigma_interior[1]) / 3.0


def _component_matrix(d: StripDiscretization, neumann: bool, shift: float) -> sp.csr_matrix:
    N = d.nodes - 2
    bands = np.stack([(_neumann_band if neumann else _dirichlet_band)(N, d.dt)]
                     + [_dirichlet_band(N, d.dx)] * d.m)
    rows, cols, vals = kron_sum_coo(d.interior_shape, bands, shift)
    size = N ** (d.m + 1)
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))


def assemble_discrete_operator(d: StripDiscretization, eigen: bool = True) -> DiscreteOperator:
    """Assemble ``(Delta + 2m)`` on 1-forms with the boundary rows eliminated."""
    shift = 2.0 * d.m
    A_h = _component_matrix(d, False, shift)
    A_s = _component_matrix(d, True, shift)
    mat = sp.block_diag([A_h] + [A_s] * d.m, format="csr")
    weights = np.concatenate([_component_weights(d, False)]
                             + [_component_weights(d, True)] * d.m)
    names = ("h",) + tuple(f"sigma_{i + 1}" for i in range(d.m))
    op = DiscreteOperator(d, mat, weights, names, {})
    S = op.symmetric_form()
    norm = spla.norm(S)
    asym = spla.norm(S - S.T) / norm if norm else 0.0
    raw = spla.norm(mat - mat.T) / spla.norm(mat)
    diag = {
        "size": mat.shape[0],
        "nonzeros": int(mat.nnz),
        "symmetry_residual": float(asym),
        "unweighted_asymmetry": float(raw),
        "shift": shift,
    }
    if eigen:
        lam = _smallest_eigenvalue(op)
        diag["smallest_eigenvalue"] = lam
        diag["eigenvalue_oracle"] = _kron_eigen_floor(d)
        diag["positive_definite"] = bool(lam > 0)
        diag["floor_margin"] = lam - shift
    op.diagnostics = diag
    return op


def _smallest_eigenvalue(op: DiscreteOperator) -> float:
    S = op.similar_symmetric()
    S = (S + S.T) * 0.5
    if S.shape[0] <= 600:
        return float(np.linalg.eigvalsh(S.toarray())[0])
    val = spla.eigsh(S, k=1, which="SA", tol=1e-12, return_eigenvectors=False)
    return float(val[0])


def _weighted_solve(A, weights, f):
    """Solve ``A u = f`` through the symmetric positive definite ``W A u = W f``."""
    S = sp.diags(weights) @ A
    u, info = spla.cg(S, weights * f, rtol=1e-13, atol=0.0, maxiter=10 * A.shape[0])
    if info != 0:
        raise RuntimeError(f"conjugate gradients did not converge (info={info})")
    return u


def _kron_eigen_floor(d: StripDiscretization) -> float:
    """Independent floor: sum of the 1D minimal eigenvalues plus ``2m``."""
    N = d.nodes - 2

    def tri(b):
        return np.diag(b[:, 1]) + np.diag(b[1:, 0], -1) + np.diag(b[:-1, 2], 1)

    x_min = float(np.linalg.eigvalsh(tri(_dirichlet_band(N, d.dx)))[0])
    t_dir = float(np.linalg.eigvalsh(tri(_dirichlet_band(N, d.dt)))[0])
    t_neu = float(np.min(np.linalg.eigvals(tri(_neumann_band(N, d.dt))).real))
    return 2.0 * d.m + d.m * x_min + min(t_dir, t_neu)


def write_coo(op: DiscreteOperator, path) -> None:
    """Write ``row col value`` lines (0-based) with a size header."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"% {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")


def _exact_fields(d: StripDiscretization):
    T, L, m = d.depth, d.half_width, d.m
    kx = np.pi / (2 * L)
    k_h, k_s = np.pi / T, np.pi / (2 * T)

    def h_star(t, xs):
        return np.sin(k_h * t) * np.prod([np.cos(kx * x) for x in xs], axis=0)

    def s_star(t, xs):
        return np.cos(k_s * t) * np.prod([np.cos(kx * x) for x in xs], axis=0)

    lam_h = k_h ** 2 + m * kx ** 2 + 2 * m
    lam_s = k_s ** 2 + m * kx ** 2 + 2 * m
    return h_star, s_star, lam_h, lam_s


def _mms_error(d: StripDiscretization) -> float:
    op = assemble_discrete_operator(d, eigen=False)
    h_star, s_star, lam_h, lam_s = _exact_fields(d)
    t, *xs = d.interior_mesh()
    hv, sv = h_star(t, xs), s_star(t, xs)
    # sigma_i = sigma* scaled by i so components are distinguishable
    rhs = [lam_h * hv] + [(i + 1) * lam_s * sv for i in range(d.m)]
    f = np.concatenate([r.ravel() for r in rhs])
    u = _weighted_solve(op.matrix, op.weights, f)
    parts = op.split(u)
    err = np.abs(parts[0] - hv).max()
    x_int = d.x_nodes()[1:-1]
    grids0 = np.meshgrid(*([x_int] * d.m), indexing="ij")
    s0 = s_star(0.0, grids0)
    for i, s in enumerate(parts[1:]):
        err = max(err, np.abs(s - (i + 1) * sv).max())
        err = max(err, np.abs(op.boundary_layer(s) - (i + 1) * s0).max())
    return float(err)


def manufactured_solution_study(m: int, nodes=(9, 17), depth: float = 1.0,
                                half_width: float = 0.5) -> dict:
    """Max-norm error of the strip solve against a smooth exact solution."""
    errs = []
    steps = []
    for N in nodes:
        d = StripDiscretization(m, N, depth, half_width)
        errs.append(_mms_error(d))
        steps.append(d.dt)
    return {"nodes": list(nodes), "errors": errs,
            "order": measured_order(errs, steps[0] / steps[1])}


def boundary_row_study(nodes=(9, 17, 33), depth: float = 1.0) -> dict:
    """Residual of the discrete boundary rows on restrictions of smooth fields.

    The fields satisfy the continuous conditions, so the one-sided row residual
    measures how well the discrete row reproduces ``d_t sigma(0) = 0``.
    """
    errs = []
    for N in nodes:
        t = np.linspace(0.0, depth, N)
        dt = t[1] - t[0]
        s = np.cos(np.pi * t / (2 * depth)) + (t / depth) ** 3
        errs.append(float(abs((-3 * s[0] + 4 * s[1] - s[2]) / (2 * dt))))
    return {"nodes": list(nodes), "errors": errs,
            "order": measured_order(errs[-2:], (nodes[-1] - 1) / (nodes[-2] - 1))}


def interior_form_check(d: StripDiscretization, samples: int = 20, seed: int = 0) -> dict:
    """Ratios ``<P tau, tau>_w / <tau, tau>_w`` for random interior-supported data."""
    op = assemble_discrete_operator(d, eigen=False)
    rng = np.random.default_rng(seed)
    shape = d.interior_shape
    mask = np.zeros(shape, dtype=bool)
    mask[(slice(1, -1),) * len(shape)] = True
    ratios = []
    for _ in range(samples):
        comps = [rng.normal(size=shape) * mask for _ in op.components]
        u = np.concatenate([c.ravel() for c in comps])
        wu = op.weights * u
        ratios.append(float(wu @ (op.matrix @ u) / (wu @ u)))
    return {"min_ratio": min(ratios), "floor": 2.0 * d.m, "ratios": ratios}


# ---------------------------------------------------------------------------
# Green pairing on warped grids
# ---------------------------------------------------------------------------

@dataclass
class WarpedStrip:
    """Grid on ``r in [-depth, 0] x [-L, L]^m`` with metric ``dr^2 + cosh^2 r g``.

    ``metric`` maps points (K, n) to (K, n, n). Pass ``flat=True`` for the
    Euclidean sanity tier.
    """

    m: int
    nodes: int
    depth: float = 0.5
    half_width: float = 0.4
    metric: object = None

    def __post_init__(self):
        if self.nodes < 4:
            raise ValueError("strip grid needs at least 4 nodes per axis")
        if self.metric is None:
            self.metric = lambda p: np.broadcast_to(np.eye(self.m + 1), (len(p), self.m + 1, self.m + 1))

    def axes(self):
        r = np.linspace(-self.depth, 0.0, self.nodes)
        x = np.linspace(-self.half_width, self.half_width, self.nodes)
        return [r] + [x] * self.m

    def mesh(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(grids, axis=-1)

    def geometry(self):
        pts = self.mesh()
        shape = pts.shape[:-1]
        g = np.asarray(self.metric(pts.reshape(-1, self.m + 1))).reshape(shape + (self.m + 1,) * 2)
        ginv = np.linalg.inv(g)
        sqrtg = np.sqrt(np.abs(np.linalg.det(g)))
        return g, ginv, sqrtg

    def sample(self, field) -> np.ndarray:
        pts = self.mesh()
        return np.asarray(field(pts.reshape(-1, self.m + 1))).reshape(pts.shape)


def _grad(F, axes):
    """Stacked gradient along the first ``len(axes)`` axes, new axis last."""
    return np.stack([np.gradient(F, ax, axis=i, edge_order=2) for i, ax in enumerate(axes)], axis=-1)


def _trapezoid(F, axes):
    out = F
    for ax in axes:
        out = trapezoid(out, ax, axis=0)
    return out


def _d_and_delta(tau, grid: WarpedStrip, geo):
    g, ginv, sqrtg = geo
    axes = grid.axes()
    D = _grad(tau, axes)                                 # [..., nu, mu] = d_mu tau_nu
    dtau = np.swapaxes(D, -1, -2) - D                    # [..., mu, nu] = d_mu tau_nu - d_nu tau_mu
    flux = sqrtg[..., None] * np.einsum("...mn,...n->...m", ginv, tau)
    div = sum(np.gradient(flux[..., i], axes[i], axis=i, edge_order=2) for i in range(len(axes)))
    delta = -div / sqrtg
    return dtau, delta


def _boundary_vector(tau, psi, grid, geo):
    """``X`` with ``<X, nu> = delta tau psi(nu) - <psi, i(nu) d tau>``."""
    g, ginv, sqrtg = geo
    dtau, delta = _d_and_delta(tau, grid, geo)
    psi_up = np.einsum("...mn,...n->...m", ginv, psi)
    return delta[..., None] * psi_up - np.einsum("...ma,...ab,...b->...m", ginv, dtau, psi_up)


def _face_integrals(X, grid: WarpedStrip, sqrtg):
    axes = grid.axes()
    faces = {}
    for i in range(len(axes)):
        for side, idx, sign in (("low", 0, -1.0), ("high", -1, 1.0)):
            dens = sign * np.take(sqrtg * X[..., i], idx, axis=i)
            others = [ax for j, ax in enumerate(axes) if j != i]
            faces[(i, side)] = float(_trapezoid(dens, others))
    return faces


def green_boundary_pairing(tau, psi, grid: WarpedStrip, all_faces: bool = False):
    """``beta(tau, psi)`` on the ``r = 0`` face, arrays of shape ``grid + (n,)``.

    With ``all_faces`` the per-face dictionary is returned instead.
    """
    tau = np.asarray(tau, dtype=float)
    psi = np.asarray(psi, dtype=float)
    geo = grid.geometry()
    faces = _face_integrals(_boundary_vector(tau, psi, grid, geo), grid, geo[2])
    return faces if all_faces else faces[(0, "high")]


def _laplacian(tau, grid, geo):
    g, ginv, sqrtg = geo
    axes = grid.axes()
    dtau, delta = _d_and_delta(tau, grid, geo)
    d_delta = _grad(delta, axes)
    up = np.einsum("...ma,...nb,...ab->...mn", ginv, ginv, dtau)
    flux = sqrtg[..., None, None] * up
    # (delta d tau)_nu = -(1/sqrt g) g_{nu b} d_mu(sqrt g dtau^{mu b})
    div = sum(np.gradient(flux[..., i, :], axes[i], axis=i, edge_order=2) for i in range(len(axes)))
    dd = -np.einsum("...nb,...b->...n", g, div) / sqrtg[..., None]
    return d_delta + dd


def _l2(a, b, grid, geo):
    g, ginv, sqrtg = geo
    dens = sqrtg * np.einsum("...mn,...m,...n->...", ginv, a, b)
    return float(_trapezoid(dens, grid.axes()))


def green_defect(tau, psi, grid: WarpedStrip) -> dict:
    """Green's identity residual with all truncation faces included."""
    geo = grid.geometry()
    tau = np.asarray(tau, dtype=float)
    psi = np.asarray(psi, dtype=float)
    lt, lp = _laplacian(tau, grid, geo), _laplacian(psi, grid, geo)
    bt = sum(_face_integrals(_boundary_vector(tau, psi, grid, geo), grid, geo[2]).values())
    bp = sum(_face_integrals(_boundary_vector(psi, tau, grid, geo), grid, geo[2]).values())
    lhs = _l2(lt, psi, grid, geo) - _l2(lp, tau, grid, geo)
    return {"lhs": lhs, "beta_difference": bt - bp, "defect": lhs - (bt - bp)}


# ---------------------------------------------------------------------------
# trace equation
# ---------------------------------------------------------------------------

def trace_kernel_check(d: StripDiscretization, nodes_for_order=(9, 17)) -> dict:
    """Scalar ``delta d + 2m`` with a Neumann row at ``t = 0``.

    Reports the weighted symmetry residual, the smallest eigenvalue against the
    ``2m`` floor, the quadratic form of the constant trial function on the
    closed strip (boundary integral zero since ``d 1 = 0``), and a
    manufactured-solution order.
    """
    shift = 2.0 * d.m
    A = _component_matrix(d, True, shift)
    w = _component_weights(d, True)
    op = DiscreteOperator(d, A, w, ("tr",), {})
    S = op.symmetric_form()
    asym = float(spla.norm(S - S.T) / spla.norm(S))
    lam = _smallest_eigenvalue(op)
    volume = d.depth * (2 * d.half_width) ** d.m
    # <d1, d1> + 2m <1, 1> - boundary term with d1 = 0
    constant_form = shift * volume
    errs, steps = [], []
    for N in nodes_for_order:
        dd = StripDiscretization(d.m, N, d.depth, d.half_width)
        _, s_star, _, lam_s = _exact_fields(dd)
        t, *xs = dd.interior_mesh()
        sv = s_star(t, xs)
        M = _component_matrix(dd, True, shift)
        u = _weighted_solve(M, _component_weights(dd, True), (lam_s * sv).ravel()).reshape(sv.shape)
        errs.append(float(np.abs(u - sv).max()))
        steps.append(dd.dt)
    return {
        "symmetry_residual": asym,
        "smallest_eigenvalue": lam,
        "floor": shift,
        "kernel_trivial": bool(lam > 0),
        "constant_form": constant_form,
        "mms_errors": errs,
        "mms_order": measured_order(errs, steps[0] / steps[1]),
    }
