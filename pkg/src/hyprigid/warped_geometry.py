"""The warped product M x R with metric cosh(r)^2 g + dr^2 inside H^n.

A chart point is ``y = (r, x_1, ..., x_m)`` where ``x`` are geodesic normal
coordinates on the slice ``H^m = {x_n = 0}`` centred at ``x0``. The frame at
``y`` is the Lorentz matrix ``F(y) = G(x) A(r)``:

* ``G(x) = exp(sum x_i E_i)`` is the transvection from ``x0`` to the slice point,
* ``A(r) = exp(r N)`` pushes off along the normal geodesic.

Column 0 of ``F`` is the point, columns ``1..m`` the extended frame ``e_i`` and
column ``n`` the unit normal. Frame indices follow ``[n, e_1, ..., e_m]``
throughout the package, matching the coframe ``[dr, w_1, ..., w_m]``.

Everything here is closed form. The left Maurer-Cartan form ``F^{-1} dF``
splits into the coframe (translation part) and the Levi-Civita connection
(rotation part).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .minkowski_lie import Frame, HPoint, geometric_basis, isometry_inverse, transvection

__all__ = [
    "CrossSectionChart", "WarpedPoint", "ConnectionData", "FrameData",
    "extended_frame", "connection_coefficients", "project_to_core", "shoot_to_core",
]


@dataclass(frozen=True)
class WarpedPoint:
    x: tuple
    r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, *self.x], dtype=float)


@dataclass
class FrameData:
    """Pointwise geometric data for a batch of chart points (leading axis K)."""

    F: np.ndarray          # (K, n+1, n+1) frame matrices
    theta: np.ndarray      # (K, n, n) coframe: theta[a, mu] = w^a(d/dy_mu)
    theta_inv: np.ndarray  # (K, n, n) theta_inv[mu, a] = dy_mu(f_a)
    gamma: np.ndarray      # (K, n, n+1, n+1) connection along f_j, ambient rotation matrices
    gamma_frame: np.ndarray  # (K, n, n, n) gamma_frame[j, b, a] = <nabla_{f_j} f_a, f_b>
    ad_gamma: np.ndarray   # (K, n, dim, dim) ad(gamma_j) on basis coefficients
    adF: np.ndarray        # (K, dim, dim) Ad(F) on basis coefficients
    adF_inv: np.ndarray    # (K, dim, dim)
    metric: np.ndarray     # (K, n, n) coordinate metric
    metric_inv: np.ndarray
    sqrtg: np.ndarray      # (K,)

    @property
    def gram(self) -> np.ndarray:
        """Bundle metric on constant-basis coefficients: Ad(F^{-1})^T Ad(F^{-1})."""
        return np.einsum("kab,kac->kbc", self.adF_inv, self.adF_inv)


@dataclass
class ConnectionData:
    """Levi-Civita data at one warped point, in extended-frame components.

    ``grad_e_n[i]`` holds the tangential components of nabla_{e_i} n,
    ``normal_part[i, j]`` is <nabla_{e_i} e_j, n>, ``grad_n_e[i]`` is
    nabla_n e_i (all n components), ``grad_n_n`` is nabla_n n and
    ``christoffel[i, j, k] = <nabla_{e_j} e_i, e_k>``.
    """

    grad_e_n: np.ndarray
    normal_part: np.ndarray
    grad_n_e: np.ndarray
    grad_n_n: np.ndarray
    christoffel: np.ndarray


class CrossSectionChart:
    """Geodesic normal ball of radius ``radius`` in H^m, extended to the warped chart."""

    def __init__(self, m: int, radius: float = 1.0, h: float = 1e-3):
        if m < 1:
            raise ValueError("cross-section dimension must be at least 1")
        if not h > 0:
            raise ValueError("grid spacing h must be positive")
        if not 0 < radius <= 1.0 + 1e-12:
            raise ValueError("chart radius must lie in (0, 1]")
        self.m = m
        self.n = m + 1
        self.radius = float(radius)
        self.h = float(h)
        self.basis = geometric_basis(self.n)

    # -- validation ---------------------------------------------------------
    def check_inside(self, y) -> None:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        rad = np.sqrt((y[:, 1:] ** 2).sum(axis=1))
        if np.any(rad > self.radius * (1 + 1e-12)):
            raise ValueError("point lies outside the chart ball")

    # -- embedding ------------------------------------------------------------
    def _G(self, x):
        K = x.shape[0]
        n = self.n
        G = np.zeros((K, n + 1, n + 1))
        G[:, : n, : n] = transvection(x)
        G[:, n, n] = 1.0
        return G

    def _A(self, r):
        K = r.shape[0]
        n = self.n
        A = np.broadcast_to(np.eye(n + 1), (K, n + 1, n + 1)).copy()
        c, s = np.cosh(r), np.sinh(r)
        A[:, 0, 0] = c
        A[:, n, n] = c
        A[:, 0, n] = s
        A[:, n, 0] = s
        return A

    def frame_matrix(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return self._G(y[:, 1:]) @ self._A(y[:, 0])

    def point(self, y) -> np.ndarray:
        return self.frame_matrix(y)[:, :, 0]

    def chart_coordinates(self, P) -> np.ndarray:
        """Inverse of :meth:`point` for hyperboloid points (batched)."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        n = self.n
        r = np.arcsinh(P[:, n])
        q = (P[:, : n] - 0.0) / np.cosh(r)[:, None]
        rho = np.arccosh(np.maximum(q[:, 0], 1.0))
        v = q[:, 1:]
        nv = np.sqrt((v ** 2).sum(axis=1))
        scale = np.where(nv > 1e-300, rho / np.where(nv > 1e-300, nv, 1.0), 1.0)
        return np.column_stack([r, v * scale[:, None]])

    def maurer_cartan(self, y) -> np.ndarray:
        """``F^{-1} dF / dy_mu`` for each coordinate, shape (K, n, n+1, n+1)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        K, n, m = y.shape[0], self.n, self.m
        x, r = y[:, 1:], y[:, 0]
        rho2 = (x ** 2).sum(axis=1)
        rho = np.sqrt(rho2)
        small = rho < 1e-4
        safe = np.where(small, 1.0, rho)
        # coefficients of (1 - exp(-ad X))/ad X = 1 + a ad X + b (ad X)^2
        a = np.where(small, -0.5 - rho2 / 24, (1 - np.cosh(safe)) / safe ** 2)
        b = np.where(small, 1.0 / 6 + rho2 / 120, (np.sinh(safe) / safe - 1) / safe ** 2)
        X = np.zeros((K, n + 1, n + 1))
        X[:, 0, 1: m + 1] = x
        X[:, 1: m + 1, 0] = x
        omega = np.zeros((K, n, n + 1, n + 1))
        omega[:, 0, 0, n] = 1.0
        omega[:, 0, n, 0] = 1.0
        Ai = isometry_inverse(self._A(r))
        A = self._A(r)
        for l in range(m):
            E = np.zeros((n + 1, n + 1))
            E[0, l + 1] = E[l + 1, 0] = 1.0
            c1 = X @ E - E @ X
            c2 = X @ c1 - c1 @ X
            w = E + a[:, None, None] * c1 + b[:, None, None] * c2
            omega[:, l + 1] = Ai @ w @ A
        return omega

    def frame_data(self, y) -> FrameData:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        gb = self.basis
        n = self.n
        F = self.frame_matrix(y)
        om = self.maurer_cartan(y)
        ax = np.array(gb.axis)
        theta = om[:, :, ax, 0].transpose(0, 2, 1)          # (K, a, mu)
        theta_inv = np.linalg.inv(theta)                      # (K, mu, a)
        om_frame = np.einsum("kma,kmij->kaij", theta_inv, om)
        B = gb.matrices("float")
        gamma = om_frame - B[None, : n]
        gamma_frame = gamma[:, :, ax][:, :, :, ax]
        gcoef = gb.coefficients(gamma)                        # (K, n, dim)
        ad_gamma = gb.ad_of(gcoef)
        adF = gb.ad_matrix_of_group(F)
        adF_inv = gb.ad_matrix_of_group(isometry_inverse(F))
        metric = np.einsum("kam,kan->kmn", theta, theta)
        metric_inv = np.einsum("kma,kna->kmn", theta_inv, theta_inv)
        sqrtg = np.abs(np.linalg.det(theta))
        return FrameData(F, theta, theta_inv, gamma, gamma_frame, ad_gamma, adF, adF_inv,
                         metric, metric_inv, sqrtg)

    def metric(self, y) -> np.ndarray:
        om = self.maurer_cartan(y)
        ax = np.array(self.basis.axis)
        theta = om[:, :, ax, 0].transpose(0, 2, 1)
        return np.einsum("kam,kan->kmn", theta, theta)

    # -- disk model (m = 2) --------------------------------------------------
    def disk_coordinate(self, x) -> np.ndarray:
        """Poincare disk coordinate z of slice points (m = 2 only)."""
        if self.m != 2:
            raise ValueError("the disk model is only used for m = 2")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        q = transvection(x)[:, :, 0]
        return (q[:, 1] + 1j * q[:, 2]) / (1 + q[:, 0])

    def disk_frame_derivative(self, x) -> np.ndarray:
        """dz(e_i) for the chart frame at slice points, shape (K, 2) complex."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        G = transvection(x)
        q = G[:, :, 0]
        out = np.empty((x.shape[0], 2), dtype=complex)
        for i in range(2):
            v = G[:, :, i + 1]
            out[:, i] = (v[:, 1] + 1j * v[:, 2]) / (1 + q[:, 0]) - (q[:, 1] + 1j * q[:, 2]) * v[:, 0] / (
                1 + q[:, 0]) ** 2
        return out


def extended_frame(chart: CrossSectionChart, x, r: float) -> Frame:
    """Orthonormal frame ``[n, e_1, ..., e_m]`` on the slice ``M x {r}``."""
    y = np.array([[r, *np.atleast_1d(x)]], dtype=float)
    chart.check_inside(y)
    F = chart.frame_matrix(y)[0]
    ax = chart.basis.axis
    return Frame(HPoint(F[:, 0]), np.array([F[:, a] for a in ax]))


def connection_coefficients(chart: CrossSectionChart, x, r: float) -> ConnectionData:
    y = np.array([[r, *np.atleast_1d(x)]], dtype=float)
    chart.check_inside(y)
    gf = chart.frame_data(y).gamma_frame[0]   # [j, b, a] = <nabla_{f_j} f_a, f_b>
    m = chart.m
    grad_e_n = np.array([gf[i, 1:, 0] for i in range(1, m + 1)])
    normal_part = np.array([[gf[i, 0, j] for j in range(1, m + 1)] for i in range(1, m + 1)])
    grad_n_e = np.array([gf[0, :, i] for i in range(1, m + 1)])
    grad_n_n = gf[0, :, 0].copy()
    christoffel = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                christoffel[i, j, k] = gf[j + 1, k + 1, i + 1]
    return ConnectionData(grad_e_n, normal_part, grad_n_e, grad_n_n, christoffel)


def project_to_core(p: WarpedPoint) -> WarpedPoint:
    """Nearest point on the totally geodesic slice r = 0."""
    return WarpedPoint(tuple(p.x), 0.0)


def shoot_to_core(chart: CrossSectionChart, p: WarpedPoint, rtol: float = 1e-12) -> tuple:
    """Integrate the geodesic leaving ``p`` along ``-sign(r) n`` for time ``|r|``.

    Returns the chart coordinates of the endpoint and the traversed length.
    The ODE is the hyperboloid geodesic equation ``P'' = <P', P'> P``.
    """
    y = p.as_array()[None]
    F = chart.frame_matrix(y)[0]
    n = chart.n
    P0, V0 = F[:, 0], -np.sign(p.r) * F[:, n]
    T = abs(p.r)
    if T == 0:
        return y[0].copy(), 0.0

    def rhs(_, s):
        P, V = s[: n + 1], s[n + 1:]
        vv = -V[0] ** 2 + V[1:] @ V[1:]
        return np.concatenate([V, vv * P])

    sol = solve_ivp(rhs, (0, T), np.concatenate([P0, V0]), rtol=rtol, atol=1e-14, method="DOP853")
    end = sol.y[: n + 1, -1]
    speed = np.sqrt(-V0[0] ** 2 + V0[1:] @ V0[1:])
    return chart.chart_coordinates(end)[0], float(speed * T)
