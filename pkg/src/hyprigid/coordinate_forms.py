"""Exterior calculus on coordinate charts by centered finite differences.

Forms are arrays of shape ``(K, V, n, ..., n)``: ``K`` sample points, a value
axis of size ``V`` (1 for scalar forms, dim g for bundle-valued forms) and one
axis per form slot, stored as fully antisymmetric tensors. Fields are callables
mapping a batch of points ``(K, n)`` to such arrays, so operators compose by
nesting closures.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "StencilError", "partials", "alternate", "apply_on_slots", "exterior_derivative",
    "codifferential", "hodge_laplacian", "measured_order",
]


class StencilError(ValueError):
    """A finite-difference stencil would leave the chart domain."""


def partials(field, y, h: float, domain=None) -> np.ndarray:
    """Second-order centered partial derivatives, shape ``(K, n, ...)``.

    ``domain`` is an optional predicate on stencil points; violating it raises
    :class:`StencilError`.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    K, n = y.shape
    shifts = h * np.eye(n)
    pts = np.concatenate([(y[None] + shifts[:, None]).reshape(-1, n),
                          (y[None] - shifts[:, None]).reshape(-1, n)])
    if domain is not None and not np.all(domain(pts)):
        raise StencilError("finite-difference stencil leaves the chart domain")
    vals = np.asarray(field(pts))
    vals = vals.reshape((2, n, K) + vals.shape[1:])
    diff = (vals[0] - vals[1]) / (2 * h)
    return np.moveaxis(diff, 0, 1)


def alternate(P: np.ndarray, degree: int) -> np.ndarray:
    """Antisymmetrized derivative ``sum_s (-1)^s P[.., i_s, .., i_0 .. ^i_s .. i_k]``.

    ``P`` has shape ``(..., j, V, slots)`` with ``degree`` trailing slot axes
    and the derivative index ``j`` before the value axis.
    """
    T = np.moveaxis(P, -(degree + 2), -(degree + 1))
    out = T.copy()
    for s in range(1, degree + 1):
        term = np.moveaxis(T, -(degree + 1), -(degree + 1) + s)
        out = out - term if s % 2 else out + term
    return out


def apply_on_slots(W: np.ndarray, M: np.ndarray, degree: int) -> np.ndarray:
    """Apply a batched matrix ``M`` (K, n, n) to every form slot of ``W``."""
    for s in range(degree):
        ax = W.ndim - degree + s
        Wm = np.moveaxis(W, ax, -1)
        shape = Wm.shape
        Wm = np.einsum("kab,kpb->kpa", M, Wm.reshape(shape[0], -1, shape[-1])).reshape(shape)
        W = np.moveaxis(Wm, -1, ax)
    return W


def exterior_derivative(field, y, h: float, domain=None) -> np.ndarray:
    W = np.asarray(field(np.atleast_2d(y)))
    degree = W.ndim - 2
    return alternate(partials(field, y, h, domain), degree)


def codifferential(field, y, h: float, metric, gram=None, domain=None) -> np.ndarray:
    """``delta W = -(1/sqrt g) G^{-1} g_lower d_mu(sqrt g G W^{mu ...})``.

    ``metric(y)`` returns the coordinate metric (K, n, n); ``gram(y)`` (optional)
    the fibre metric (K, V, V) on the value axis for bundle-valued forms.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))

    def flux(pts):
        W = np.asarray(field(pts))
        degree = W.ndim - 2
        g = metric(pts)
        up = apply_on_slots(W, np.linalg.inv(g), degree)
        if gram is not None:
            up = np.einsum("kuv,kv...->ku...", gram(pts), up)
        return np.sqrt(np.abs(np.linalg.det(g))).reshape((-1,) + (1,) * (W.ndim - 1)) * up

    P = partials(flux, y, h, domain)
    div = np.einsum("kmvm...->kv...", P)
    degree = div.ndim - 2
    g = metric(y)
    sg = np.sqrt(np.abs(np.linalg.det(g)))
    div = -div / sg.reshape((-1,) + (1,) * (div.ndim - 1))
    if gram is not None:
        div = np.linalg.solve(gram(y), div.reshape(div.shape[0], div.shape[1], -1)).reshape(div.shape)
    return apply_on_slots(div, g, degree)


def hodge_laplacian(field, y, h: float, metric, gram=None, domain=None) -> np.ndarray:
    """``(d delta + delta d) W`` by nested stencils."""
    W0 = np.asarray(field(np.atleast_2d(y)))
    degree = W0.ndim - 2
    out = codifferential(lambda p: exterior_derivative(field, p, h, domain), y, h, metric, gram, domain)
    if degree > 0:
        out = out + exterior_derivative(
            lambda p: codifferential(field, p, h, metric, gram, domain), y, h, domain)
    return out


def measured_order(errors, ratio: float = 2.0) -> float:
    """Observed convergence order from errors at spacings h, h/ratio."""
    e0, e1 = float(errors[0]), float(errors[1])
    if e1 <= 0 or e0 <= 0:
        return float("inf")
    return float(np.log(e0 / e1) / np.log(ratio))
