"""Hot loops with Numba kernels and pure-numpy equivalents.

Set ``HYPRIGID_DISABLE_NUMBA=1`` to force the numpy paths (also used when
numba is not importable). Both paths return identical results.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and os.environ.get("HYPRIGID_DISABLE_NUMBA", "") != "1"

__all__ = ["NUMBA_ENABLED", "kron_sum_coo", "structure_contract"]


def _njit(fn):
    return numba.njit(cache=True)(fn) if NUMBA_ENABLED else fn


@_njit
def _kron_sum_coo_loop(shape, bands, shift, out_rows, out_cols, out_vals):
    # bands[a, i, 0..2]: sub, diagonal and super coefficients of axis a at node i
    dims = len(shape)
    strides = np.ones(dims, dtype=np.int64)
    for a in range(dims - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]
    total = strides[0] * shape[0]
    idx = np.zeros(dims, dtype=np.int64)
    pos = 0
    for row in range(total):
        rem = row
        for a in range(dims):
            idx[a] = rem // strides[a]
            rem -= idx[a] * strides[a]
        # lower neighbours (largest stride first), diagonal, upper neighbours: columns come out sorted
        for a in range(dims):
            i = idx[a]
            if i > 0 and bands[a, i, 0] != 0.0:
                out_rows[pos] = row
                out_cols[pos] = row - strides[a]
                out_vals[pos] = bands[a, i, 0]
                pos += 1
        diag = shift
        for a in range(dims):
            diag += bands[a, idx[a], 1]
        out_rows[pos] = row
        out_cols[pos] = row
        out_vals[pos] = diag
        pos += 1
        for a in range(dims - 1, -1, -1):
            i = idx[a]
            if i < shape[a] - 1 and bands[a, i, 2] != 0.0:
                out_rows[pos] = row
                out_cols[pos] = row + strides[a]
                out_vals[pos] = bands[a, i, 2]
                pos += 1
    return pos


def _kron_sum_coo_numpy(shape, bands, shift):
    import scipy.sparse as sp

    total = int(np.prod(shape))
    acc = sp.identity(total, format="csr") * shift
    for a, N in enumerate(shape):
        b = bands[a, :N]
        T = sp.diags([b[1:, 0], b[:, 1], b[:-1, 2]], [-1, 0, 1], format="csr")
        left = sp.identity(int(np.prod(shape[:a])), format="csr")
        right = sp.identity(int(np.prod(shape[a + 1:])), format="csr")
        acc = acc + sp.kron(sp.kron(left, T), right, format="csr")
    acc.eliminate_zeros()
    coo = acc.tocoo()
    return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data


def kron_sum_coo(shape, bands, shift: float = 0.0):
    """COO triplets of ``shift I + sum_a I (x) T_a (x) I`` for tridiagonal ``T_a``.

    ``bands`` has shape ``(len(shape), max(shape), 3)``; row ``i`` of axis ``a``
    holds ``(T_a[i, i-1], T_a[i, i], T_a[i, i+1])``. Triplets come back sorted
    by (row, col).
    """
    shape = np.asarray(shape, dtype=np.int64)
    bands = np.ascontiguousarray(bands, dtype=float)
    if NUMBA_ENABLED:
        cap = int(np.prod(shape)) * (1 + 2 * len(shape))
        rows = np.empty(cap, dtype=np.int64)
        cols = np.empty(cap, dtype=np.int64)
        vals = np.empty(cap)
        k = _kron_sum_coo_loop(shape, bands, float(shift), rows, cols, vals)
        return rows[:k], cols[:k], vals[:k]
    rows, cols, vals = _kron_sum_coo_numpy(tuple(int(s) for s in shape), bands, float(shift))
    order = np.lexsort((cols, rows))
    return rows[order], cols[order], vals[order]


@_njit
def _contract_loop(c, js, gs, bs, vals, out):
    # structure constants are sparse (about 4% nonzero), so loop over the nonzeros only
    for k in range(c.shape[0]):
        for t in range(js.shape[0]):
            out[k, gs[t], bs[t]] += c[k, js[t]] * vals[t]


def structure_contract(c, S):
    """``sum_j c[..., j] S[j]`` for float coefficient batches."""
    c = np.asarray(c, dtype=float)
    lead = c.shape[:-1]
    if not NUMBA_ENABLED:
        return np.tensordot(c, S, axes=([c.ndim - 1], [0]))
    S = np.asarray(S, dtype=float)
    js, gs, bs = np.nonzero(S)
    flat = np.ascontiguousarray(c.reshape(-1, c.shape[-1]))
    out = np.zeros((flat.shape[0],) + S.shape[1:])
    _contract_loop(flat, js, gs, bs, S[js, gs, bs], out)
    return out.reshape(lead + S.shape[1:])
