"""Hot kernels for the Lindblad right-hand side.

Two interchangeable backends evaluate

    L(rho) = -i (K rho - rho K^dag) + sum_k c_k rho c_k^dag,
    K = H - (i/2) sum_k c_k^dag c_k

* ``numba``: compiled loops over CSR copies of ``K`` and the collapse
  operators.  Tavis-Cummings and Dicke generators have a handful of
  nonzeros per row, so this is O(nnz * dim) instead of O(dim^3).
* ``numpy``: dense BLAS matrix products.

The backend is chosen at import time.  Set ``SROTTO_NUMBA=0`` to force the
numpy path; it is also used automatically when numba is not importable.
"""

import os

import numpy as np

_FLAG = os.environ.get("SROTTO_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKEND = "numba" if (HAVE_NUMBA and _WANT_NUMBA) else "numpy"


def to_csr(mat):
    """Dense square/rectangular complex matrix -> (data, indices, indptr)."""
    mat = np.asarray(mat, dtype=np.complex128)
    rows, cols = np.nonzero(mat)
    data = np.ascontiguousarray(mat[rows, cols])
    indptr = np.zeros(mat.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=mat.shape[0]), out=indptr[1:])
    return data, cols.astype(np.int64), indptr


def stack_csr(mats, dim):
    """Stack operators vertically into one CSR block of ``len(mats)*dim`` rows."""
    if not mats:
        return (np.zeros(0, np.complex128), np.zeros(0, np.int64),
                np.zeros(1, np.int64))
    return to_csr(np.vstack([np.asarray(m, dtype=np.complex128) for m in mats]))


def rhs_numpy(k_dense, c_dense, rho, hermitian=False):
    if hermitian:
        # L(rho) = A + A^dag with A = -i K rho + (1/2) sum c rho c^dag
        half = -1j * (k_dense @ rho)
        for c in c_dense:
            half += 0.5 * (c @ rho @ c.conj().T)
        return half + half.conj().T
    out = -1j * (k_dense @ rho)
    out += 1j * (rho @ k_dense.conj().T)
    for c in c_dense:
        out += c @ rho @ c.conj().T
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _rhs_numba(kd, ki, kp, cd, ci, cp, n_ops, rho, out, hermitian):
        # Fused row-major sweep:
        #   out[i,j] = -i (K rho)[i,j] + i (rho K^dag)[i,j]
        #              + sum_ops sum_{k in c_i, l in c_j} c_ik rho[k,l] conj(c_jl)
        # hermitian=True computes j >= i only and mirrors (valid for rho = rho^dag).
        dim = rho.shape[0]
        for i in range(dim):
            j0 = i if hermitian else 0
            for j in range(j0, dim):
                out[i, j] = 0.0
            for p in range(kp[i], kp[i + 1]):
                v = -1j * kd[p]
                row = rho[ki[p]]
                for j in range(j0, dim):
                    out[i, j] += v * row[j]
            for j in range(j0, dim):
                acc = 0.0j
                for p in range(kp[j], kp[j + 1]):
                    acc += rho[i, ki[p]] * np.conj(kd[p])
                out[i, j] += 1j * acc
            for op in range(n_ops):
                base = op * dim
                for p in range(cp[base + i], cp[base + i + 1]):
                    v = cd[p]
                    row = rho[ci[p]]
                    for j in range(j0, dim):
                        acc = 0.0j
                        for q in range(cp[base + j], cp[base + j + 1]):
                            acc += row[ci[q]] * np.conj(cd[q])
                        out[i, j] += v * acc
        if hermitian:
            for i in range(dim):
                out[i, i] = out[i, i].real
                for j in range(i + 1, dim):
                    out[j, i] = np.conj(out[i, j])

    def rhs_numba(k_csr, c_csr, n_ops, rho, hermitian=False):
        rho = np.ascontiguousarray(rho, dtype=np.complex128)
        out = np.empty_like(rho)
        _rhs_numba(*k_csr, *c_csr, n_ops, rho, out, hermitian)
        return out

else:  # pragma: no cover
    rhs_numba = None
