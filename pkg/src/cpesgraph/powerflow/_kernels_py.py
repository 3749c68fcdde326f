"""Vectorized numpy/scipy fallback for the compiled Newton-Raphson kernels."""

import numpy as np
import scipy.sparse as sp


def _matrix(indptr, indices, data):
    n = len(indptr) - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def power_mismatch(indptr, indices, data, v, sbus):
    cur = _matrix(indptr, indices, data) @ v
    return v * np.conj(cur) - sbus, cur


def jacobian_coo(indptr, indices, data, v, cur, pos, m):
    n = len(v)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    cols = np.asarray(indices, dtype=np.int64)
    data = np.asarray(data)
    keep = (pos[rows] >= 0) & (pos[cols] >= 0)
    rows, cols, y = rows[keep], cols[keep], data[keep]
    d_va = -1j * v[rows] * np.conj(y * v[cols])
    d_vm = v[rows] * np.conj(y * v[cols] / np.abs(v[cols]))

    diag = np.flatnonzero(pos >= 0)
    d_va_diag = 1j * v[diag] * np.conj(cur[diag])
    d_vm_diag = np.conj(cur[diag]) * v[diag] / np.abs(v[diag])

    pr, pc, pd = pos[rows], pos[cols], pos[diag]
    out_rows = np.concatenate([pr, pr, m + pr, m + pr, pd, pd, m + pd, m + pd])
    out_cols = np.concatenate([pc, m + pc, pc, m + pc, pd, m + pd, pd, m + pd])
    out_vals = np.concatenate([
        d_va.real, d_vm.real, d_va.imag, d_vm.imag,
        d_va_diag.real, d_vm_diag.real, d_va_diag.imag, d_vm_diag.imag,
    ])
    return out_rows.astype(np.int64), out_cols.astype(np.int64), out_vals
