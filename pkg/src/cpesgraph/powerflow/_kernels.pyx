# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Newton-Raphson kernels over a CSR bus admittance matrix.

Same contract as ``_kernels_py``; selected at import when the extension is built.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef extern from "complex.h" nogil:
    double complex conj(double complex)
    double cabs(double complex)


def power_mismatch(const int[::1] indptr, const int[::1] indices, const double complex[::1] data,
                   const double complex[::1] v, const double complex[::1] sbus):
    """Return ``(mis, i)`` with ``i = Y v`` and ``mis = v * conj(i) - sbus``."""
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t row, k
    cdef double complex acc
    mis_arr = np.empty(n, dtype=np.complex128)
    cur_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] mis = mis_arr
    cdef double complex[::1] cur = cur_arr
    with nogil:
        for row in range(n):
            acc = 0
            for k in range(indptr[row], indptr[row + 1]):
                acc = acc + data[k] * v[indices[k]]
            cur[row] = acc
            mis[row] = v[row] * conj(acc) - sbus[row]
    return mis_arr, cur_arr


def jacobian_coo(const int[::1] indptr, const int[::1] indices, const double complex[::1] data,
                 const double complex[::1] v, const double complex[::1] cur,
                 const long[::1] pos, long m):
    """Polar Jacobian (all non-slack buses are PQ) as COO triplets.

    ``pos[i]`` is the state index of bus ``i`` or -1 for a slack bus; ``m`` is
    the number of non-slack buses. Duplicate coordinates must be summed.
    """
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t nnz = indptr[n]
    cdef Py_ssize_t cap = 4 * (nnz + n)
    rows_arr = np.empty(cap, dtype=np.int64)
    cols_arr = np.empty(cap, dtype=np.int64)
    vals_arr = np.empty(cap, dtype=np.float64)
    cdef long[::1] rows = rows_arr
    cdef long[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i, k, col
    cdef long pi, pk
    cdef double complex d_va, d_vm, vnorm
    with nogil:
        for i in range(n):
            pi = pos[i]
            if pi < 0:
                continue
            for k in range(indptr[i], indptr[i + 1]):
                col = indices[k]
                pk = pos[col]
                if pk < 0:
                    continue
                d_va = -1j * v[i] * conj(data[k] * v[col])
                d_vm = v[i] * conj(data[k] * v[col] / cabs(v[col]))
                rows[count] = pi; cols[count] = pk; vals[count] = d_va.real; count += 1
                rows[count] = pi; cols[count] = m + pk; vals[count] = d_vm.real; count += 1
                rows[count] = m + pi; cols[count] = pk; vals[count] = d_va.imag; count += 1
                rows[count] = m + pi; cols[count] = m + pk; vals[count] = d_vm.imag; count += 1
            d_va = 1j * v[i] * conj(cur[i])
            vnorm = v[i] / cabs(v[i])
            d_vm = conj(cur[i]) * vnorm
            rows[count] = pi; cols[count] = pi; vals[count] = d_va.real; count += 1
            rows[count] = pi; cols[count] = m + pi; vals[count] = d_vm.real; count += 1
            rows[count] = m + pi; cols[count] = pi; vals[count] = d_va.imag; count += 1
            rows[count] = m + pi; cols[count] = m + pi; vals[count] = d_vm.imag; count += 1
    return rows_arr[:count], cols_arr[:count], vals_arr[:count]
