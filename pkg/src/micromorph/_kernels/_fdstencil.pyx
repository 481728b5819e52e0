# cython: boundscheck=False, wraparound=False, cdivision=True
"""Periodic central-difference stencil on (n0, n1, n2, ncomp) arrays."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def diff_axis_periodic(double[:, :, :, ::1] src, int axis, double h):
    """(src[i+1] - src[i-1]) / (2h) along the given grid axis, wrapping periodically."""
    cdef Py_ssize_t n0 = src.shape[0]
    cdef Py_ssize_t n1 = src.shape[1]
    cdef Py_ssize_t n2 = src.shape[2]
    cdef Py_ssize_t nc = src.shape[3]
    out_arr = np.empty((n0, n1, n2, nc), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef double w = 0.5 / h
    cdef Py_ssize_t i, j, k, c, p, m

    if axis == 0:
        for i in range(n0):
            p = i + 1 if i + 1 < n0 else 0
            m = i - 1 if i > 0 else n0 - 1
            for j in range(n1):
                for k in range(n2):
                    for c in range(nc):
                        out[i, j, k, c] = (src[p, j, k, c] - src[m, j, k, c]) * w
    elif axis == 1:
        for i in range(n0):
            for j in range(n1):
                p = j + 1 if j + 1 < n1 else 0
                m = j - 1 if j > 0 else n1 - 1
                for k in range(n2):
                    for c in range(nc):
                        out[i, j, k, c] = (src[i, p, k, c] - src[i, m, k, c]) * w
    elif axis == 2:
        for i in range(n0):
            for j in range(n1):
                for k in range(n2):
                    p = k + 1 if k + 1 < n2 else 0
                    m = k - 1 if k > 0 else n2 - 1
                    for c in range(nc):
                        out[i, j, k, c] = (src[i, j, p, c] - src[i, j, m, c]) * w
    else:
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return out_arr
