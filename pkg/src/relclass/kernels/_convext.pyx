# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled temporal-convolution kernels.

Accumulation order is part of the contract (see conv_python): entry (k, t)
sums its d*w terms in row-major (i, j) order, bias last. The innermost loop
runs over t so the compiler can vectorize without reassociating the
per-entry reduction.
"""

import numpy as np


def conv_forward(double[:, ::1] x, double[:, :, ::1] filters, double[::1] bias):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t T = x.shape[1]
    cdef Py_ssize_t n_filters = filters.shape[0]
    cdef Py_ssize_t w = filters.shape[2]
    cdef Py_ssize_t t_out = T - w + 1
    out_arr = np.zeros((n_filters, t_out), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, i, j, t
    cdef double f_kij
    for k in range(n_filters):
        for i in range(d):
            for j in range(w):
                f_kij = filters[k, i, j]
                for t in range(t_out):
                    out[k, t] += f_kij * x[i, t + j]
    for k in range(n_filters):
        for t in range(t_out):
            out[k, t] += bias[k]
    return out_arr


def conv_backward(double[:, ::1] dout, double[:, ::1] x, double[:, :, ::1] filters):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t T = x.shape[1]
    cdef Py_ssize_t n_filters = filters.shape[0]
    cdef Py_ssize_t w = filters.shape[2]
    cdef Py_ssize_t t_out = T - w + 1
    dx_arr = np.zeros((d, T), dtype=np.float64)
    dfilters_arr = np.zeros((n_filters, d, w), dtype=np.float64)
    dbias_arr = np.zeros(n_filters, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, :, ::1] dfilters = dfilters_arr
    cdef double[::1] dbias = dbias_arr
    cdef Py_ssize_t k, i, j, t
    cdef double f_kij, acc
    for k in range(n_filters):
        for i in range(d):
            for j in range(w):
                f_kij = filters[k, i, j]
                acc = 0.0
                for t in range(t_out):
                    acc += dout[k, t] * x[i, t + j]
                    dx[i, t + j] += f_kij * dout[k, t]
                dfilters[k, i, j] = acc
    for k in range(n_filters):
        acc = 0.0
        for t in range(t_out):
            acc += dout[k, t]
        dbias[k] = acc
    return dx_arr, dfilters_arr, dbias_arr
