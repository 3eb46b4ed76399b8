"""Pure-numpy temporal convolution, the fallback for the compiled kernel.

Both backends honour the same accumulation contract: output entry (k, t) is
built by adding the d*w products in row-major (i, j) order starting from
zero, with the filter bias added last. Each term is one rounded multiply
followed by one rounded add, so the two backends (and the nested-loop test
oracle) produce bit-identical doubles.
"""

import numpy as np


def conv_forward(x, filters, bias):
    d, T = x.shape
    n_filters, _, w = filters.shape
    t_out = T - w + 1
    out = np.zeros((n_filters, t_out), dtype=np.float64)
    for i in range(d):
        for j in range(w):
            out += np.multiply.outer(filters[:, i, j], x[i, j : j + t_out])
    out += bias[:, None]
    return out


def conv_backward(dout, x, filters):
    d, T = x.shape
    n_filters, _, w = filters.shape
    t_out = T - w + 1
    dx = np.zeros_like(x)
    dfilters = np.zeros_like(filters)
    for i in range(d):
        for j in range(w):
            dfilters[:, i, j] = dout @ x[i, j : j + t_out]
            dx[i, j : j + t_out] += filters[:, i, j] @ dout
    dbias = dout.sum(axis=1)
    return dx, dfilters, dbias
