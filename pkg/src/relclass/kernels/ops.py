"""Deterministic numeric kernels with analytic gradients.

All math runs in float64. Tensors are plain numpy arrays. The temporal
convolution dispatches to the compiled extension when it is importable, or
to the pure-numpy implementation otherwise; both follow the same
fixed-accumulation-order contract and return bit-identical values. Set
RELCLASS_KERNELS=python|c to force a backend.
"""

import math
import os

import numpy as np

from . import conv_python

_requested = os.environ.get("RELCLASS_KERNELS", "auto")
if _requested not in ("auto", "c", "python"):
    raise ValueError(f"RELCLASS_KERNELS must be auto, c or python; got {_requested!r}")

_conv_impl = conv_python
BACKEND = "python"
if _requested in ("auto", "c"):
    try:
        from . import _convext

        _conv_impl = _convext
        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise ImportError(
                "RELCLASS_KERNELS=c but the compiled extension is not built; "
                "run pip install -e . --no-build-isolation"
            ) from None


def backend_name() -> str:
    return BACKEND


def affine(W, x, b=None):
    """y = W @ x (+ b)."""
    W = np.asarray(W)
    x = np.asarray(x)
    if W.shape[1] != x.shape[0]:
        raise ValueError(f"affine shape mismatch: {W.shape} vs {x.shape}")
    y = W @ x
    if b is not None:
        if b.shape != y.shape:
            raise ValueError(f"bias shape {b.shape} does not match output {y.shape}")
        y = y + b
    return y


def affine_backward(dy, W, x):
    """Gradients (dW, dx, db) of y = W @ x + b given dy."""
    dW = np.multiply.outer(dy, x)
    dx = W.T @ dy
    db = dy.copy()
    return dW, dx, db


def tanh_forward(x):
    return np.tanh(x)


def tanh_backward(dy, y):
    # y is the forward output: d tanh = 1 - tanh^2
    return dy * (1.0 - y * y)


def capped_relu_forward(x, cap):
    """min(max(x, 0), cap) elementwise."""
    if cap <= 0:
        raise ValueError("cap must be positive")
    return np.minimum(np.maximum(x, 0.0), cap)


def capped_relu_backward(dy, x, cap):
    # subgradient 0 at both kinks: pass-through strictly inside (0, cap)
    mask = (x > 0.0) & (x < cap)
    return dy * mask


def conv_over_time(x, filters, bias):
    """Valid temporal convolution: entry (k, t) is the d x w patch starting
    at column t times filter k, plus filter k's bias.

    x: (d, T); filters: (n_filters, d, w); bias: (n_filters,).
    Output: (n_filters, T - w + 1). No implicit padding: encoders pad.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    filters = np.ascontiguousarray(filters, dtype=np.float64)
    bias = np.ascontiguousarray(bias, dtype=np.float64)
    d, T = x.shape
    n_filters, d_f, w = filters.shape
    if d_f != d:
        raise ValueError(f"filter depth {d_f} does not match input depth {d}")
    if bias.shape != (n_filters,):
        raise ValueError("bias shape does not match filter count")
    if T < w:
        raise ValueError(f"input has {T} columns, narrower than window {w}")
    return _conv_impl.conv_forward(x, filters, bias)


def conv_over_time_backward(dout, x, filters):
    x = np.ascontiguousarray(x, dtype=np.float64)
    filters = np.ascontiguousarray(filters, dtype=np.float64)
    dout = np.ascontiguousarray(dout, dtype=np.float64)
    return _conv_impl.conv_backward(dout, x, filters)


def max_pool_over_time(feature_map):
    """(per-filter maxima, argmax indices); ties go to the lowest time index."""
    feature_map = np.asarray(feature_map)
    if feature_map.ndim != 2 or feature_map.shape[1] == 0:
        raise ValueError("feature map must be 2-d with a non-empty time axis")
    argmax = np.argmax(feature_map, axis=1)
    maxima = feature_map[np.arange(feature_map.shape[0]), argmax]
    return maxima, argmax


def max_pool_backward(dy, argmax, t_len):
    """Route dy only to the argmax positions."""
    dmap = np.zeros((dy.shape[0], t_len), dtype=np.float64)
    dmap[np.arange(dy.shape[0]), argmax] = dy
    return dmap


def softmax(scores):
    """Probabilities with max-subtraction for overflow safety."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("softmax requires finite scores")
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def gradient_norm(grads) -> float:
    """Global L2 norm over a gradient dict; sparse entries are {row: vec}."""
    total = 0.0
    for value in grads.values():
        if isinstance(value, dict):
            for vec in value.values():
                total += float(np.sum(np.asarray(vec) ** 2))
        else:
            total += float(np.sum(np.asarray(value) ** 2))
    return math.sqrt(total)


def clip_gradients(grads, threshold):
    """Scale all gradients by threshold/norm when the global L2 norm exceeds
    the threshold; otherwise return the input unchanged."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    norm = gradient_norm(grads)
    if norm <= threshold:
        return grads
    scale = threshold / norm
    clipped = {}
    for name, value in grads.items():
        if isinstance(value, dict):
            clipped[name] = {row: vec * scale for row, vec in value.items()}
        else:
            clipped[name] = value * scale
    return clipped
