from .gradcheck import GradCheckReport, grad_check
from .ops import (
    BACKEND,
    affine,
    affine_backward,
    backend_name,
    capped_relu_backward,
    capped_relu_forward,
    clip_gradients,
    conv_over_time,
    conv_over_time_backward,
    gradient_norm,
    max_pool_backward,
    max_pool_over_time,
    softmax,
    tanh_backward,
    tanh_forward,
)

__all__ = [
    "BACKEND",
    "GradCheckReport",
    "affine",
    "affine_backward",
    "backend_name",
    "capped_relu_backward",
    "capped_relu_forward",
    "clip_gradients",
    "conv_over_time",
    "conv_over_time_backward",
    "grad_check",
    "gradient_norm",
    "max_pool_backward",
    "max_pool_over_time",
    "softmax",
    "tanh_backward",
    "tanh_forward",
]
