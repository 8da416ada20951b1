from .rng import Rng
from .tensor import (
    Tape,
    Tensor,
    DimensionError,
    NonFiniteError,
    no_grad,
    tensor,
    zeros,
    backward,
    zero_grads,
    check_finite,
    add,
    sub,
    mul,
    neg,
    matmul,
    relu,
    sigmoid,
    tanh,
    exp,
    sqrt,
    clamp,
    tsum,
    tmean,
    reshape,
    transpose,
    concat,
    narrow,
    softmax,
    layer_norm,
)
from .conv import conv2d, roi_align, roi_diagnostics, reset_roi_diagnostics
from .optim import Adam
from .gradcheck import finite_diff_check, NonDeterministicError

__all__ = [
    "Rng",
    "Tape",
    "Tensor",
    "DimensionError",
    "NonFiniteError",
    "NonDeterministicError",
    "no_grad",
    "tensor",
    "zeros",
    "backward",
    "zero_grads",
    "check_finite",
    "add",
    "sub",
    "mul",
    "neg",
    "matmul",
    "relu",
    "sigmoid",
    "tanh",
    "exp",
    "sqrt",
    "clamp",
    "tsum",
    "tmean",
    "reshape",
    "transpose",
    "concat",
    "narrow",
    "softmax",
    "layer_norm",
    "conv2d",
    "roi_align",
    "roi_diagnostics",
    "reset_roi_diagnostics",
    "Adam",
    "finite_diff_check",
]
