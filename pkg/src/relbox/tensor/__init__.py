"""Minimal dense-tensor library with reverse-mode differentiation."""

from .core import (
    DisconnectedLoss,
    NonFiniteValue,
    ShapeMismatch,
    Tensor,
    add,
    backward,
    concat_last_dim,
    conv2d_valid,
    detach,
    feature_max_pool_over_space,
    layer_norm,
    linear,
    log_softmax_rows,
    matmul,
    mul,
    pad2d,
    reduce_sum,
    relu,
    reshape,
    scale,
    set_finite_checks,
    softmax_rows,
    zero_grads,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .optim import RmsPropConfig, RmsPropState, rmsprop_init, rmsprop_update

__all__ = [
    "DisconnectedLoss",
    "NonFiniteValue",
    "RmsPropConfig",
    "RmsPropState",
    "ShapeMismatch",
    "Tensor",
    "add",
    "backward",
    "concat_last_dim",
    "conv2d_valid",
    "detach",
    "feature_max_pool_over_space",
    "grad_check",
    "layer_norm",
    "linear",
    "load_checkpoint",
    "log_softmax_rows",
    "matmul",
    "mul",
    "pad2d",
    "reduce_sum",
    "relu",
    "reshape",
    "rmsprop_init",
    "rmsprop_update",
    "save_checkpoint",
    "scale",
    "set_finite_checks",
    "softmax_rows",
    "zero_grads",
]
