"""Parameter initialization: Glorot-uniform weights, zero biases, unit
layer-norm gains, all drawn from the package PRNG for seed determinism."""

from __future__ import annotations

import math

import numpy as np

from .rng import Rng
from .tensor import Tensor


def glorot_uniform(rng: Rng, shape: tuple[int, ...], dtype=np.float32) -> Tensor:
    """Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).

    Matrices use (in, out); conv kernels (kh, kw, cin, cout) use the
    receptive-field fans kh*kw*cin and kh*kw*cout.
    """
    if len(shape) == 2:
        fan_in, fan_out = shape
    elif len(shape) == 4:
        kh, kw, cin, cout = shape
        fan_in, fan_out = kh * kw * cin, kh * kw * cout
    else:
        raise ValueError(f"glorot_uniform expects a matrix or conv kernel, got {shape}")
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    size = int(np.prod(shape))
    flat = np.array([rng.uniform(-limit, limit) for _ in range(size)], dtype=dtype)
    return Tensor(flat.reshape(shape), requires_grad=True)


def zeros_param(shape, dtype=np.float32) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def ones_param(shape, dtype=np.float32) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=True)
