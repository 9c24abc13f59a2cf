"""Central finite-difference checking of analytic gradients."""

from __future__ import annotations

import numpy as np

from .core import Tensor, backward, zero_grads


def grad_check(f, params, eps: float = 1e-5) -> float:
    """Compare backward() gradients of a scalar-valued thunk against
    central finite differences.

    `f` rebuilds its graph from `params` (float64 leaf Tensors) on every
    call; `params` data is perturbed in place. Returns the max over all
    coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    params = list(params.values() if isinstance(params, dict) else params)
    for p in params:
        if p.data.dtype != np.float64:
            raise ValueError("grad_check requires float64 parameters")
    zero_grads(params)
    loss = f()
    if not isinstance(loss, Tensor):
        raise TypeError("f must return a Tensor")
    backward(loss)
    analytic = [np.array(p.grad) for p in params]

    worst = 0.0
    for p, grads in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = grads.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            f_plus = f().item()
            flat[i] = saved - eps
            f_minus = f().item()
            flat[i] = saved
            numeric = (f_plus - f_minus) / (2.0 * eps)
            err = abs(gflat[i] - numeric) / max(1e-8, abs(gflat[i]) + abs(numeric))
            worst = max(worst, err)
    return worst
