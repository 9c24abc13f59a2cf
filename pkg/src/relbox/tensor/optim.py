"""RMSprop with zero momentum.

The update is functional: it returns fresh parameter tensors and
accumulator state, so a learner can hand the previous dict to actors as an
immutable snapshot.

    v <- decay * v + (1 - decay) * g^2
    p <- p - lr * g / (sqrt(v) + eps)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ShapeMismatch, Tensor

RmsPropState = dict  # param name -> second-moment accumulator array


@dataclass(frozen=True)
class RmsPropConfig:
    learning_rate: float = 2e-4
    momentum: float = 0.0
    epsilon: float = 0.1
    decay: float = 0.99

    def validate(self) -> None:
        # lr 0 is legal (a frozen-parameter step, used by tests)
        if self.learning_rate < 0 or self.epsilon <= 0 or self.decay <= 0:
            raise ValueError("learning_rate must be >= 0; epsilon, decay positive")
        if self.momentum != 0.0:
            raise ValueError("momentum must be 0; no momentum buffer is kept")


def rmsprop_init(params: dict[str, Tensor]) -> RmsPropState:
    return {name: np.zeros_like(p.data) for name, p in params.items()}


def rmsprop_update(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: RmsPropState,
    config: RmsPropConfig,
) -> tuple[dict[str, Tensor], RmsPropState]:
    config.validate()
    new_params: dict[str, Tensor] = {}
    new_state: RmsPropState = {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.data.shape:
            raise ShapeMismatch(f"{name}: grad {g.shape} vs param {p.data.shape}")
        v = state[name] * config.decay + (1.0 - config.decay) * (g * g)
        stepped = p.data - config.learning_rate * g / (np.sqrt(v) + config.epsilon)
        new_params[name] = Tensor(stepped.astype(p.data.dtype), requires_grad=True, name=name)
        new_state[name] = v
    return new_params, new_state
