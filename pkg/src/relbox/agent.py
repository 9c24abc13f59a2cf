"""Policy/value networks for the gridworld.

Both variants share the pipeline: two valid 2x2 convs (12 then 24
kernels, ReLU), coordinate channels appended, a middle section, a
feature-wise max over space, four ReLU fully connected layers, and linear
policy (4 logits) and value (scalar) heads. The relational variant's
middle is the shared-weight attention stack over the n² entities; the
control variant's is a chain of residual blocks of two zero-padded 3x3
convs at the tagged width, so the two expose identical contracts and
differ only in that section (including parameter names: rel/* vs ctrl/*).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxworld.config import InvalidConfig
from .initializers import glorot_uniform, zeros_param
from .relational import (
    AttentionTrace,
    RelationalParams,
    extract_entities,
    grid_coordinates,
    init_relational_params,
    relational_stack,
)
from .rng import Rng, derive_seed
from .tensor import (
    ShapeMismatch,
    Tensor,
    add,
    concat_last_dim,
    conv2d_valid,
    feature_max_pool_over_space,
    linear,
    pad2d,
    relu,
    reshape,
)

RELATIONAL = "relational"
CONTROL = "control"


class NonFiniteLogits(ArithmeticError):
    """Policy logits contain NaN/Inf; sampling refused."""


@dataclass(frozen=True)
class AgentConfig:
    variant: str = RELATIONAL
    conv_channels: tuple[int, int] = (12, 24)
    n_heads: int = 2
    d: int = 64
    n_blocks: int = 2
    control_blocks: int = 4
    mlp_widths: tuple[int, ...] = (256, 256, 256, 256)
    n_actions: int = 4

    def validate(self) -> None:
        if self.variant not in (RELATIONAL, CONTROL):
            raise InvalidConfig(f"unknown variant {self.variant!r}")
        if self.n_actions != 4:
            raise InvalidConfig("n_actions is fixed at 4")
        if len(self.conv_channels) != 2 or min(self.conv_channels) < 1:
            raise InvalidConfig(f"conv_channels must be two positive ints: {self.conv_channels}")
        if len(self.mlp_widths) != 4 or min(self.mlp_widths) < 1:
            raise InvalidConfig(f"mlp_widths must be four positive ints: {self.mlp_widths}")
        if self.n_heads < 1 or self.d < 1 or self.n_blocks < 1 or self.control_blocks < 1:
            raise InvalidConfig("n_heads, d, n_blocks, control_blocks must be >= 1")

    @property
    def entity_width(self) -> int:
        """Channels after the conv stack plus the two coordinate features."""
        return self.conv_channels[1] + 2


@dataclass
class ControlBlockParams:
    c1_w: Tensor
    c1_b: Tensor
    c2_w: Tensor
    c2_b: Tensor

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}c1_w": self.c1_w,
            f"{prefix}c1_b": self.c1_b,
            f"{prefix}c2_w": self.c2_w,
            f"{prefix}c2_b": self.c2_b,
        }

    @staticmethod
    def from_named(prefix: str, store: dict[str, Tensor]) -> "ControlBlockParams":
        return ControlBlockParams(
            c1_w=store[f"{prefix}c1_w"],
            c1_b=store[f"{prefix}c1_b"],
            c2_w=store[f"{prefix}c2_w"],
            c2_b=store[f"{prefix}c2_b"],
        )


@dataclass
class AgentParams:
    conv1_w: Tensor
    conv1_b: Tensor
    conv2_w: Tensor
    conv2_b: Tensor
    rel: RelationalParams | None
    ctrl: tuple[ControlBlockParams, ...] | None
    mlp: tuple[tuple[Tensor, Tensor], ...]
    policy_w: Tensor
    policy_b: Tensor
    value_w: Tensor
    value_b: Tensor

    def named(self) -> dict[str, Tensor]:
        out = {
            "conv1/w": self.conv1_w,
            "conv1/b": self.conv1_b,
            "conv2/w": self.conv2_w,
            "conv2/b": self.conv2_b,
        }
        if self.rel is not None:
            out.update(self.rel.named("rel/"))
        if self.ctrl is not None:
            for i, block in enumerate(self.ctrl):
                out.update(block.named(f"ctrl/block{i}/"))
        for i, (w, b) in enumerate(self.mlp):
            out[f"mlp{i}/w"] = w
            out[f"mlp{i}/b"] = b
        out["policy/w"] = self.policy_w
        out["policy/b"] = self.policy_b
        out["value/w"] = self.value_w
        out["value/b"] = self.value_b
        return out

    @staticmethod
    def from_named(store: dict[str, Tensor], config: AgentConfig) -> "AgentParams":
        rel = None
        ctrl = None
        if config.variant == RELATIONAL:
            rel = RelationalParams.from_named("rel/", store, config.n_heads, config.n_blocks)
        else:
            ctrl = tuple(
                ControlBlockParams.from_named(f"ctrl/block{i}/", store)
                for i in range(config.control_blocks)
            )
        return AgentParams(
            conv1_w=store["conv1/w"],
            conv1_b=store["conv1/b"],
            conv2_w=store["conv2/w"],
            conv2_b=store["conv2/b"],
            rel=rel,
            ctrl=ctrl,
            mlp=tuple(
                (store[f"mlp{i}/w"], store[f"mlp{i}/b"]) for i in range(len(config.mlp_widths))
            ),
            policy_w=store["policy/w"],
            policy_b=store["policy/b"],
            value_w=store["value/w"],
            value_b=store["value/b"],
        )


@dataclass(frozen=True)
class PolicyOutput:
    """Batched policy logits (B, n_actions) and value estimates (B, 1)."""

    logits: Tensor
    value: Tensor

    def logits_np(self) -> np.ndarray:
        return self.logits.data

    def values_np(self) -> np.ndarray:
        return self.value.data[:, 0]


def init_params(
    config: AgentConfig, seed: int, obs_channels: int, dtype=np.float32
) -> AgentParams:
    """Glorot-uniform weights, zero biases, deterministic in seed."""
    config.validate()
    rng = Rng(derive_seed(seed, 0xA6E27))
    c1, c2 = config.conv_channels
    k = config.entity_width
    conv1_w = glorot_uniform(rng, (2, 2, obs_channels, c1), dtype)
    conv2_w = glorot_uniform(rng, (2, 2, c1, c2), dtype)
    rel = None
    ctrl = None
    if config.variant == RELATIONAL:
        rel = init_relational_params(k, config.d, config.n_heads, config.n_blocks, rng, dtype)
    else:
        ctrl = tuple(
            ControlBlockParams(
                c1_w=glorot_uniform(rng, (3, 3, k, k), dtype),
                c1_b=zeros_param(k, dtype),
                c2_w=glorot_uniform(rng, (3, 3, k, k), dtype),
                c2_b=zeros_param(k, dtype),
            )
            for _ in range(config.control_blocks)
        )
    mlp = []
    width_in = k
    for width in config.mlp_widths:
        mlp.append((glorot_uniform(rng, (width_in, width), dtype), zeros_param(width, dtype)))
        width_in = width
    return AgentParams(
        conv1_w=conv1_w,
        conv1_b=zeros_param(c1, dtype),
        conv2_w=conv2_w,
        conv2_b=zeros_param(c2, dtype),
        rel=rel,
        ctrl=ctrl,
        mlp=tuple(mlp),
        policy_w=glorot_uniform(rng, (width_in, config.n_actions), dtype),
        policy_b=zeros_param(config.n_actions, dtype),
        value_w=glorot_uniform(rng, (width_in, 1), dtype),
        value_b=zeros_param(1, dtype),
    )


def _as_batched_obs(obs) -> Tensor:
    t = obs if isinstance(obs, Tensor) else Tensor(obs)
    if len(t.shape) == 3:
        t = reshape(t, (1,) + t.shape)
    if len(t.shape) != 4:
        raise ShapeMismatch(f"observation must be (H, W, C) or (B, H, W, C), got {t.shape}")
    return t


def _append_coord_channels(x: Tensor) -> Tensor:
    b, h, w, _ = x.shape
    if h != w:
        raise ShapeMismatch(f"spatial grid must be square, got {h}x{w}")
    coords = np.broadcast_to(grid_coordinates(h, x.dtype), (b, h, w, 2))
    return concat_last_dim([x, Tensor(coords.copy())])


def _residual_block(x: Tensor, p: ControlBlockParams) -> Tensor:
    h = relu(conv2d_valid(pad2d(x, 1), p.c1_w, p.c1_b))
    h = conv2d_valid(pad2d(h, 1), p.c2_w, p.c2_b)
    return relu(add(x, h))


def agent_forward(
    obs,
    params: AgentParams,
    config: AgentConfig,
    record_traces: bool = False,
    entity_permutation: np.ndarray | None = None,
) -> tuple[PolicyOutput, list[AttentionTrace]]:
    """Full forward pass for either variant; traces are recorded only when
    asked (evaluation/probing) and only exist for the relational variant.

    `entity_permutation` is an evaluation-only test hook that reorders the
    post-conv entity rows (graph is cut there when used).
    """
    x = _as_batched_obs(obs)
    x = relu(conv2d_valid(x, params.conv1_w, params.conv1_b))
    x = relu(conv2d_valid(x, params.conv2_w, params.conv2_b))
    traces: list[AttentionTrace] = []
    if config.variant == RELATIONAL:
        entities = extract_entities(x)
        if entity_permutation is not None:
            entities = Tensor(entities.data[:, entity_permutation, :])
        entities, traces = relational_stack(entities, params.rel, record_traces)
        pooled = feature_max_pool_over_space(entities)
    else:
        if entity_permutation is not None:
            raise ShapeMismatch("entity permutation hook only applies to the relational variant")
        grid = _append_coord_channels(x)
        for block in params.ctrl:
            grid = _residual_block(grid, block)
        b, h, w, k = grid.shape
        pooled = feature_max_pool_over_space(reshape(grid, (b, h * w, k)))
    hidden = pooled
    for w_t, b_t in params.mlp:
        hidden = relu(linear(hidden, w_t, b_t))
    logits = linear(hidden, params.policy_w, params.policy_b)
    value = linear(hidden, params.value_w, params.value_b)
    return PolicyOutput(logits=logits, value=value), traces


def control_forward(obs, params: AgentParams, config: AgentConfig) -> PolicyOutput:
    if config.variant != CONTROL:
        raise InvalidConfig("control_forward requires a control-variant config")
    out, _ = agent_forward(obs, params, config)
    return out


def sample_action(logits, rng: Rng, greedy: bool = False) -> int:
    """Draw an action from softmax(logits); argmax in greedy mode."""
    vec = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    vec = vec.reshape(-1)
    if not np.isfinite(vec).all():
        raise NonFiniteLogits(f"logits not finite: {vec}")
    if greedy:
        return int(np.argmax(vec))
    shifted = vec - vec.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def count_params(params: AgentParams) -> int:
    return sum(int(np.prod(t.shape)) for t in params.named().values())
