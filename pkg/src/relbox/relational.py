"""Entities and multi-head dot-product attention over them.

An entity is one spatial cell's feature vector with its (x, y) grid
coordinates appended. Per head, entities are projected to queries, keys,
and values (each layer-normalized), compared all-to-all by scaled dot
product, and mixed: A = softmax(QKᵀ/√d)·V. Head outputs are concatenated,
passed through a two-layer MLP back to entity width, summed with the
input, and layer-normalized. Stacked blocks reuse one parameter set, so
depth buys interaction order, not parameters.

Every function takes either a single entity matrix (N, k) or a batch
(B, N, k) and preserves that arrangement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .boxworld.graphs import GEM
from .initializers import glorot_uniform, ones_param, zeros_param
from .rng import Rng
from .tensor import (
    ShapeMismatch,
    Tensor,
    add,
    concat_last_dim,
    layer_norm,
    linear,
    matmul,
    relu,
    reshape,
    scale,
    softmax_rows,
)

PROBE_CSV_COLUMNS = (
    "block",
    "head",
    "source_cell",
    "source_object",
    "target_cell",
    "target_object",
    "weight",
)


class ResolutionMismatch(ValueError):
    """Entity grid does not map onto the level's observation cells."""


@dataclass
class HeadParams:
    """One attention head: k×d projections with per-head q/k/v layer norms.

    The key norm learns a gain only. A bias added to every key shifts each
    query's scores by a per-row constant, which the softmax removes, so a
    learned key bias would receive exactly zero gradient forever.
    """

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    q_gain: Tensor
    q_bias: Tensor
    k_gain: Tensor
    v_gain: Tensor
    v_bias: Tensor

    @property
    def d(self) -> int:
        return self.w_q.shape[1]

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}w_q": self.w_q,
            f"{prefix}w_k": self.w_k,
            f"{prefix}w_v": self.w_v,
            f"{prefix}q_gain": self.q_gain,
            f"{prefix}q_bias": self.q_bias,
            f"{prefix}k_gain": self.k_gain,
            f"{prefix}v_gain": self.v_gain,
            f"{prefix}v_bias": self.v_bias,
        }

    @staticmethod
    def from_named(prefix: str, store: dict[str, Tensor]) -> "HeadParams":
        return HeadParams(
            w_q=store[f"{prefix}w_q"],
            w_k=store[f"{prefix}w_k"],
            w_v=store[f"{prefix}w_v"],
            q_gain=store[f"{prefix}q_gain"],
            q_bias=store[f"{prefix}q_bias"],
            k_gain=store[f"{prefix}k_gain"],
            v_gain=store[f"{prefix}v_gain"],
            v_bias=store[f"{prefix}v_bias"],
        )


@dataclass
class RelationalParams:
    """Shared-weight attention stack: heads + the post-concat MLP f and the
    output layer norm. The MLP hidden and output widths equal the entity
    width k so the residual sum types check."""

    heads: tuple[HeadParams, ...]
    f1_w: Tensor
    f1_b: Tensor
    f2_w: Tensor
    f2_b: Tensor
    out_gain: Tensor
    out_bias: Tensor
    n_blocks: int

    @property
    def k(self) -> int:
        return self.heads[0].w_q.shape[0]

    def named(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, head in enumerate(self.heads):
            out.update(head.named(f"{prefix}head{i}/"))
        out[f"{prefix}f1_w"] = self.f1_w
        out[f"{prefix}f1_b"] = self.f1_b
        out[f"{prefix}f2_w"] = self.f2_w
        out[f"{prefix}f2_b"] = self.f2_b
        out[f"{prefix}out_gain"] = self.out_gain
        out[f"{prefix}out_bias"] = self.out_bias
        return out

    @staticmethod
    def from_named(
        prefix: str, store: dict[str, Tensor], n_heads: int, n_blocks: int
    ) -> "RelationalParams":
        return RelationalParams(
            heads=tuple(
                HeadParams.from_named(f"{prefix}head{i}/", store) for i in range(n_heads)
            ),
            f1_w=store[f"{prefix}f1_w"],
            f1_b=store[f"{prefix}f1_b"],
            f2_w=store[f"{prefix}f2_w"],
            f2_b=store[f"{prefix}f2_b"],
            out_gain=store[f"{prefix}out_gain"],
            out_bias=store[f"{prefix}out_bias"],
            n_blocks=n_blocks,
        )


@dataclass(frozen=True)
class AttentionTrace:
    """Recorded attention of one (block, head): weights W row-normalized,
    saliencies S the scaled pre-softmax scores with W = softmax(S)."""

    block: int
    head: int
    weights: np.ndarray
    saliencies: np.ndarray


def init_relational_params(
    k: int, d: int, n_heads: int, n_blocks: int, rng: Rng, dtype=np.float32
) -> RelationalParams:
    heads = tuple(
        HeadParams(
            w_q=glorot_uniform(rng, (k, d), dtype),
            w_k=glorot_uniform(rng, (k, d), dtype),
            w_v=glorot_uniform(rng, (k, d), dtype),
            q_gain=ones_param(d, dtype),
            q_bias=zeros_param(d, dtype),
            k_gain=ones_param(d, dtype),
            v_gain=ones_param(d, dtype),
            v_bias=zeros_param(d, dtype),
        )
        for _ in range(n_heads)
    )
    return RelationalParams(
        heads=heads,
        f1_w=glorot_uniform(rng, (n_heads * d, k), dtype),
        f1_b=zeros_param(k, dtype),
        f2_w=glorot_uniform(rng, (k, k), dtype),
        f2_b=zeros_param(k, dtype),
        out_gain=ones_param(k, dtype),
        out_bias=zeros_param(k, dtype),
        n_blocks=n_blocks,
    )


def grid_coordinates(n: int, dtype=np.float32) -> np.ndarray:
    """(n, n, 2) array of per-cell [x, y], evenly spaced in [-1, 1]."""
    line = np.linspace(-1.0, 1.0, n, dtype=dtype) if n > 1 else np.array([-1.0], dtype=dtype)
    x = np.broadcast_to(line[None, :], (n, n))
    y = np.broadcast_to(line[:, None], (n, n))
    return np.stack([x, y], axis=-1)


def extract_entities(feature_maps: Tensor) -> Tensor:
    """(n, n, c) or (B, n, n, c) features -> (N, c+2) or (B, N, c+2) with
    row i*n+j holding cell (i, j)'s features plus [x_j, y_i]."""
    shape = feature_maps.shape
    if len(shape) not in (3, 4):
        raise ShapeMismatch(f"extract_entities: got {shape}")
    n, n2, c = shape[-3], shape[-2], shape[-1]
    if n != n2:
        raise ShapeMismatch(f"extract_entities: grid must be square, got {n}x{n2}")
    coords = grid_coordinates(n, feature_maps.dtype).reshape(n * n, 2)
    if len(shape) == 4:
        batch = shape[0]
        flat = reshape(feature_maps, (batch, n * n, c))
        coords = np.broadcast_to(coords, (batch, n * n, 2))
    else:
        flat = reshape(feature_maps, (n * n, c))
    return concat_last_dim([flat, Tensor(coords.copy())])


def _lift(E: Tensor) -> tuple[Tensor, bool]:
    if len(E.shape) == 2:
        return reshape(E, (1,) + E.shape), True
    if len(E.shape) == 3:
        return E, False
    raise ShapeMismatch(f"entity tensor must be (N, k) or (B, N, k), got {E.shape}")


def _project(E2d: Tensor, w: Tensor, gain: Tensor, bias: Tensor, bnk) -> Tensor:
    return reshape(layer_norm(linear(E2d, w), gain, bias), bnk)


def mhdpa_head(
    E: Tensor, p: HeadParams, record_trace: bool = True
) -> tuple[Tensor, AttentionTrace | None]:
    """One attention head over entity rows; returns (A, optional trace)."""
    E, squeezed = _lift(E)
    b, n, k = E.shape
    if p.w_q.shape[0] != k:
        raise ShapeMismatch(f"mhdpa_head: entities width {k}, projections take {p.w_q.shape[0]}")
    d = p.d
    E2d = reshape(E, (b * n, k))
    q = _project(E2d, p.w_q, p.q_gain, p.q_bias, (b, n, d))
    key_bias = Tensor(np.zeros(d, dtype=p.k_gain.dtype))
    key = _project(E2d, p.w_k, p.k_gain, key_bias, (b, n, d))
    v = _project(E2d, p.w_v, p.v_gain, p.v_bias, (b, n, d))
    scores = scale(matmul(q, key, transpose_b=True), 1.0 / math.sqrt(d))
    weights = softmax_rows(scores)
    attended = matmul(weights, v)
    trace = None
    if record_trace:
        w_np, s_np = weights.data, scores.data
        if squeezed:
            w_np, s_np = w_np[0], s_np[0]
        trace = AttentionTrace(block=0, head=0, weights=w_np, saliencies=s_np)
    if squeezed:
        attended = reshape(attended, (n, d))
    return attended, trace


def _apply_block(
    E: Tensor, p: RelationalParams, record_traces: bool, block: int
) -> tuple[Tensor, list[AttentionTrace]]:
    E3, squeezed = _lift(E)
    b, n, k = E3.shape
    traces: list[AttentionTrace] = []
    heads_out = []
    for h, head in enumerate(p.heads):
        a, trace = mhdpa_head(E3, head, record_trace=record_traces)
        heads_out.append(a)
        if trace is not None:
            traces.append(replace(trace, block=block, head=h))
    cat = reshape(concat_last_dim(heads_out), (b * n, len(p.heads) * p.heads[0].d))
    f = linear(relu(linear(cat, p.f1_w, p.f1_b)), p.f2_w, p.f2_b)
    out = layer_norm(add(E3, reshape(f, (b, n, k))), p.out_gain, p.out_bias)
    if squeezed:
        out = reshape(out, (n, k))
    return out, traces


def attention_block(E: Tensor, p: RelationalParams) -> Tensor:
    """One MHDPA block: Ẽ = LN(E + f(concat of head outputs))."""
    out, _ = _apply_block(E, p, record_traces=False, block=0)
    return out


def relational_stack(
    E: Tensor, p: RelationalParams, record_traces: bool = False
) -> tuple[Tensor, list[AttentionTrace]]:
    """Apply the block n_blocks times with the same (shared) parameters."""
    if p.n_blocks < 1:
        raise ShapeMismatch(f"n_blocks must be >= 1, got {p.n_blocks}")
    traces: list[AttentionTrace] = []
    for block in range(p.n_blocks):
        E, block_traces = _apply_block(E, p, record_traces, block)
        traces.extend(block_traces)
    return E, traces


def entity_index_for_cell(cell, room_size: int, grid: int) -> int:
    """Entity row whose receptive field is centered on an observation cell.

    Two valid 2x2 convs shrink n to n-2 and shift centers by one, so cell
    (r, c) lands on entity (r-1, c-1), clamped at the borders.
    """
    er = min(max(cell[0] - 1, 0), grid - 1)
    ec = min(max(cell[1] - 1, 0), grid - 1)
    return er * grid + ec


def probe_attention(trace: AttentionTrace, level) -> list[dict]:
    """Object-level view of one trace: for every pair of object-bearing
    cells, the attention weight from source entity to target entity."""
    weights = trace.weights
    if weights.ndim == 3:
        if weights.shape[0] != 1:
            raise ResolutionMismatch("probe expects a single observation's trace")
        weights = weights[0]
    n_entities = weights.shape[0]
    grid = math.isqrt(n_entities)
    room = level.config.room_size
    if grid * grid != n_entities or grid != room - 2:
        raise ResolutionMismatch(
            f"trace has {n_entities} entities; a {room}x{room} observation yields "
            f"{(room - 2) ** 2}"
        )
    objects = [(level.agent_start, "agent"), (level.key_pos, f"key:{level.key_color}")]
    for box in level.boxes:
        content = "gem" if box.content_color == GEM else f"key:{box.content_color}"
        objects.append((box.content_cell, content))
        objects.append((box.lock_cell, f"lock:{box.lock_color}"))
    rows = []
    for src_cell, src_label in objects:
        src = entity_index_for_cell(src_cell, room, grid)
        for tgt_cell, tgt_label in objects:
            tgt = entity_index_for_cell(tgt_cell, room, grid)
            rows.append(
                {
                    "block": trace.block,
                    "head": trace.head,
                    "source_cell": f"{src_cell[0]},{src_cell[1]}",
                    "source_object": src_label,
                    "target_cell": f"{tgt_cell[0]},{tgt_cell[1]}",
                    "target_object": tgt_label,
                    "weight": float(weights[src, tgt]),
                }
            )
    return rows


def write_probe_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=PROBE_CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
