"""Reverse-mode autodiff over numpy arrays.

Each op returns a Tensor that remembers its parents and a closure
propagating the output gradient to them. backward() walks that graph once
in reverse topological order, so the recorded structure plays the role of
a gradient tape. Ops cover exactly what the agent architecture needs;
there is no broadcasting beyond documented cases.

Every op checks its result for NaN/Inf (toggle with set_finite_checks) and
raises NonFiniteValue instead of letting a poisoned step propagate.
Training runs in float32; gradient checks build float64 tensors and all
ops preserve the input dtype.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(ValueError):
    """Operands have incompatible shapes."""


class NonFiniteValue(ArithmeticError):
    """An op produced NaN or Inf."""


class DisconnectedLoss(RuntimeError):
    """backward() called on a tensor with no differentiable inputs."""


FINITE_CHECKS = True


def set_finite_checks(enabled: bool) -> None:
    """Globally enable/disable NaN/Inf screening of op outputs."""
    global FINITE_CHECKS
    FINITE_CHECKS = bool(enabled)


def _check_finite(data: np.ndarray, op: str) -> None:
    if FINITE_CHECKS and not np.isfinite(data).all():
        raise NonFiniteValue(f"{op} produced a non-finite value")


class Tensor:
    """A dense array plus the graph edges needed for backward."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data)
        if self.data.dtype not in (np.float32, np.float64):
            self.data = self.data.astype(np.float32)
        # leaves keep an always-present grad buffer so "not on the loss
        # path" reads as an all-zero gradient
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, dtype={self.data.dtype})"


def _result(data: np.ndarray, op: str, parents: tuple, backward_fn) -> Tensor:
    _check_finite(data, op)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = ""
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _accumulate(t: Tensor, g: np.ndarray, own: bool = False) -> None:
    # own=True promises g is freshly allocated and aliases no other live
    # gradient, so the first accumulation may adopt the buffer outright
    if not t.requires_grad:
        return
    if t.grad is None:
        if own and g.dtype == t.data.dtype:
            t.grad = g
        else:
            t.grad = g.astype(t.data.dtype, copy=True)
    else:
        t.grad += g


def zero_grads(tensors) -> None:
    for t in tensors:
        t.grad = np.zeros_like(t.data)


def backward(loss: Tensor) -> None:
    """Backpropagate from a scalar loss through the recorded graph."""
    if loss.data.shape != ():
        raise ShapeMismatch(f"loss must be scalar, got shape {loss.data.shape}")
    if not loss.requires_grad:
        raise DisconnectedLoss("loss does not depend on any differentiable tensor")

    ordered: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            ordered.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(ordered):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------- ops


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"{op}: {a.data.shape} vs {b.data.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")

    def push(g):
        _accumulate(a, g)
        _accumulate(b, g)

    return _result(a.data + b.data, "add", (a, b), push)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    _same_shape(a, b, "mul")

    def push(g):
        _accumulate(a, g * b.data, own=True)
        _accumulate(b, g * a.data, own=True)

    return _result(a.data * b.data, "mul", (a, b), push)


def scale(t: Tensor, s: float) -> Tensor:
    s = float(s)

    def push(g):
        _accumulate(t, g * s, own=True)

    return _result(t.data * s, "scale", (t,), push)


def relu(t: Tensor) -> Tensor:
    # the mask is recomputed lazily so graph-free forwards pay nothing for it
    def push(g):
        _accumulate(t, np.where(t.data > 0, g, 0), own=True)

    return _result(np.maximum(t.data, 0), "relu", (t,), push)


def matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    """2D or batched 3D matrix product; optionally contracts with bᵀ."""
    ad, bd = a.data, b.data
    if ad.ndim not in (2, 3) or bd.ndim != ad.ndim:
        raise ShapeMismatch(f"matmul: ndim {ad.ndim} vs {bd.ndim}")
    if ad.ndim == 3 and ad.shape[0] != bd.shape[0]:
        raise ShapeMismatch(f"matmul: batch {ad.shape[0]} vs {bd.shape[0]}")
    bmat = np.swapaxes(bd, -1, -2) if transpose_b else bd
    if ad.shape[-1] != bmat.shape[-2]:
        raise ShapeMismatch(f"matmul: inner dims {ad.shape} vs {bd.shape}")

    def push(g):
        _accumulate(a, g @ np.swapaxes(bmat, -1, -2), own=True)
        gb = np.swapaxes(ad, -1, -2) @ g
        _accumulate(b, np.swapaxes(gb, -1, -2) if transpose_b else gb, own=True)

    return _result(ad @ bmat, "matmul", (a, b), push)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map rows(x) @ w + b with x: (rows, in), w: (in, out)."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeMismatch(f"linear: x {x.data.shape} w {w.data.shape}")
    out = x.data @ w.data
    if b is not None:
        if b.data.shape != (w.data.shape[1],):
            raise ShapeMismatch(f"linear: bias {b.data.shape} for out {w.data.shape[1]}")
        out += b.data

    def push(g):
        _accumulate(x, g @ w.data.T, own=True)
        _accumulate(w, x.data.T @ g, own=True)
        if b is not None:
            _accumulate(b, g.sum(axis=0), own=True)

    parents = (x, w) if b is None else (x, w, b)
    return _result(out, "linear", parents, push)


def conv2d_valid(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1) -> Tensor:
    """Valid (no padding) 2D convolution on NHWC input.

    x: (B, H, W, Cin), w: (kh, kw, Cin, Cout), b: (Cout,). Accumulates one
    kernel offset at a time, so the result is a fixed-order sum.
    """
    if x.data.ndim != 4 or w.data.ndim != 4 or x.data.shape[3] != w.data.shape[2]:
        raise ShapeMismatch(f"conv2d_valid: x {x.data.shape} w {w.data.shape}")
    if stride < 1:
        raise ShapeMismatch(f"conv2d_valid: stride must be >= 1, got {stride}")
    bsz, h, wd, _ = x.data.shape
    kh, kw, cin, cout = w.data.shape
    if h < kh or wd < kw:
        raise ShapeMismatch(f"conv2d_valid: kernel {kh}x{kw} exceeds input {h}x{wd}")
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    out = np.zeros((bsz, oh, ow, cout), dtype=x.data.dtype)
    for i in range(kh):
        for j in range(kw):
            window = x.data[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :]
            out += window @ w.data[i, j]
    if b is not None:
        if b.data.shape != (cout,):
            raise ShapeMismatch(f"conv2d_valid: bias {b.data.shape} for {cout} kernels")
        out += b.data

    def push(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for i in range(kh):
                for j in range(kw):
                    gx[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += (
                        g @ w.data[i, j].T
                    )
            _accumulate(x, gx, own=True)
        if w.requires_grad:
            gw = np.empty_like(w.data)
            for i in range(kh):
                for j in range(kw):
                    window = x.data[
                        :, i : i + stride * oh : stride, j : j + stride * ow : stride, :
                    ]
                    gw[i, j] = np.tensordot(window, g, axes=([0, 1, 2], [0, 1, 2]))
            _accumulate(w, gw, own=True)
        if b is not None:
            _accumulate(b, g.sum(axis=(0, 1, 2)), own=True)

    parents = (x, w) if b is None else (x, w, b)
    return _result(out, "conv2d_valid", parents, push)


def pad2d(x: Tensor, pad: int) -> Tensor:
    """Zero-pad the two spatial axes of an NHWC tensor by `pad` cells."""
    if x.data.ndim != 4:
        raise ShapeMismatch(f"pad2d: need NHWC input, got {x.data.shape}")
    if pad < 0:
        raise ShapeMismatch(f"pad2d: pad must be >= 0, got {pad}")
    widths = ((0, 0), (pad, pad), (pad, pad), (0, 0))

    def push(g):
        h, wd = x.data.shape[1], x.data.shape[2]
        _accumulate(x, g[:, pad : pad + h, pad : pad + wd, :])

    return _result(np.pad(x.data, widths), "pad2d", (x,), push)


def softmax_rows(t: Tensor) -> Tensor:
    """Row-wise softmax over the last axis, stabilized by max subtraction."""
    p = t.data - t.data.max(axis=-1, keepdims=True)
    np.exp(p, out=p)
    p /= p.sum(axis=-1, keepdims=True)

    def push(g):
        inner = np.einsum("...k,...k->...", g, p)[..., None]
        gx = g - inner
        gx *= p
        _accumulate(t, gx, own=True)

    return _result(p, "softmax_rows", (t,), push)


def log_softmax_rows(t: Tensor) -> Tensor:
    shifted = t.data - t.data.max(axis=-1, keepdims=True)
    lse = np.exp(shifted).sum(axis=-1, keepdims=True)
    np.log(lse, out=lse)
    shifted -= lse
    out = shifted

    def push(g):
        p = np.exp(out)
        p *= g.sum(axis=-1, keepdims=True)
        np.subtract(g, p, out=p)
        _accumulate(t, p, own=True)

    return _result(out, "log_softmax_rows", (t,), push)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    k = x.data.shape[-1]
    if gain.data.shape != (k,) or bias.data.shape != (k,):
        raise ShapeMismatch(
            f"layer_norm: gain {gain.data.shape} bias {bias.data.shape} for width {k}"
        )
    mean = x.data.mean(axis=-1, keepdims=True)
    norm = x.data - mean
    var = np.einsum("...k,...k->...", norm, norm)[..., None] / k
    inv = 1.0 / np.sqrt(var + eps)
    norm *= inv
    out = norm * gain.data
    out += bias.data

    def push(g):
        if x.requires_grad:
            gn = g * gain.data
            # d/dx of (x - mean) * inv with mean/var both functions of x
            gx = norm * (np.einsum("...k,...k->...", gn, norm)[..., None] / k)
            gx += gn.mean(axis=-1, keepdims=True)
            np.subtract(gn, gx, out=gx)
            gx *= inv
            _accumulate(x, gx, own=True)
        axes = tuple(range(x.data.ndim - 1))
        _accumulate(gain, (g * norm).sum(axis=axes), own=True)
        _accumulate(bias, g.sum(axis=axes), own=True)

    return _result(out, "layer_norm", (x, gain, bias), push)


def feature_max_pool_over_space(t: Tensor) -> Tensor:
    """Per-feature max over the entity axis: (B, N, k) -> (B, k) or
    (N, k) -> (k,). Gradient flows to the argmax entries only."""
    if t.data.ndim not in (2, 3):
        raise ShapeMismatch(f"feature_max_pool_over_space: got {t.data.shape}")
    axis = t.data.ndim - 2
    idx = t.data.argmax(axis=axis)
    out = np.take_along_axis(t.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def push(g):
        gx = np.zeros_like(t.data)
        np.put_along_axis(gx, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        _accumulate(t, gx, own=True)

    return _result(out, "feature_max_pool_over_space", (t,), push)


def concat_last_dim(tensors) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeMismatch("concat_last_dim: empty input")
    lead = tensors[0].data.shape[:-1]
    for t in tensors:
        if t.data.shape[:-1] != lead:
            raise ShapeMismatch(
                f"concat_last_dim: leading dims differ: {t.data.shape} vs {lead + ('*',)}"
            )
    widths = [t.data.shape[-1] for t in tensors]
    bounds = np.cumsum([0] + widths)

    def push(g):
        for t, lo, hi in zip(tensors, bounds, bounds[1:]):
            _accumulate(t, g[..., lo:hi])

    return _result(
        np.concatenate([t.data for t in tensors], axis=-1),
        "concat_last_dim",
        tuple(tensors),
        push,
    )


def reduce_sum(t: Tensor, axis: int | None = None) -> Tensor:
    if axis is None:
        def push(g):
            _accumulate(t, np.broadcast_to(g, t.data.shape))

        return _result(t.data.sum(), "reduce_sum", (t,), push)

    def push_axis(g):
        _accumulate(t, np.broadcast_to(np.expand_dims(g, axis), t.data.shape))

    return _result(t.data.sum(axis=axis), "reduce_sum", (t,), push_axis)


def reshape(t: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def push(g):
        _accumulate(t, g.reshape(t.data.shape))

    return _result(t.data.reshape(shape), "reshape", (t,), push)


def detach(t: Tensor) -> Tensor:
    """Cut the graph: same data, no gradient path."""
    return Tensor(t.data)
