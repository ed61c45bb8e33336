"""Dense tensors with reverse-mode automatic differentiation.

Just enough machinery to train and run a small transformer: elementwise
arithmetic with broadcasting, batched matmul, layer norm, softmax,
label-smoothed cross-entropy, dropout, and embedding lookup. Values are
stored in float32 by default (float64 supported throughout); reductions
accumulate in float64 before casting back.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, ShapeError, VocabularyError

# Additive mask value for blocked attention positions. Large enough to zero
# the softmax weight, small enough to stay finite in float32.
MASK_VALUE = -1e9

_grad_enabled = True


class no_grad:
    """Context manager that suppresses graph construction."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A dense array plus an optional gradient and backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, seed: Optional[np.ndarray] = None):
        """Reverse-mode sweep from this tensor.

        Without an explicit seed the tensor must be scalar; the seed is 1.
        """
        if seed is None:
            if self.data.size != 1:
                raise ShapeError(
                    f"backward() without a seed requires a scalar, got shape {self.shape}"
                )
            seed = np.ones_like(self.data)
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.accumulate_grad(np.asarray(seed, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # Interior activations are not reused; free their grads.
                if not node.requires_grad:
                    node.grad = None

    # Operator sugar -------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(other, mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def _as_tensor(x, like_dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=like_dtype if like_dtype is not None else np.float32)
    return Tensor(arr)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad


def _make(out_data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(out_data)
    if _grad_enabled and any(p.requires_grad or p._parents for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
    return out


# Elementwise ------------------------------------------------------------


def add(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like_dtype=a.dtype)
    out_data = a.data + b.data

    def backward(g):
        a.accumulate_grad(_unbroadcast(g, a.data.shape))
        b.accumulate_grad(_unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like_dtype=a.dtype)
    out_data = a.data * b.data

    def backward(g):
        a.accumulate_grad(_unbroadcast(g * b.data, a.data.shape))
        b.accumulate_grad(_unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with broadcasting over leading batch dimensions."""
    a = _as_tensor(a)
    b = _as_tensor(b, like_dtype=a.dtype)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul requires rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} vs {b.shape}")
    out_data = a.data @ b.data

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        a.accumulate_grad(_unbroadcast(ga, a.data.shape))
        b.accumulate_grad(_unbroadcast(gb, b.data.shape))

    return _make(out_data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    out_data = np.maximum(x.data, 0)

    def backward(g):
        x.accumulate_grad(g * (x.data > 0))

    return _make(out_data, (x,), backward)


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """tanh-approximated GELU."""
    x = _as_tensor(x)
    xd = x.data
    inner = _GELU_C * (xd + 0.044715 * xd**3)
    t = np.tanh(inner)
    out_data = 0.5 * xd * (1.0 + t)

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * xd**2)
        dt = (1.0 - t**2) * dinner
        x.accumulate_grad(g * (0.5 * (1.0 + t) + 0.5 * xd * dt))

    return _make(out_data, (x,), backward)


def dropout(x: Tensor, p: float, rng: np.random.Generator, training: bool = True) -> Tensor:
    """Inverted dropout; identity when not training or p == 0."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    x = _as_tensor(x)
    if not training or p == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    out_data = x.data * mask

    def backward(g):
        x.accumulate_grad(g * mask)

    return _make(out_data, (x,), backward)


# Shape manipulation ------------------------------------------------------


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    x = _as_tensor(x)
    out_data = x.data.reshape(shape)

    def backward(g):
        x.accumulate_grad(g.reshape(x.data.shape))

    return _make(out_data, (x,), backward)


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    x = _as_tensor(x)
    out_data = np.transpose(x.data, axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        x.accumulate_grad(np.transpose(g, inverse))

    return _make(out_data, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            t.accumulate_grad(g[tuple(idx)])

    return _make(out_data, tuple(tensors), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: ids of any shape -> ids.shape + (emb_dim,)."""
    table = _as_tensor(table)
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise VocabularyError(
            f"embedding id out of range [0, {table.shape[0]}): "
            f"min {int(ids.min())}, max {int(ids.max())}"
        )
    out_data = table.data[ids]

    def backward(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids.ravel(), g.reshape(-1, table.shape[-1]))

    return _make(out_data, (table,), backward)


# Reductions (float64 accumulation) ---------------------------------------


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    out_data = x.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64).astype(x.dtype)

    def backward(g):
        if axis is None:
            x.accumulate_grad(np.broadcast_to(g, x.data.shape).astype(x.dtype))
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            x.accumulate_grad(np.broadcast_to(gg, x.data.shape).astype(x.dtype))

    return _make(out_data, (x,), backward)


def tmean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / n)


# Normalization and softmax ------------------------------------------------


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    x = _as_tensor(x)
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeError(
            f"layer_norm affine shapes {gain.shape}/{bias.shape} do not match "
            f"feature dimension of {x.shape}"
        )
    xd = x.data.astype(np.float64)
    mu = xd.mean(axis=-1, keepdims=True)
    var = ((xd - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xd - mu) * inv).astype(x.dtype)
    out_data = xhat * gain.data + bias.data

    def backward(g):
        d = x.data.shape[-1]
        dxhat = (g * gain.data).astype(np.float64)
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        dx = (inv * (dxhat - m1 - xhat * m2)).astype(x.dtype)
        x.accumulate_grad(dx)
        axes = tuple(range(g.ndim - 1))
        gain.accumulate_grad((g * xhat).sum(axis=axes, dtype=np.float64).astype(x.dtype))
        bias.accumulate_grad(g.sum(axis=axes, dtype=np.float64).astype(x.dtype))

    return _make(out_data, (x, gain, bias), backward)


def _softmax_data(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    denom = e.sum(axis=-1, keepdims=True, dtype=np.float64)
    return (e / denom).astype(x.dtype)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis."""
    x = _as_tensor(x)
    y = _softmax_data(x.data)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True, dtype=np.float64).astype(x.dtype)
        x.accumulate_grad(y * (g - dot))

    return _make(y, (x,), backward)


def log_softmax(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True, dtype=np.float64)).astype(x.dtype)
    logp = shifted - lse

    def backward(g):
        p = np.exp(logp)
        gsum = g.sum(axis=-1, keepdims=True, dtype=np.float64).astype(x.dtype)
        x.accumulate_grad(g - p * gsum)

    return _make(logp, (x,), backward)


def softmax_cross_entropy(
    logits: Tensor,
    targets: np.ndarray,
    label_smoothing: float = 0.0,
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    """Mean label-smoothed cross-entropy over (unmasked) positions.

    logits: (..., vocab); targets: integer array of the leading shape;
    mask: optional 0/1 array of the leading shape selecting positions that
    contribute to the mean. The smoothed target distribution is
    (1 - eps) * onehot + eps / vocab.
    """
    logits = _as_tensor(logits)
    vocab = logits.shape[-1]
    targets = np.asarray(targets)
    if targets.shape != logits.shape[:-1]:
        raise ShapeError(
            f"targets shape {targets.shape} does not match logits positions {logits.shape[:-1]}"
        )
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise VocabularyError(
            f"target id out of range [0, {vocab}): min {int(targets.min())}, "
            f"max {int(targets.max())}"
        )
    if not 0.0 <= label_smoothing < 1.0:
        raise ConfigError(f"label_smoothing must be in [0, 1), got {label_smoothing}")

    flat_logits = logits.data.reshape(-1, vocab)
    flat_targets = targets.reshape(-1)
    if mask is None:
        flat_mask = np.ones(flat_targets.shape[0], dtype=np.float64)
    else:
        flat_mask = np.asarray(mask, dtype=np.float64).reshape(-1)
        if flat_mask.shape[0] != flat_targets.shape[0]:
            raise ShapeError(
                f"mask shape {np.asarray(mask).shape} does not match targets {targets.shape}"
            )
    denom = flat_mask.sum()
    if denom == 0:
        raise ShapeError("cross-entropy mask selects no positions")

    shifted = flat_logits - flat_logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True, dtype=np.float64))
    logp = shifted.astype(np.float64) - lse
    eps = label_smoothing
    rows = np.arange(flat_targets.shape[0])
    nll = -logp[rows, flat_targets]
    uniform = -logp.mean(axis=-1)
    per_pos = (1.0 - eps) * nll + eps * uniform
    value = (per_pos * flat_mask).sum() / denom
    out_data = np.asarray(value, dtype=logits.dtype)

    def backward(g):
        p = np.exp(logp)
        grad = p.copy()
        grad[rows, flat_targets] -= (1.0 - eps)
        grad -= eps / vocab
        grad *= (flat_mask / denom)[:, None]
        logits.accumulate_grad((float(g) * grad).astype(logits.dtype).reshape(logits.shape))

    return _make(out_data, (logits,), backward)


# Attention ----------------------------------------------------------------


def attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    mask: Optional[np.ndarray] = None,
    dropout_p: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    training: bool = False,
) -> Tensor:
    """Scaled dot-product attention over the last two axes.

    q: (..., T, d), k/v: (..., S, d); mask is an additive ndarray broadcastable
    to (..., T, S) with MASK_VALUE at blocked positions.
    """
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"attention head dims disagree: {q.shape} vs {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention key/value lengths disagree: {k.shape} vs {v.shape}")
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = mul(matmul(q, transpose(k, _swap_last(k.ndim))), scale)
    if mask is not None:
        scores = add(scores, Tensor(np.asarray(mask, dtype=scores.dtype)))
    probs = softmax(scores)
    if dropout_p > 0.0 and training:
        probs = dropout(probs, dropout_p, rng, training=True)
    return matmul(probs, v)


def attention_probs(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, mask: Optional[np.ndarray] = None
) -> np.ndarray:
    """Forward-only attention weights, for probing mask behaviour in tests."""
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = (q @ np.swapaxes(k, -1, -2)) * scale
    if mask is not None:
        scores = scores + mask
    return _softmax_data(scores)


def _swap_last(ndim: int) -> tuple[int, ...]:
    axes = list(range(ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return tuple(axes)


def causal_mask(t: int, dtype=np.float32) -> np.ndarray:
    """(1, 1, t, t) additive mask blocking attention to future positions."""
    m = np.triu(np.full((t, t), MASK_VALUE, dtype=dtype), k=1)
    return m[None, None, :, :]


def padding_mask(lengths: np.ndarray, max_len: int, dtype=np.float32) -> np.ndarray:
    """(B, 1, 1, max_len) additive mask blocking attention to padded keys."""
    cols = np.arange(max_len)[None, :]
    blocked = cols >= np.asarray(lengths)[:, None]
    m = np.where(blocked, np.asarray(MASK_VALUE, dtype=dtype), np.asarray(0, dtype=dtype))
    return m[:, None, None, :].astype(dtype)
