"""Layer math: forward and backward passes, loss, and optimizers.

Everything operates on NHWC tensors. The convolution is a same-padded
3x3 cross-correlation implemented as im2col plus one matrix product;
its backward pass is exact (col2im scatter-add). Functions preserve the
input dtype so the gradient-check harness can run them at float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .tensor import ShapeError, Tensor


class NumericError(ArithmeticError):
    """Raised when a computation encounters non-finite values."""


@dataclass
class Conv2dLayer:
    """3x3 same-padded convolution parameters: filters [K,3,3,C_in], bias [K]."""

    filters: Tensor
    bias: Tensor

    def __post_init__(self):
        k = self.filters.shape
        if len(k) != 4 or k[1] != 3 or k[2] != 3:
            raise ShapeError(f"filters must have shape [K,3,3,C_in], got {k}")
        if self.bias.shape != (k[0],):
            raise ShapeError(f"bias must have shape [{k[0]}], got {self.bias.shape}")

    @property
    def out_channels(self) -> int:
        return self.filters.shape[0]

    @property
    def in_channels(self) -> int:
        return self.filters.shape[3]


@dataclass
class DenseLayer:
    """Affine map parameters: weights [in, out], bias [out]."""

    weights: Tensor
    bias: Tensor

    def __post_init__(self):
        if self.weights.rank != 2:
            raise ShapeError(f"weights must be rank-2, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[1],):
            raise ShapeError(
                f"bias must have shape [{self.weights.shape[1]}], got {self.bias.shape}"
            )


@dataclass(frozen=True)
class DropoutSpec:
    rate: float

    def __post_init__(self):
        if not 0 <= self.rate < 1:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


def _check_image_batch(x: Tensor) -> tuple[int, int, int, int]:
    if x.rank != 4:
        raise ShapeError(f"expected a [B,H,W,C] tensor, got {x.shape}")
    return x.shape


# Below this many input channels a single patch-matrix product wins; above
# it, nine per-tap products avoid the large patch matrix and its scattered
# writes. Both compute the identical cross-correlation.
_PATCH_MATRIX_MAX_C = 8


def _im2col(x: np.ndarray) -> np.ndarray:
    """[B,H,W,C] -> [B*H*W, 9*C] patch matrix for a same-padded 3x3 window."""
    b, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((b, h, w, 9 * c), dtype=x.dtype)
    i = 0
    for dy in range(3):
        for dx in range(3):
            cols[..., i * c : (i + 1) * c] = xp[:, dy : dy + h, dx : dx + w, :]
            i += 1
    return cols.reshape(b * h * w, 9 * c)


def conv2d_forward(x: Tensor, layer: Conv2dLayer) -> Tensor:
    """Same-padded 3x3 cross-correlation plus bias; spatial dims preserved."""
    b, h, w, c = _check_image_batch(x)
    if c != layer.in_channels:
        raise ShapeError(
            f"input has {c} channels but layer expects {layer.in_channels}"
        )
    k = layer.out_channels
    dtype = x.data.dtype
    if c <= _PATCH_MATRIX_MAX_C:
        wmat = layer.filters.data.transpose(1, 2, 3, 0).reshape(9 * c, k)
        y = _im2col(x.data) @ np.ascontiguousarray(wmat, dtype=dtype)
    else:
        xp = np.pad(x.data, ((0, 0), (1, 1), (1, 1), (0, 0)))
        y = np.zeros((b * h * w, k), dtype=dtype)
        tmp = np.empty_like(y)
        for dy in range(3):
            for dx in range(3):
                tap = np.ascontiguousarray(xp[:, dy : dy + h, dx : dx + w, :])
                wt = np.ascontiguousarray(layer.filters.data[:, dy, dx, :].T, dtype=dtype)
                np.matmul(tap.reshape(b * h * w, c), wt, out=tmp)
                y += tmp
    y += layer.bias.data
    return Tensor(y.reshape(b, h, w, k))


def conv2d_backward(x: Tensor, layer: Conv2dLayer,
                    upstream: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Exact gradients of conv2d_forward w.r.t. input, filters, and bias."""
    b, h, w, c = _check_image_batch(x)
    k = layer.out_channels
    if upstream.shape != (b, h, w, k):
        raise ShapeError(
            f"upstream shape {upstream.shape} does not match output ({b},{h},{w},{k})"
        )
    dtype = x.data.dtype
    up = upstream.data.reshape(b * h * w, k)
    grad_b = upstream.data.sum(axis=(0, 1, 2))

    if c <= _PATCH_MATRIX_MAX_C:
        cols = _im2col(x.data)
        grad_w = (cols.T @ up).reshape(3, 3, c, k).transpose(3, 0, 1, 2)
        wmat = layer.filters.data.transpose(1, 2, 3, 0).reshape(9 * c, k)
        gcols = (up @ np.ascontiguousarray(wmat, dtype=dtype).T).reshape(b, h, w, 9 * c)
        gxp = np.zeros((b, h + 2, w + 2, c), dtype=dtype)
        i = 0
        for dy in range(3):
            for dx in range(3):
                gxp[:, dy : dy + h, dx : dx + w, :] += gcols[..., i * c : (i + 1) * c]
                i += 1
        grad_x = gxp[:, 1 : h + 1, 1 : w + 1, :]
        return (Tensor(np.ascontiguousarray(grad_x)),
                Tensor(np.ascontiguousarray(grad_w)), Tensor(grad_b))

    xp = np.pad(x.data, ((0, 0), (1, 1), (1, 1), (0, 0)))
    grad_w = np.empty((k, 3, 3, c), dtype=dtype)
    gxp = np.zeros((b, h + 2, w + 2, c), dtype=dtype)
    for dy in range(3):
        for dx in range(3):
            tap = np.ascontiguousarray(xp[:, dy : dy + h, dx : dx + w, :])
            grad_w[:, dy, dx, :] = up.T @ tap.reshape(b * h * w, c)
            wt = np.ascontiguousarray(layer.filters.data[:, dy, dx, :], dtype=dtype)
            gxp[:, dy : dy + h, dx : dx + w, :] += (up @ wt).reshape(b, h, w, c)
    grad_x = gxp[:, 1 : h + 1, 1 : w + 1, :]
    return Tensor(np.ascontiguousarray(grad_x)), Tensor(grad_w), Tensor(grad_b)


def maxpool2x2_forward(x: Tensor) -> tuple[Tensor, np.ndarray]:
    """Non-overlapping 2x2 max pool; ties go to the first window element.

    Window positions are numbered 0..3 in row-major order; the >= choices
    below make every tie resolve to the lowest index.
    """
    b, h, w, c = _check_image_batch(x)
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even spatial dims, got {h}x{w}")
    d = x.data
    p0 = d[:, 0::2, 0::2, :]
    p1 = d[:, 0::2, 1::2, :]
    p2 = d[:, 1::2, 0::2, :]
    p3 = d[:, 1::2, 1::2, :]
    top_first = p0 >= p1
    top = np.where(top_first, p0, p1)
    bot_first = p2 >= p3
    bot = np.where(bot_first, p2, p3)
    use_top = top >= bot
    y = np.where(use_top, top, bot)
    argmax = np.where(
        use_top,
        np.where(top_first, 0, 1),
        np.where(bot_first, 2, 3),
    ).astype(np.int8)
    return Tensor(y), argmax


def maxpool2x2_backward(argmax: np.ndarray, upstream: Tensor) -> Tensor:
    """Route upstream gradient to each window's argmax position."""
    b, h2, w2, c = upstream.shape
    if argmax.shape != (b, h2, w2, c):
        raise ShapeError(
            f"argmax shape {argmax.shape} does not match upstream {upstream.shape}"
        )
    up = upstream.data
    grad = np.zeros((b, h2 * 2, w2 * 2, c), dtype=up.dtype)
    grad[:, 0::2, 0::2, :] = np.where(argmax == 0, up, 0)
    grad[:, 0::2, 1::2, :] = np.where(argmax == 1, up, 0)
    grad[:, 1::2, 0::2, :] = np.where(argmax == 2, up, 0)
    grad[:, 1::2, 1::2, :] = np.where(argmax == 3, up, 0)
    return Tensor(grad)


def dense_forward(x: Tensor, layer: DenseLayer) -> Tensor:
    if x.rank != 2 or x.shape[1] != layer.weights.shape[0]:
        raise ShapeError(
            f"dense expects [B,{layer.weights.shape[0]}] input, got {x.shape}"
        )
    return Tensor(x.data @ layer.weights.data + layer.bias.data)


def dense_backward(x: Tensor, layer: DenseLayer,
                   upstream: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    if upstream.shape != (x.shape[0], layer.weights.shape[1]):
        raise ShapeError(f"upstream shape {upstream.shape} mismatches dense output")
    grad_w = x.data.T @ upstream.data
    grad_b = upstream.data.sum(axis=0)
    grad_x = upstream.data @ layer.weights.data.T
    return Tensor(grad_x), Tensor(grad_w), Tensor(grad_b)


def relu_forward(x: Tensor) -> Tensor:
    return Tensor(np.maximum(x.data, 0))


def relu_backward(x: Tensor, upstream: Tensor) -> Tensor:
    if x.shape != upstream.shape:
        raise ShapeError(f"relu shapes disagree: {x.shape} vs {upstream.shape}")
    return Tensor(upstream.data * (x.data > 0))


def flatten_forward(x: Tensor) -> Tensor:
    b = x.shape[0]
    return Tensor(x.data.reshape(b, -1))


def flatten_backward(upstream: Tensor, input_shape: Sequence[int]) -> Tensor:
    return Tensor(upstream.data.reshape(input_shape))


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax with max-subtraction for stability."""
    if logits.rank != 2:
        raise ShapeError(f"softmax expects [B,K] logits, got {logits.shape}")
    z = logits.data
    if not np.isfinite(z).all():
        raise NumericError("softmax received non-finite logits")
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return Tensor(e / e.sum(axis=1, keepdims=True))


def _check_one_hot(one_hot: Tensor, shape: tuple[int, ...]) -> None:
    y = one_hot.data
    if one_hot.shape != shape:
        raise ShapeError(f"one-hot shape {one_hot.shape} mismatches probs {shape}")
    if not (np.isin(y, (0.0, 1.0)).all() and (y.sum(axis=1) == 1.0).all()):
        raise ValueError("labels must be exact one-hot rows")


def cross_entropy(probs: Tensor, one_hot: Tensor) -> float:
    """Mean negative log-probability of the true class (clamped at 1e-12)."""
    _check_one_hot(one_hot, probs.shape)
    p_true = (probs.data * one_hot.data).sum(axis=1)
    return float(-np.mean(np.log(np.maximum(p_true, 1e-12))))


def softmax_cross_entropy_backward(probs: Tensor, one_hot: Tensor) -> Tensor:
    """Gradient of mean cross-entropy w.r.t. the softmax logits."""
    _check_one_hot(one_hot, probs.shape)
    b = probs.shape[0]
    return Tensor((probs.data - one_hot.data) / b)


def dropout_forward(x: Tensor, spec: DropoutSpec, mode: Literal["train", "infer"],
                    rng: Optional[np.random.Generator] = None) -> tuple[Tensor, np.ndarray]:
    """Inverted dropout: train-mode survivors are scaled by 1/(1-rate).

    The returned mask already carries the survivor scale, so backward is a
    plain elementwise product with it. Inference is the identity.
    """
    if mode == "infer" or spec.rate == 0.0:
        return Tensor(x.data.copy()), np.ones(x.shape, dtype=x.data.dtype)
    if rng is None:
        raise ValueError("train-mode dropout requires an rng")
    keep = (rng.random(x.shape) >= spec.rate).astype(x.data.dtype)
    mask = keep / np.asarray(1.0 - spec.rate, dtype=x.data.dtype)
    return Tensor(x.data * mask), mask


def dropout_backward(mask: np.ndarray, upstream: Tensor) -> Tensor:
    return Tensor(upstream.data * mask)


OptimizerKind = Literal["sgd", "adam"]


@dataclass
class OptimizerState:
    """Parameter-update state; adam keeps bias-corrected moment estimates."""

    kind: OptimizerKind
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("adam betas must lie in (0, 1)")

    @classmethod
    def create(cls, kind: OptimizerKind, learning_rate: float,
               params: Sequence[np.ndarray]) -> "OptimizerState":
        state = cls(kind=kind, learning_rate=learning_rate)
        if kind == "adam":
            state.m = [np.zeros_like(p) for p in params]
            state.v = [np.zeros_like(p) for p in params]
        elif kind != "sgd":
            raise ValueError(f"unknown optimizer kind {kind!r}")
        return state

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
             names: Optional[Sequence[str]] = None) -> None:
        """Update parameters in place; the one mutation point in the stack."""
        if len(params) != len(grads):
            raise ShapeError("parameter/gradient lists differ in length")
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise ShapeError(f"parameter {i} shape {p.shape} != grad {g.shape}")
            if not np.isfinite(g).all():
                name = names[i] if names else f"parameter[{i}]"
                raise NumericError(f"non-finite gradient for {name}")

        self.step_count += 1
        lr = self.learning_rate
        if self.kind == "sgd":
            for p, g in zip(params, grads):
                p -= (lr * g).astype(p.dtype, copy=False)
            return

        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            update = lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
            p -= update.astype(p.dtype, copy=False)
