"""Dense N-dimensional float tensors used throughout the pipeline.

A Tensor is a thin, immutable-by-convention wrapper around a C-contiguous
numpy array. Production paths run in float32; the gradient-check harness
may carry float64 through the same operations. There is deliberately no
broadcasting: shapes must match exactly, callers reshape explicitly.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when a shape is invalid or operand shapes disagree."""


def validate_shape(dims: Sequence[int]) -> tuple[int, ...]:
    """Check that every extent is a positive integer and rank >= 1."""
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise ShapeError("tensor rank must be >= 1")
    for d in dims:
        if d < 1:
            raise ShapeError(f"every shape extent must be >= 1, got {dims}")
    return dims


def strides_for(shape: Sequence[int]) -> tuple[int, ...]:
    """Row-major element strides for a shape (innermost stride is 1)."""
    shape = validate_shape(shape)
    out = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        out[i] = out[i + 1] * shape[i + 1]
    return tuple(out)


def flat_index(shape: Sequence[int], index: Sequence[int]) -> int:
    """Row-major flat offset of a multi-index."""
    shape = validate_shape(shape)
    if len(index) != len(shape):
        raise ShapeError(f"index rank {len(index)} != shape rank {len(shape)}")
    for i, d in zip(index, shape):
        if not 0 <= i < d:
            raise ShapeError(f"index {tuple(index)} out of bounds for shape {shape}")
    return sum(i * s for i, s in zip(index, strides_for(shape)))


def unflatten_index(shape: Sequence[int], offset: int) -> tuple[int, ...]:
    """Inverse of flat_index."""
    shape = validate_shape(shape)
    total = int(np.prod(shape))
    if not 0 <= offset < total:
        raise ShapeError(f"offset {offset} out of range for shape {shape}")
    out = []
    for s in strides_for(shape):
        out.append(offset // s)
        offset %= s
    return tuple(out)


class Tensor:
    """Dense row-major tensor over 32-bit (or, for verification, 64-bit) reals."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float32)
        self.data = np.ascontiguousarray(data)
        validate_shape(self.data.shape)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def rank(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def tolist(self):
        return self.data.tolist()

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy())

    def reshape(self, dims: Sequence[int]) -> "Tensor":
        dims = validate_shape(dims)
        if int(np.prod(dims)) != self.size:
            raise ShapeError(f"cannot reshape {self.shape} to {dims}")
        return Tensor(self.data.reshape(dims))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"


def tensor_new(shape: Sequence[int], fill: float = 0.0) -> Tensor:
    """A tensor of the given shape with every element equal to fill."""
    dims = validate_shape(shape)
    return Tensor(np.full(dims, fill, dtype=np.float32))


def from_values(values: Iterable, dtype=np.float32) -> Tensor:
    """Build a tensor from nested Python lists or an array-like."""
    return Tensor(np.asarray(values, dtype=dtype))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Standard matrix product of two rank-2 tensors."""
    if a.rank != 2 or b.rank != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} x {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return Tensor(a.data @ b.data)


_ELEMENTWISE_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(a: Tensor, b: Tensor, op: str) -> Tensor:
    """Pointwise add/sub/mul of two tensors with identical shapes."""
    if op not in _ELEMENTWISE_OPS:
        raise ValueError(f"unknown elementwise op {op!r}")
    if a.shape != b.shape:
        raise ShapeError(f"elementwise shapes disagree: {a.shape} vs {b.shape}")
    return Tensor(_ELEMENTWISE_OPS[op](a.data, b.data))
