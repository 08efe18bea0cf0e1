"""
Differentiable operations on Values.

Each op computes its forward result with numpy and attaches a rule mapping the
output gradient to one gradient per input. Broadcasting is limited to what the
model code needs: numpy rules for elementwise ops and a shared 2-D right
operand in batched matmul.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from udpx.core.exceptions import ShapeError
from udpx.numkernel.value import ScatterGrad, Value, get_default_dtype

Operand = Union[Value, np.ndarray, float, int]
Axis = Optional[Union[int, Tuple[int, ...]]]


def as_value(x: Operand) -> Value:
    """Wrap arrays and scalars as constants."""
    if isinstance(x, Value):
        return x
    return Value(np.asarray(x, dtype=get_default_dtype()))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum grad down to shape after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Value, b: Value) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


# -- elementwise arithmetic ----------------------------------------------------


def add(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape("add", a, b)

    def rule(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Value(a.data + b.data, (a, b), rule)


def sub(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape("sub", a, b)

    def rule(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Value(a.data - b.data, (a, b), rule)


def mul(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape("mul", a, b)

    def rule(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Value(a.data * b.data, (a, b), rule)


def div(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape("div", a, b)

    def rule(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return Value(a.data / b.data, (a, b), rule)


def scale(a: Value, factor: float) -> Value:
    """Multiply by a fixed Python scalar."""

    def rule(g):
        return (g * factor,)

    return Value(a.data * factor, (a,), rule)


# -- linear algebra and layout -------------------------------------------------


def matmul(a: Operand, b: Operand) -> Value:
    """
    Matrix product over the last two axes.

    Both operands need at least two dimensions. Leading (batch) dimensions
    broadcast, so a 2-D weight can be shared across a batch.
    """
    a, b = as_value(a), as_value(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError("matmul", a.shape, b.shape, detail="batch dimensions") from None

    def rule(g):
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        grad_b = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return Value(a.data @ b.data, (a, b), rule)


def concat(values: Sequence[Operand], axis: int = -1) -> Value:
    """Concatenate along an existing axis."""
    values = [as_value(v) for v in values]
    if not values:
        raise ShapeError("concat", detail="nothing to concatenate")
    ndim = values[0].ndim
    axis = axis % ndim
    for v in values[1:]:
        if v.ndim != ndim or any(
            v.shape[d] != values[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeError("concat", *(x.shape for x in values), detail=f"axis {axis}")

    boundaries = np.cumsum([v.shape[axis] for v in values])[:-1]

    def rule(g):
        return tuple(np.split(g, boundaries, axis=axis))

    return Value(np.concatenate([v.data for v in values], axis=axis), tuple(values), rule)


def stack(values: Sequence[Operand], axis: int = 0) -> Value:
    """Stack equally shaped Values along a new axis."""
    values = [as_value(v) for v in values]
    if not values:
        raise ShapeError("stack", detail="nothing to stack")
    if any(v.shape != values[0].shape for v in values[1:]):
        raise ShapeError("stack", *(v.shape for v in values))
    out = np.stack([v.data for v in values], axis=axis)
    axis = axis % out.ndim

    def rule(g):
        return tuple(np.take(g, index, axis=axis) for index in range(len(values)))

    return Value(out, tuple(values), rule)


def reshape(a: Value, shape: Tuple[int, ...]) -> Value:
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(shape)) from None

    def rule(g):
        return (g.reshape(a.shape),)

    return Value(out, (a,), rule)


def swapaxes(a: Value, axis1: int, axis2: int) -> Value:
    def rule(g):
        return (np.swapaxes(g, axis1, axis2),)

    return Value(np.swapaxes(a.data, axis1, axis2), (a,), rule)


def transpose(a: Value, axes: Optional[Sequence[int]] = None) -> Value:
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))

    def rule(g):
        return (np.transpose(g, inverse),)

    return Value(np.transpose(a.data, axes), (a,), rule)


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(
        isinstance(part, (int, np.integer, slice)) or part is Ellipsis or part is None
        for part in parts
    )


def getitem(a: Value, index) -> Value:
    """Basic or advanced indexing; gradients scatter back into a's shape."""
    try:
        out = a.data[index]
    except IndexError as e:
        raise ShapeError("getitem", a.shape, detail=str(e)) from None
    basic = _is_basic_index(index)

    def rule(g):
        return (ScatterGrad(index, g, basic),)

    return Value(np.array(out, copy=True), (a,), rule)


def embed(table: Value, indices: np.ndarray) -> Value:
    """Row lookup: output shape is indices.shape + (dim,)."""
    indices = np.asarray(indices)
    if table.ndim != 2:
        raise ShapeError("embed", table.shape, indices.shape, detail="table must be 2-D")
    if not np.issubdtype(indices.dtype, np.integer):
        raise ShapeError("embed", table.shape, indices.shape, detail="indices must be integers")
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ShapeError(
            "embed", table.shape, indices.shape, detail="index out of range"
        )

    def rule(g):
        return (ScatterGrad(indices, g, basic=False),)

    return Value(table.data[indices], (table,), rule)


def masked_fill(a: Value, mask: np.ndarray, fill: float) -> Value:
    """Replace entries where mask is true; those entries pass no gradient."""
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, a.shape)
    except ValueError:
        raise ShapeError("masked_fill", a.shape, mask.shape) from None
    keep = ~mask

    def rule(g):
        return (_unbroadcast(g * keep, a.shape),)

    return Value(np.where(mask, fill, a.data).astype(a.data.dtype), (a,), rule)


# -- nonlinearities ------------------------------------------------------------


def tanh(a: Value) -> Value:
    out = np.tanh(a.data)

    def rule(g):
        return (g * (1.0 - out * out),)

    return Value(out, (a,), rule)


def sigmoid(a: Value) -> Value:
    out = 0.5 * (np.tanh(0.5 * a.data) + 1.0)

    def rule(g):
        return (g * out * (1.0 - out),)

    return Value(out, (a,), rule)


def relu(a: Value) -> Value:
    positive = a.data > 0

    def rule(g):
        return (g * positive,)

    return Value(np.where(positive, a.data, 0.0).astype(a.data.dtype), (a,), rule)


def exp(a: Value) -> Value:
    out = np.exp(a.data)

    def rule(g):
        return (g * out,)

    return Value(out, (a,), rule)


def log(a: Value) -> Value:
    with np.errstate(divide="ignore"):
        out = np.log(a.data)

    def rule(g):
        return (g / a.data,)

    return Value(out, (a,), rule)


def softmax(a: Value, axis: int = -1) -> Value:
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def rule(g):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return Value(out, (a,), rule)


def log_softmax(a: Value, axis: int = -1) -> Value:
    """log(softmax(a)); entries at -inf stay at -inf."""
    peak = np.max(a.data, axis=axis, keepdims=True)
    shifted = a.data - peak
    log_norm = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    out = shifted - log_norm
    probs = np.exp(out)

    def rule(g):
        return (g - probs * np.sum(g, axis=axis, keepdims=True),)

    return Value(out, (a,), rule)


# -- reductions ----------------------------------------------------------------


def _expand_reduced(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool):
    if axis is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        axes = (axis,) if isinstance(axis, int) else axis
        for ax in sorted(x % len(shape) for x in axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def sum(a: Value, axis: Axis = None, keepdims: bool = False) -> Value:
    def rule(g):
        return (np.array(_expand_reduced(g, a.shape, axis, keepdims)),)

    return Value(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), rule)


def mean(a: Value, axis: Axis = None, keepdims: bool = False) -> Value:
    if axis is None:
        count = a.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[x] for x in axes]))

    def rule(g):
        return (np.array(_expand_reduced(g, a.shape, axis, keepdims)) / count,)

    return Value(np.mean(a.data, axis=axis, keepdims=keepdims), (a,), rule)


def max(a: Value, axis: int = -1) -> Value:
    """Max over one axis; the gradient goes to the first maximal entry."""
    axis = axis % a.ndim
    winners = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, winners, axis=axis).squeeze(axis)

    def rule(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, winners, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return Value(out, (a,), rule)


# -- regularization ------------------------------------------------------------


def dropout_mask(
    shape: Tuple[int, ...], rate: float, rng: np.random.Generator
) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability rate, survivors 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"Invalid dropout rate '{rate}'. Must be in [0, 1)")
    keep = rng.random(shape) >= rate
    return keep.astype(get_default_dtype()) / (1.0 - rate)


def dropout(a: Value, rate: float, rng: Optional[np.random.Generator], training: bool) -> Value:
    """Identity at inference or rate 0."""
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise ValueError("dropout at training time needs an rng")
    return mul(a, dropout_mask(a.shape, rate, rng))


def linear(x: Value, weight: Value, bias: Optional[Value] = None) -> Value:
    """x @ W + b."""
    out = matmul(x, weight)
    return add(out, bias) if bias is not None else out

