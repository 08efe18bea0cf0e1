"""
Differentiable dense arrays.

A Value wraps a numpy array and, when it takes part in gradient computation,
remembers the Values it was computed from together with a rule mapping the
output gradient to input gradients. ``backward`` walks that record in reverse
topological order.
"""

from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from udpx.core.exceptions import ShapeError

BackwardRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
ArrayLike = Union[np.ndarray, float, int, Sequence[float]]

_DTYPES = {"float64": np.float64, "float32": np.float32}
_default_dtype = np.float64


def set_default_dtype(name: str) -> None:
    """Select the float width used for new parameters and constants."""
    global _default_dtype
    if name not in _DTYPES:
        raise ValueError(f"Invalid dtype '{name}'. Must be one of: {', '.join(_DTYPES)}")
    _default_dtype = _DTYPES[name]


def get_default_dtype() -> type:
    """Current float dtype."""
    return _default_dtype


class ScatterGrad:
    """
    Sparse gradient contribution: values added at index of a zero array.

    Returned by indexing rules so a small slice of a large input does not
    allocate a dense gradient per use.
    """

    __slots__ = ("index", "values", "basic")

    def __init__(self, index, values: np.ndarray, basic: bool):
        self.index = index
        self.values = values
        self.basic = basic  # plain ints/slices: no repeated positions

    def add_into(self, buffer: np.ndarray) -> None:
        if self.basic:
            buffer[self.index] += self.values
        else:
            np.add.at(buffer, self.index, self.values)


def _accumulate(grads: Dict[int, np.ndarray], owned: Set[int], node: "Value", contribution) -> None:
    key = id(node)
    current = grads.get(key)
    if isinstance(contribution, ScatterGrad):
        if current is None:
            current = np.zeros_like(node.data)
            owned.add(key)
        elif key not in owned:
            current = current.copy()
            owned.add(key)
        contribution.add_into(current)
        grads[key] = current
    elif current is None:
        grads[key] = contribution
    elif key in owned:
        current += contribution
    else:
        grads[key] = current + contribution
        owned.add(key)


class Value:
    """An n-dimensional array taking part in reverse-mode differentiation."""

    def __init__(
        self,
        data: ArrayLike,
        parents: Tuple["Value", ...] = (),
        backward_rule: Optional[BackwardRule] = None,
        name: str = "",
        requires_grad: bool = False,
    ):
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(_default_dtype)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        # constants drop their history
        self._parents = parents if self.requires_grad else ()
        self._backward_rule = backward_rule if self.requires_grad else None

    # -- introspection --------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        """Detached copy of the data."""
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Value(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # -- gradient -------------------------------------------------------------

    def backward(self) -> None:
        """
        Accumulate d(self)/d(leaf) into every leaf that requires a gradient.

        Raises:
            ShapeError: self is not a scalar
        """
        if self.data.size != 1:
            raise ShapeError("backward", self.shape, detail="loss must be a scalar")
        if not self.requires_grad:
            return

        order = self._topological_order()
        grads: Dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        # buffers created here may be updated in place; others can alias
        owned: Set[int] = set()

        for node in reversed(order):
            grad = grads.pop(id(node), None)
            owned.discard(id(node))
            if grad is None:
                continue
            if node.is_leaf:
                node.grad = grad if node.grad is None else node.grad + grad
                continue
            parent_grads = node._backward_rule(grad)
            for parent, parent_grad in zip(node._parents, parent_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                _accumulate(grads, owned, parent, parent_grad)

    def _topological_order(self) -> List["Value"]:
        """Nodes reachable from self, every node after its parents."""
        order: List[Value] = []
        visited = set()
        stack: List[Tuple[Value, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    # -- operators ------------------------------------------------------------

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __neg__(self):
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __getitem__(self, index):
        return ops.getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> "Value":
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Value":
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Value":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    @property
    def T(self) -> "Value":
        return ops.swapaxes(self, -1, -2)


class Parameter(Value):
    """A trainable leaf."""

    def __init__(self, data: ArrayLike, name: str):
        super().__init__(np.array(data, dtype=_default_dtype), name=name, requires_grad=True)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def constant(data: ArrayLike) -> Value:
    """A Value that never receives gradients."""
    return Value(np.asarray(data, dtype=_default_dtype))


from udpx.numkernel import ops  # noqa: E402
