"""
Dense float64 tensors with reverse-mode automatic differentiation.

The graph is built while the forward pass runs (define-by-run): every
operation on a tensor that requires a gradient records its inputs and a
backward rule mapping the output gradient to one gradient per input.
backward() walks the recorded graph in reverse topological order, visiting
each node once and summing gradients over every path.

Operations accept a leading batch dimension so one mini-batch is one graph;
broadcasting is limited to what the network needs (bias rows and weight
matrices shared across the batch).
"""

from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.utils.errors import IndexLookupError, ShapeError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]
BackwardRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_grad_enabled = True


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording the graph (inference)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    """
    n-dimensional float64 array with an optional gradient slot.

    Leaves created with ``requires_grad=True`` are parameters: backward()
    accumulates into their ``grad`` until it is cleared.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None) -> None:
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._rule: Optional[BackwardRule] = None
        self._op = ""

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        parents: Tuple["Tensor", ...],
        rule: BackwardRule,
        op: str,
    ) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        out.requires_grad = _grad_enabled and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._rule = rule
        else:
            out._parents = ()
            out._rule = None
        out._op = op
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._rule is None

    def item(self) -> float:
        """Python float of a single-element tensor."""
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Copy of the values."""
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        """Same values, no graph linkage, no gradient."""
        return Tensor(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar
    def __add__(self, other: "TensorLike") -> "Tensor":
        return add(self, other)

    def __radd__(self, other: "TensorLike") -> "Tensor":
        return add(as_tensor(other), self)

    def __sub__(self, other: "TensorLike") -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: "TensorLike") -> "Tensor":
        return sub(as_tensor(other), self)

    def __mul__(self, other: "TensorLike") -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: "TensorLike") -> "Tensor":
        return mul(as_tensor(other), self)

    def __truediv__(self, other: float) -> "Tensor":
        return mul(self, 1.0 / float(other))

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


TensorLike = Union[Tensor, ArrayLike]


def as_tensor(x: TensorLike) -> Tensor:
    """Wrap constants; tensors pass through unchanged."""
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from e


# Elementwise arithmetic

def add(a: TensorLike, b: TensorLike) -> Tensor:
    """Elementwise sum with bias-style broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def rule(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(a.data + b.data, (a, b), rule, "add")


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    """Elementwise difference."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def rule(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(a.data - b.data, (a, b), rule, "sub")


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    """Elementwise product."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def rule(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._from_op(a.data * b.data, (a, b), rule, "mul")


def neg(x: Tensor) -> Tensor:
    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (-g,)

    return Tensor._from_op(-x.data, (x,), rule, "neg")


def square(x: Tensor) -> Tensor:
    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (2.0 * x.data * g,)

    return Tensor._from_op(x.data * x.data, (x,), rule, "square")


def abs_(x: Tensor) -> Tensor:
    """|x|; the subgradient at exactly zero is 0."""
    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.sign(x.data) * g,)

    return Tensor._from_op(np.abs(x.data), (x,), rule, "abs")


def relu(x: Tensor) -> Tensor:
    """max(0, x); gradient passes only where x > 0."""
    mask = x.data > 0

    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g * mask,)

    return Tensor._from_op(np.where(mask, x.data, 0.0), (x,), rule, "relu")


# Reductions and shape manipulation

def sum_(x: Tensor) -> Tensor:
    """Sum of all elements as a 0-d tensor."""
    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor._from_op(np.array(x.data.sum()), (x,), rule, "sum")


def mean(x: Tensor) -> Tensor:
    """Mean of all elements as a 0-d tensor."""
    n = max(x.size, 1)

    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.broadcast_to(g / n, x.shape).copy(),)

    return Tensor._from_op(np.array(x.data.mean()), (x,), rule, "mean")


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        data = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"cannot reshape {x.shape} into {shape}") from e

    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g.reshape(x.shape),)

    return Tensor._from_op(data, (x,), rule, "reshape")


def transpose_last(x: Tensor) -> Tensor:
    """Swap the last two axes."""
    if x.ndim < 2:
        raise ShapeError(f"transpose needs at least 2 dims, shape is {x.shape}")

    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.swapaxes(g, -1, -2),)

    return Tensor._from_op(np.swapaxes(x.data, -1, -2).copy(), (x,), rule, "transpose")


def concat(xs: Sequence[Tensor], batched: bool = False) -> Tensor:
    """
    Concatenate along the last axis.

    By default every input is a single row (1, n_i) and a multi-row operand is
    a ShapeError. With ``batched=True`` the inputs may carry any leading
    dimensions as long as they agree, so one call joins a whole mini-batch.
    """
    if not xs:
        raise ShapeError("concat needs at least one tensor")
    xs = [as_tensor(x) for x in xs]
    if not batched and any(x.ndim != 2 or x.shape[0] != 1 for x in xs):
        raise ShapeError(f"concat: expected single rows, got {[t.shape for t in xs]}")
    lead = xs[0].shape[:-1]
    for x in xs:
        if x.ndim < 1 or x.shape[:-1] != lead:
            raise ShapeError(
                f"concat: leading dims must agree, got {[t.shape for t in xs]}"
            )
    widths = [x.shape[-1] for x in xs]
    cuts = np.cumsum(widths)[:-1]

    def rule(g: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(np.split(g, cuts, axis=-1))

    return Tensor._from_op(np.concatenate([x.data for x in xs], axis=-1), tuple(xs), rule, "concat")


# Linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes.

    A 2-D right operand is shared across any leading batch dimensions of the
    left operand; its gradient is summed over them.
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are not aligned")
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul: batch dims of {a.shape} and {b.shape} differ")

    def rule(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._from_op(np.matmul(a.data, b.data), (a, b), rule, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x . W + bias for x of width a, W of shape (a, b), bias of width b."""
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")
    out = matmul(x, weight)
    if bias is None:
        return out
    if bias.shape[-1] != weight.shape[1] or bias.size != weight.shape[1]:
        raise ShapeError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
    return add(out, bias)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis, max-shifted for stability."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return Tensor._from_op(s, (x,), rule, "softmax")


def embedding(table: Tensor, indices: np.ndarray) -> Tensor:
    """
    Row lookup, equivalent to one-hot(indices) . table.

    Raises:
        IndexLookupError: If an index is outside the table
    """
    idx = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be 2-D, shape is {table.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        bad = idx[(idx < 0) | (idx >= table.shape[0])][0]
        raise IndexLookupError(
            f"index {int(bad)} outside vocabulary of size {table.shape[0]}"
            + (f" ({table.name})" if table.name else "")
        )

    def rule(g: np.ndarray) -> Tuple[np.ndarray]:
        grad = np.zeros_like(table.data)
        np.add.at(grad, idx, g)
        return (grad,)

    return Tensor._from_op(table.data[idx], (table,), rule, "embedding")


# Graph traversal

def topological_order(root: Tensor) -> List[Tensor]:
    """Nodes reachable from ``root`` that require gradients, inputs before outputs."""
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Populate gradients of ``loss`` for every reachable parameter.

    Leaf tensors accumulate across calls; intermediate gradients live only
    for the duration of the call.

    Raises:
        ShapeError: If ``loss`` is not a single element
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, shape is {loss.shape}")
    seed = np.ones_like(loss.data)
    if not loss.requires_grad:
        return

    grads: Dict[int, np.ndarray] = {id(loss): seed}
    for node in reversed(topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        if node is loss:
            node.grad = seed.copy()
        assert node._rule is not None
        for parent, pg in zip(node._parents, node._rule(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg
