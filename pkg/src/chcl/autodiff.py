"""Minimal reverse-mode tape over numpy arrays.

Covers exactly the operator set the encoder and the contrastive loss need:
broadcast arithmetic, matmul, constant left-multiplication (for the fixed
propagation matrix), relu, exp/log/sqrt, axis reductions, transpose, and row
concatenation.  Everything is float64 and 0-/1-/2-dimensional; this is not a
general-purpose autodiff.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Tensor",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "matmul",
    "const_matmul",
    "transpose",
    "relu",
    "exp",
    "log",
    "sqrt",
    "tsum",
    "tmean",
    "concat_rows",
]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A tape node: a value, accumulated gradient, and a vector-Jacobian hook."""

    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = parents
        self._vjp = vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def backward(self) -> None:
        """Reverse accumulation from a scalar output into every reachable node."""
        if self.value.size != 1:
            raise ValueError("backward expects a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node._vjp is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._vjp(node.grad)):
                if g is None:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    # arithmetic sugar; scalars and arrays become constant leaves
    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, as_tensor(other))

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __neg__(self):
        return mul(self, as_tensor(-1.0))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.value.shape})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value + b.value, (a, b))
    out._vjp = lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape))
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value - b.value, (a, b))
    out._vjp = lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape))
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value * b.value, (a, b))
    out._vjp = lambda g: (
        _unbroadcast(g * b.value, a.value.shape),
        _unbroadcast(g * a.value, b.value.shape),
    )
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value / b.value, (a, b))
    out._vjp = lambda g: (
        _unbroadcast(g / b.value, a.value.shape),
        _unbroadcast(-g * a.value / (b.value**2), b.value.shape),
    )
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    out = Tensor(a.value @ b.value, (a, b))
    out._vjp = lambda g: (g @ b.value.T, a.value.T @ g)
    return out


def const_matmul(c, x: Tensor) -> Tensor:
    """Left-multiplication by a constant (dense or scipy sparse) matrix."""
    ct = c.T if sp.issparse(c) else np.asarray(c, dtype=np.float64).T
    out = Tensor(c @ x.value, (x,))
    out._vjp = lambda g: (ct @ g,)
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.value.T, (a,))
    out._vjp = lambda g: (g.T,)
    return out


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    out = Tensor(np.where(mask, a.value, 0.0), (a,))
    out._vjp = lambda g: (g * mask,)
    return out


def exp(a: Tensor) -> Tensor:
    out = Tensor(np.exp(a.value), (a,))
    out._vjp = lambda g: (g * out.value,)
    return out


def log(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.value), (a,))
    out._vjp = lambda g: (g / a.value,)
    return out


def sqrt(a: Tensor) -> Tensor:
    out = Tensor(np.sqrt(a.value), (a,))
    out._vjp = lambda g: (g * 0.5 / out.value,)
    return out


def tsum(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.value.sum(axis=axis, keepdims=keepdims), (a,))

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.value.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.value.shape).copy(),)

    out._vjp = vjp
    return out


def tmean(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    count = a.value.size if axis is None else a.value.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), as_tensor(1.0 / count))


def concat_rows(tensors: list[Tensor]) -> Tensor:
    """Stack (1, d) rows into an (N, d) matrix; gradient splits back by row."""
    if not tensors:
        raise ValueError("concat_rows needs at least one row")
    counts = [t.value.shape[0] for t in tensors]
    out = Tensor(np.concatenate([t.value for t in tensors], axis=0), tuple(tensors))

    def vjp(g):
        pieces = []
        start = 0
        for c in counts:
            pieces.append(g[start : start + c])
            start += c
        return tuple(pieces)

    out._vjp = vjp
    return out
