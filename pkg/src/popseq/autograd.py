"""Minimal reverse-mode automatic differentiation over numpy float64 arrays.

Just enough operations for a small attention scorer and its losses: graphs
are built eagerly, gradients flow through a topological backward pass. Ops on
tensors that do not require gradients produce plain constants with no tape
links, so inference-time forwards carry no bookkeeping cost.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, _as_tensor(other))

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other)))

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def backward(t: Tensor) -> None:
    """Populate .grad on every reachable tensor that requires it."""
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))

    t.grad = np.ones_like(t.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))
    return _node(a.data + b.data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))
    return _node(a.data * b.data, (a, b), bw)


def scale(a: Tensor, s: float) -> Tensor:
    def bw(g):
        _accumulate(a, g * s)
    return _node(a.data * s, (a,), bw)


def neg(a: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, -g)
    return _node(-a.data, (a,), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)
    return _node(a.data @ b.data, (a, b), bw)


def transpose(a: Tensor) -> Tensor:
    def bw(g):
        _accumulate(a, g.T)
    return _node(a.data.T, (a,), bw)


def relu(a: Tensor) -> Tensor:
    keep = a.data > 0

    def bw(g):
        _accumulate(a, g * keep)
    return _node(np.where(keep, a.data, 0.0), (a,), bw)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        _accumulate(a, y * (g - (g * y).sum(axis=axis, keepdims=True)))
    return _node(y, (a,), bw)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    y = np.exp(out)

    def bw(g):
        _accumulate(a, g - y * g.sum(axis=axis, keepdims=True))
    return _node(out, (a,), bw)


def softplus(a: Tensor) -> Tensor:
    out = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))
    sig = 1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500)))

    def bw(g):
        _accumulate(a, g * sig)
    return _node(out, (a,), bw)


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows a[idx]; used for embedding lookups and row selection."""
    idx = np.asarray(idx, dtype=np.int64)

    def bw(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            np.add.at(acc, idx, g)
            _accumulate(a, acc)
    return _node(a.data[idx], (a,), bw)


def take_rc(a: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """Fancy-index a 2-D tensor at (rows, cols); shapes broadcast."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)

    def bw(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            np.add.at(acc, (np.broadcast_to(rows, g.shape),
                            np.broadcast_to(cols, g.shape)), g)
            _accumulate(a, acc)
    return _node(a.data[rows, cols], (a,), bw)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice [start, start+length) along one axis."""
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def bw(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            acc[index] = g
            _accumulate(a, acc)
    return _node(a.data[index], (a,), bw)


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            _accumulate(t, g[tuple(index)])
    return _node(np.concatenate([t.data for t in tensors], axis=axis),
                 tuple(tensors), bw)


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), bw)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    size = a.data.size if axis is None else a.data.shape[axis]

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape) / size)
    return _node(a.data.mean(axis=axis, keepdims=keepdims), (a,), bw)
