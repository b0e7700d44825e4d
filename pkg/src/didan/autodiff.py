"""Minimal dense-tensor computation graph with reverse-mode differentiation.

Values are numpy arrays (float32 for training, float64 for gradient
checks). Each op records its parents and a backward closure; `backward`
walks the graph once in reverse topological order and returns gradients
for every node that requires them.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ShapeError


class Node:
    """One vertex of the computation graph."""

    __slots__ = ("value", "op", "parents", "grad", "requires_grad", "_backward", "name")

    def __init__(
        self,
        value: np.ndarray,
        op: str = "leaf",
        parents: Sequence["Node"] = (),
        requires_grad: bool = False,
        backward: Callable[[np.ndarray], None] | None = None,
        name: str | None = None,
    ):
        self.value = np.asarray(value)
        self.op = op
        self.parents = tuple(parents)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(op={self.op!r}, shape={self.value.shape}, name={self.name!r})"


def constant(value, name: str | None = None) -> Node:
    return Node(np.asarray(value), op="const", name=name)


def parameter(value: np.ndarray, name: str | None = None) -> Node:
    return Node(np.asarray(value), op="param", requires_grad=True, name=name)


def _accumulate(node: Node, grad: np.ndarray) -> None:
    if not node.requires_grad:
        return
    if node.grad is None:
        node.grad = np.zeros_like(node.value)
    node.grad += grad


def _require_2d(op: str, *nodes: Node) -> None:
    for n in nodes:
        if n.value.ndim != 2:
            raise ShapeError(op, f"expected 2-D operand, got shape {n.value.shape}")


def matmul(a: Node, b: Node) -> Node:
    _require_2d("matmul", a, b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", f"inner dims differ: {a.shape} @ {b.shape}")
    out = Node(a.value @ b.value, op="matmul", parents=(a, b))

    def bwd(g):
        _accumulate(a, g @ b.value.T)
        _accumulate(b, a.value.T @ g)

    out._backward = bwd
    return out


def add(a: Node, b: Node) -> Node:
    """Elementwise add; also supports matrix + 1-D row bias."""
    bias = a.value.ndim == 2 and b.value.ndim == 1
    if bias:
        if a.shape[1] != b.shape[0]:
            raise ShapeError("add", f"bias dim {b.shape} does not match {a.shape}")
    elif a.shape != b.shape:
        raise ShapeError("add", f"shape mismatch {a.shape} vs {b.shape}")
    out = Node(a.value + b.value, op="add", parents=(a, b))

    def bwd(g):
        _accumulate(a, g)
        _accumulate(b, g.sum(axis=0) if bias else g)

    out._backward = bwd
    return out


def sub(a: Node, b: Node) -> Node:
    if a.shape != b.shape:
        raise ShapeError("sub", f"shape mismatch {a.shape} vs {b.shape}")
    out = Node(a.value - b.value, op="sub", parents=(a, b))

    def bwd(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    out._backward = bwd
    return out


def mul(a: Node, b: Node) -> Node:
    if a.shape != b.shape:
        raise ShapeError("mul", f"shape mismatch {a.shape} vs {b.shape}")
    out = Node(a.value * b.value, op="mul", parents=(a, b))

    def bwd(g):
        _accumulate(a, g * b.value)
        _accumulate(b, g * a.value)

    out._backward = bwd
    return out


def scale(a: Node, c: float) -> Node:
    out = Node(a.value * a.value.dtype.type(c), op="scale", parents=(a,))
    out._backward = lambda g: _accumulate(a, g * a.value.dtype.type(c))
    return out


def add_const(a: Node, c: float) -> Node:
    out = Node(a.value + a.value.dtype.type(c), op="add_const", parents=(a,))
    out._backward = lambda g: _accumulate(a, g)
    return out


def relu(a: Node) -> Node:
    out = Node(np.maximum(a.value, 0), op="relu", parents=(a,))
    out._backward = lambda g: _accumulate(a, g * (a.value > 0))
    return out


def sigmoid(a: Node) -> Node:
    x = a.value
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    out = Node(y, op="sigmoid", parents=(a,))
    out._backward = lambda g: _accumulate(a, g * y * (1.0 - y))
    return out


def log(a: Node) -> Node:
    out = Node(np.log(a.value), op="log", parents=(a,))
    out._backward = lambda g: _accumulate(a, g / a.value)
    return out


def exp(a: Node) -> Node:
    y = np.exp(a.value)
    out = Node(y, op="exp", parents=(a,))
    out._backward = lambda g: _accumulate(a, g * y)
    return out


def clamp(a: Node, lo: float, hi: float) -> Node:
    y = np.clip(a.value, lo, hi)
    mask = (a.value > lo) & (a.value < hi)
    out = Node(y, op="clamp", parents=(a,))
    out._backward = lambda g: _accumulate(a, g * mask)
    return out


def softmax_rows(a: Node) -> Node:
    _require_2d("softmax_rows", a)
    y = kernels.softmax_rows_fwd(np.ascontiguousarray(a.value))
    out = Node(y, op="softmax_rows", parents=(a,))
    out._backward = lambda g: _accumulate(
        a, kernels.softmax_rows_bwd(y, np.ascontiguousarray(g))
    )
    return out


def mean_rows(a: Node) -> Node:
    """Mean over the row axis: [m, n] -> [n]."""
    _require_2d("mean_rows", a)
    m = a.shape[0]
    out = Node(a.value.mean(axis=0), op="mean_rows", parents=(a,))
    out._backward = lambda g: _accumulate(a, np.broadcast_to(g / m, a.shape).copy())
    return out


def sum_all(a: Node) -> Node:
    """Sum of all entries, as a shape-[1] scalar node."""
    out = Node(a.value.sum(keepdims=False).reshape(1), op="sum_all", parents=(a,))
    out._backward = lambda g: _accumulate(a, np.full_like(a.value, g[0]))
    return out


def transpose(a: Node) -> Node:
    _require_2d("transpose", a)
    out = Node(a.value.T.copy(), op="transpose", parents=(a,))
    out._backward = lambda g: _accumulate(a, g.T)
    return out


def concat_last_axis(nodes: Sequence[Node]) -> Node:
    """Concatenate 1-D vectors, or 2-D blocks along their last axis."""
    if not nodes:
        raise ShapeError("concat_last_axis", "no operands")
    ndim = nodes[0].value.ndim
    if ndim not in (1, 2) or any(n.value.ndim != ndim for n in nodes):
        raise ShapeError("concat_last_axis", "operands must all be 1-D or all 2-D")
    if ndim == 2 and len({n.shape[0] for n in nodes}) != 1:
        raise ShapeError(
            "concat_last_axis",
            f"row counts differ: {[n.shape for n in nodes]}",
        )
    axis = ndim - 1
    out = Node(
        np.concatenate([n.value for n in nodes], axis=axis),
        op="concat_last_axis",
        parents=nodes,
    )
    sizes = [n.shape[axis] for n in nodes]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for n, s, e in zip(nodes, offsets[:-1], offsets[1:]):
            _accumulate(n, g[..., s:e])

    out._backward = bwd
    return out


def stack_rows(nodes: Sequence[Node]) -> Node:
    """Stack 1-D vectors into a matrix, one per row."""
    if not nodes:
        raise ShapeError("stack_rows", "no operands")
    if any(n.value.ndim != 1 for n in nodes) or len({n.shape for n in nodes}) != 1:
        raise ShapeError("stack_rows", f"need equal 1-D shapes, got {[n.shape for n in nodes]}")
    out = Node(np.stack([n.value for n in nodes]), op="stack_rows", parents=nodes)

    def bwd(g):
        for i, n in enumerate(nodes):
            _accumulate(n, g[i])

    out._backward = bwd
    return out


def slice_rows(a: Node, start: int, stop: int) -> Node:
    _require_2d("slice_rows", a)
    if not (0 <= start < stop <= a.shape[0]):
        raise ShapeError("slice_rows", f"range [{start}, {stop}) outside {a.shape}")
    out = Node(a.value[start:stop].copy(), op="slice_rows", parents=(a,))

    def bwd(g):
        full = np.zeros_like(a.value)
        full[start:stop] = g
        _accumulate(a, full)

    out._backward = bwd
    return out


def row_l2_norms(a: Node) -> Node:
    _require_2d("row_l2_norms", a)
    norms = np.sqrt((a.value * a.value).sum(axis=1))
    out = Node(norms, op="row_l2_norms", parents=(a,))

    def bwd(g):
        safe = np.where(norms > 0.0, norms, 1.0)
        _accumulate(a, (g / safe)[:, None] * a.value * (norms > 0.0)[:, None])

    out._backward = bwd
    return out


def cosine_matrix(a: Node, b: Node) -> Node:
    """Pairwise cosine similarity of the rows of `a` against the rows of `b`."""
    _require_2d("cosine_matrix", a, b)
    if a.shape[1] != b.shape[1]:
        raise ShapeError("cosine_matrix", f"feature dims differ: {a.shape} vs {b.shape}")
    av = np.ascontiguousarray(a.value)
    bv = np.ascontiguousarray(b.value)
    out = Node(kernels.cosine_matrix_fwd(av, bv), op="cosine_matrix", parents=(a, b))

    def bwd(g):
        gv, gw = kernels.cosine_matrix_bwd(av, bv, np.ascontiguousarray(g))
        _accumulate(a, gv)
        _accumulate(b, gw)

    out._backward = bwd
    return out


def batchnorm(
    x: Node,
    gamma: Node,
    beta: Node,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
    update_stats: bool = True,
) -> Node:
    """Per-feature batch normalization over the row (batch) axis.

    Training mode normalizes with batch statistics and, when
    `update_stats`, folds them into the running stats in place. Eval
    mode uses the running stats only.
    """
    _require_2d("batchnorm", x)
    n, f = x.shape
    if gamma.shape != (f,) or beta.shape != (f,):
        raise ShapeError("batchnorm", f"affine params {gamma.shape}/{beta.shape} vs {x.shape}")
    if running_mean.shape != (f,) or running_var.shape != (f,):
        raise ShapeError("batchnorm", "running stats do not match feature dim")
    if training:
        if n < 2:
            raise ShapeError("batchnorm", f"training batch of {n} rows (minimum 2)")
        mu = x.value.mean(axis=0)
        var = x.value.var(axis=0)
        if update_stats:
            unbiased = var * (n / (n - 1))
            running_mean *= 1.0 - momentum
            running_mean += momentum * mu
            running_var *= 1.0 - momentum
            running_var += momentum * unbiased
    else:
        mu = running_mean.astype(x.value.dtype)
        var = running_var.astype(x.value.dtype)
    inv_std = 1.0 / np.sqrt(var + x.value.dtype.type(eps))
    xhat = (x.value - mu) * inv_std
    out = Node(gamma.value * xhat + beta.value, op="batchnorm", parents=(x, gamma, beta))

    def bwd(g):
        _accumulate(gamma, (g * xhat).sum(axis=0))
        _accumulate(beta, g.sum(axis=0))
        dxhat = g * gamma.value
        if training:
            gx = (
                dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0)
            ) * inv_std
        else:
            gx = dxhat * inv_std
        _accumulate(x, gx)

    out._backward = bwd
    return out


_UNARY = {
    "relu": relu,
    "sigmoid": sigmoid,
    "softmax_rows": softmax_rows,
    "mean_rows": mean_rows,
    "row_l2_norms": row_l2_norms,
}
_BINARY = {"matmul": matmul, "add": add, "cosine_matrix": cosine_matrix}


def tensor_op(kind: str, inputs: Sequence[Node], **kwargs) -> Node:
    """Uniform dispatch over the primitive op vocabulary."""
    if kind in _UNARY:
        (a,) = inputs
        return _UNARY[kind](a)
    if kind in _BINARY:
        a, b = inputs
        return _BINARY[kind](a, b)
    if kind == "concat_last_axis":
        return concat_last_axis(list(inputs))
    if kind == "scale":
        (a,) = inputs
        return scale(a, kwargs["factor"])
    if kind == "batchnorm":
        x, gamma, beta = inputs
        return batchnorm(x, gamma, beta, **kwargs)
    raise ShapeError("tensor_op", f"unknown op kind {kind!r}")


def topo_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Node, wrt: Iterable[Node] | None = None) -> dict[int, np.ndarray]:
    """Reverse-mode sweep from a scalar loss.

    Returns a map from node id to gradient for every graph leaf that
    requires a gradient (or for `wrt`, when given). Gradient buffers on
    interior nodes are freed as the sweep retreats past them.
    """
    if loss.shape != (1,):
        raise ShapeError("backward", f"loss must have shape (1,), got {loss.shape}")
    order = topo_order(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node.grad is None or node._backward is None:
            continue
        node._backward(node.grad)
        node.grad = None if node.parents else node.grad
    if wrt is None:
        targets = [n for n in order if n.requires_grad and not n.parents]
    else:
        targets = list(wrt)
    result = {}
    for n in targets:
        result[id(n)] = n.grad if n.grad is not None else np.zeros_like(n.value)
    return result
