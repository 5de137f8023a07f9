"""Minimal reverse-mode differentiation over the tensor primitives.

A Node wraps a float64 array plus the vector-Jacobian rules linking it to
its parents. ``backward`` walks the (acyclic) graph once in reverse
topological order; only leaf nodes with requires_grad accumulate into
``.grad``, so repeated backward calls add up exactly.
"""

from __future__ import annotations

import numpy as np

from . import tensor_ops
from .backends import kernels
from .errors import ShapeError


class Node:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_vjps")

    # keep NumPy from consuming Node operands; arithmetic falls back to the
    # reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, parents=(), vjps=(), requires_grad=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in parents)
        self.requires_grad = bool(requires_grad)
        # nodes outside the differentiable subgraph drop their history
        self._parents = tuple(parents) if self.requires_grad else ()
        self._vjps = tuple(vjps) if self.requires_grad else ()

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(shape={self.value.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(as_node(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(as_node(other), self)

    def __neg__(self):
        return mul(self, -1.0)


def as_node(x) -> Node:
    if isinstance(x, Node):
        return x
    return Node(x, requires_grad=False)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    return Node(
        a.value + b.value,
        parents=(a, b),
        vjps=(lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(g, b.value.shape)),
    )


def sub(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    return Node(
        a.value - b.value,
        parents=(a, b),
        vjps=(lambda g: _unbroadcast(g, a.value.shape), lambda g: _unbroadcast(-g, b.value.shape)),
    )


def mul(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    return Node(
        a.value * b.value,
        parents=(a, b),
        vjps=(
            lambda g: _unbroadcast(g * b.value, a.value.shape),
            lambda g: _unbroadcast(g * a.value, b.value.shape),
        ),
    )


def div(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    out = a.value / b.value
    return Node(
        out,
        parents=(a, b),
        vjps=(
            lambda g: _unbroadcast(g / b.value, a.value.shape),
            lambda g: _unbroadcast(-g * out / b.value, b.value.shape),
        ),
    )


def relu(a) -> Node:
    a = as_node(a)
    mask = a.value > 0  # subgradient at 0 is 0
    return Node(np.where(mask, a.value, 0.0), parents=(a,), vjps=(lambda g: g * mask,))


def sum_all(a) -> Node:
    a = as_node(a)
    return Node(np.sum(a.value), parents=(a,), vjps=(lambda g: np.broadcast_to(g, a.value.shape).copy(),))


def mean_all(a) -> Node:
    a = as_node(a)
    n = a.value.size
    return Node(
        np.mean(a.value),
        parents=(a,),
        vjps=(lambda g: np.broadcast_to(g / n, a.value.shape).copy(),),
    )


def spatial_mean(a) -> Node:
    """Mean over the spatial axes, kept as (n, c, 1, 1)."""
    a = as_node(a)
    n_sp = a.value.shape[2] * a.value.shape[3]
    return Node(
        a.value.mean(axis=(2, 3), keepdims=True),
        parents=(a,),
        vjps=(lambda g: np.broadcast_to(g / n_sp, a.value.shape).copy(),),
    )


def conv2d(x, w, bias=None, stride: int = 1, pad: int = 0) -> Node:
    x, w = as_node(x), as_node(w)
    parents = [x, w]
    xv, wv = x.value, w.value
    bv = None
    if bias is not None:
        bias = as_node(bias)
        parents.append(bias)
        bv = bias.value
    out = tensor_ops.conv2d(xv, wv, bv, stride, pad)
    in_h, in_w = xv.shape[2], xv.shape[3]
    kh, kw = wv.shape[2], wv.shape[3]
    vjps = [
        lambda g: kernels.conv2d_grad_input(g, wv, stride, pad, in_h, in_w),
        lambda g: kernels.conv2d_grad_weight(xv, g, stride, pad, kh, kw),
    ]
    if bias is not None:
        vjps.append(lambda g: g.sum(axis=(0, 2, 3)))
    return Node(out, parents=tuple(parents), vjps=tuple(vjps))


def transposed_conv2d(x, w, bias=None, stride: int = 1, pad: int = 0) -> Node:
    x, w = as_node(x), as_node(w)
    parents = [x, w]
    xv, wv = x.value, w.value
    bv = None
    if bias is not None:
        bias = as_node(bias)
        parents.append(bias)
        bv = bias.value
    out = tensor_ops.transposed_conv2d(xv, wv, bv, stride, pad)
    kh, kw = wv.shape[2], wv.shape[3]
    vjps = [
        # adjoint pair of the forward stamping
        lambda g: kernels.conv2d_forward(g, wv, stride, pad),
        lambda g: kernels.conv2d_grad_weight(g, xv, stride, pad, kh, kw),
    ]
    if bias is not None:
        vjps.append(lambda g: g.sum(axis=(0, 2, 3)))
    return Node(out, parents=tuple(parents), vjps=tuple(vjps))


def box_mean(a, radius: int) -> Node:
    a = as_node(a)
    return Node(
        tensor_ops.box_mean(a.value, radius),
        parents=(a,),
        vjps=(lambda g: tensor_ops.box_mean_adjoint(g, radius),),
    )


def resize_bilinear(a, out_h: int, out_w: int) -> Node:
    a = as_node(a)
    in_h, in_w = a.value.shape[2], a.value.shape[3]
    return Node(
        tensor_ops.resize_bilinear(a.value, out_h, out_w),
        parents=(a,),
        vjps=(lambda g: tensor_ops.resize_bilinear_adjoint(g, in_h, in_w),),
    )


def resize_nearest(a, factor: int = 2) -> Node:
    a = as_node(a)
    return Node(
        tensor_ops.resize_nearest(a.value, factor),
        parents=(a,),
        vjps=(lambda g: tensor_ops.resize_nearest_adjoint(g),),
    )


def concat_channels(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    ca = a.value.shape[1]
    return Node(
        np.concatenate([a.value, b.value], axis=1),
        parents=(a, b),
        vjps=(lambda g: g[:, :ca], lambda g: g[:, ca:]),
    )


def channel_scale_shift(x, gamma, beta) -> Node:
    """y = x * gamma[c] + beta[c] with per-channel parameters."""
    x, gamma, beta = as_node(x), as_node(gamma), as_node(beta)
    xv = x.value
    out = xv * gamma.value[None, :, None, None] + beta.value[None, :, None, None]
    return Node(
        out,
        parents=(x, gamma, beta),
        vjps=(
            lambda g: g * gamma.value[None, :, None, None],
            lambda g: (g * xv).sum(axis=(0, 2, 3)),
            lambda g: g.sum(axis=(0, 2, 3)),
        ),
    )


def batchnorm(x, gamma, beta, eps: float = 1e-5) -> Node:
    """Normalize per channel over (batch, height, width) of the current input."""
    x, gamma, beta = as_node(x), as_node(gamma), as_node(beta)
    xv = x.value
    if xv.ndim != 4:
        raise ShapeError(f"batchnorm: expected NCHW input, got shape {xv.shape}")
    mean = xv.mean(axis=(0, 2, 3), keepdims=True)
    var = xv.var(axis=(0, 2, 3), keepdims=True)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (xv - mean) * invstd
    out = xhat * gamma.value[None, :, None, None] + beta.value[None, :, None, None]

    def vjp_x(g):
        dxhat = g * gamma.value[None, :, None, None]
        m1 = dxhat.mean(axis=(0, 2, 3), keepdims=True)
        m2 = (dxhat * xhat).mean(axis=(0, 2, 3), keepdims=True)
        return invstd * (dxhat - m1 - xhat * m2)

    return Node(
        out,
        parents=(x, gamma, beta),
        vjps=(
            vjp_x,
            lambda g: (g * xhat).sum(axis=(0, 2, 3)),
            lambda g: g.sum(axis=(0, 2, 3)),
        ),
    )


def backward(loss: Node) -> None:
    """Accumulate reverse-mode gradients of a scalar loss into leaf nodes."""
    if loss.value.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.value.shape}")
    topo: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    adjoint: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(topo):
        g = adjoint.pop(id(node), None)
        if g is None:
            continue
        if not node._parents:
            if node.requires_grad:
                node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, vjp in zip(node._parents, node._vjps):
            if not parent.requires_grad:
                continue
            contrib = vjp(g)
            prev = adjoint.get(id(parent))
            adjoint[id(parent)] = contrib if prev is None else prev + contrib
