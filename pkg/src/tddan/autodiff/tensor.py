"""Dense float64 tensors with a reverse-mode tape.

Every op records its parents and a closure mapping the output gradient to one
gradient per parent.  :func:`backward` walks the graph once in reverse
topological order and accumulates into ``.grad`` of leaf tensors that require
gradients.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument

_EMPTY = ()


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "parents", "backward_fn", "name", "__weakref__")

    # keep numpy from hijacking reflected operators
    __array_priority__ = 1000

    def __init__(self, values, requires_grad=False, name=None, parents=_EMPTY, backward_fn=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    @property
    def is_leaf(self):
        return not self.parents

    def numpy(self):
        return self.values

    def item(self):
        return float(self.values)

    def detach(self):
        return Tensor(self.values)

    def zero_grad(self):
        self.grad = np.zeros_like(self.values)

    def backward(self):
        backward(self)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(values, parents, backward_fn):
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        return Tensor(values, True, parents=parents, backward_fn=backward_fn)
    return Tensor(values)


def unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _topo_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in reversed(node.parents):
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every grad-requiring leaf."""
    if loss.size != 1:
        raise InvalidArgument(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones_like(loss.values)}
    for node in reversed(_topo_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg


# ----------------------------------------------------------------- elementwise

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.values + b.values, (a, b),
                 lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.values - b.values, (a, b),
                 lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.values * b.values, (a, b),
                 lambda g: (unbroadcast(g * b.values, a.shape), unbroadcast(g * a.values, b.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.values / b.values

    def fn(g):
        ga = unbroadcast(g / b.values, a.shape)
        gb = unbroadcast(-g * out / b.values, b.shape)
        return ga, gb

    return _make(out, (a, b), fn)


def neg(a):
    a = as_tensor(a)
    return _make(-a.values, (a,), lambda g: (-g,))


def square(a):
    a = as_tensor(a)
    return _make(a.values * a.values, (a,), lambda g: (2.0 * g * a.values,))


def sqrt(a):
    a = as_tensor(a)
    out = np.sqrt(a.values)
    return _make(out, (a,), lambda g: (0.5 * g / out,))


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.values)
    return _make(out, (a,), lambda g: (g * out,))


def log(a):
    a = as_tensor(a)
    return _make(np.log(a.values), (a,), lambda g: (g / a.values,))


def log10(a):
    a = as_tensor(a)
    return _make(np.log10(a.values), (a,), lambda g: (g / (a.values * np.log(10.0)),))


def abs_(a):
    a = as_tensor(a)
    return _make(np.abs(a.values), (a,), lambda g: (g * np.sign(a.values),))


def relu(a):
    a = as_tensor(a)
    pos = a.values > 0
    return _make(np.where(pos, a.values, 0.0), (a,), lambda g: (g * pos,))


def sigmoid(a):
    a = as_tensor(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.values))
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),))


def prelu(a, alpha):
    """Leaky ReLU with a learned slope; ``alpha`` broadcasts against ``a``."""
    a, alpha = as_tensor(a), as_tensor(alpha)
    pos = a.values > 0
    slope = np.where(pos, 1.0, alpha.values)
    out = a.values * slope

    def fn(g):
        return g * slope, unbroadcast(g * np.where(pos, 0.0, a.values), alpha.shape)

    return _make(out, (a, alpha), fn)


# ------------------------------------------------------------------ reductions

def sum_(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.values.sum(axis=axis, keepdims=keepdims)

    def fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(out, (a,), fn)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    count = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return sum_(a, axis, keepdims) * (1.0 / count)


def mse(a, b):
    return mean(square(sub(a, b)))


# ---------------------------------------------------------------- linear algebra

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise InvalidArgument("matmul expects operands with ndim >= 2")
    try:
        out = a.values @ b.values
    except ValueError as exc:
        raise InvalidArgument(str(exc)) from None

    def fn(g):
        ga = unbroadcast(g @ np.swapaxes(b.values, -1, -2), a.shape)
        gb = unbroadcast(np.swapaxes(a.values, -1, -2) @ g, b.shape)
        return ga, gb

    return _make(out, (a, b), fn)


def einsum(subscripts, a, b):
    """Two-operand einsum; every index of an operand must reach the output or the other operand."""
    a, b = as_tensor(a), as_tensor(b)
    lhs, out_sub = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    out = np.einsum(subscripts, a.values, b.values, optimize=True)

    def fn(g):
        ga = np.einsum(f"{out_sub},{sb}->{sa}", g, b.values, optimize=True) if a.requires_grad else None
        gb = np.einsum(f"{out_sub},{sa}->{sb}", g, a.values, optimize=True) if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), fn)


def dense(x, weight, bias=None):
    """``x @ weight.T + bias`` for ``x`` of shape (..., in)."""
    out = matmul(x, transpose(weight, None))
    return out if bias is None else add(out, bias)


# ---------------------------------------------------------------------- shapes

def reshape(a, shape):
    a = as_tensor(a)
    return _make(a.values.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None):
    a = as_tensor(a)
    axes = tuple(axes) if axes else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _make(np.transpose(a.values, axes), (a,), lambda g: (np.transpose(g, inverse),))


def getitem(a, key):
    a = as_tensor(a)
    advanced = any(isinstance(k, (list, np.ndarray)) for k in (key if isinstance(key, tuple) else (key,)))

    def fn(g):
        full = np.zeros_like(a.values)
        if advanced:
            np.add.at(full, key, g)
        else:
            full[key] += g
        return (full,)

    return _make(a.values[key], (a,), fn)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _make(np.concatenate([t.values for t in tensors], axis=axis), tensors,
                 lambda g: tuple(np.split(g, sizes, axis=axis)))


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    return _make(np.stack([t.values for t in tensors], axis=axis), tensors,
                 lambda g: tuple(np.moveaxis(g, axis, 0)))


def pad_last(a, left, right):
    """Zero-pad the last axis."""
    a = as_tensor(a)
    width = [(0, 0)] * (a.ndim - 1) + [(left, right)]
    end = a.shape[-1] + left
    return _make(np.pad(a.values, width), (a,), lambda g: (g[..., left:end],))
