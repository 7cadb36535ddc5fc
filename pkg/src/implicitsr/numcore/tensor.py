"""Dense tensors with reverse-mode differentiation.

Values live in numpy arrays, float32 by default; float64 is supported so
that gradient checking can run at full precision. Every differentiable
operation returns a fresh tensor that records its parent tensors and a
closure mapping the output gradient to parent gradients. `backward`
replays those closures in reverse topological order.

Operations never mutate their inputs' data buffers.
"""

from __future__ import annotations

import numpy as np

_grad_enabled = True


class no_grad:
    """Context manager that suppresses graph recording (inference mode)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled():
    return _grad_enabled


class Tensor:
    """N-dimensional real array, optionally participating in the tape.

    Leaf tensors created with ``requires_grad=True`` receive a ``.grad``
    buffer (same shape as ``.data``) once ``backward`` reaches them.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def is_leaf(self):
        return self._backward is None

    def all_finite(self):
        """True iff no stored value is NaN or +/-Inf."""
        return bool(np.isfinite(self.data).all())

    def item(self):
        return float(self.data.reshape(()))

    def detach(self):
        """Copy of the value with no graph attachment."""
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def from_op(data, parents, backward_fn):
    """Build an op output tensor.

    ``backward_fn(grad_out)`` must return one gradient array (or None) per
    parent, aligned with ``parents``. The graph edge is only recorded when
    grad mode is on and some parent requires grad.
    """
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


class Tape:
    """Ordered record of the primitive ops reaching one root tensor.

    The node list is a topological order (leaves first, root last), so a
    single reverse sweep visits every op exactly once.
    """

    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def trace(cls, root):
        order = []
        visited = set()
        stack = [(root, False)]
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
        return cls(order)

    def run_backward(self, root):
        grads = {id(root): np.ones_like(root.data)}
        for node in reversed(self.nodes):
            gout = grads.pop(id(node), None)
            if gout is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = gout if node.grad is None else node.grad + gout
                continue
            parent_grads = node._backward(gout)
            for parent, g in zip(node._parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g


def backward(root):
    """Accumulate d(root)/d(leaf) into every requires_grad leaf's .grad."""
    if root.size != 1:
        raise ValueError(f"backward expects a scalar, got shape {root.shape}")
    Tape.trace(root).run_backward(root)
