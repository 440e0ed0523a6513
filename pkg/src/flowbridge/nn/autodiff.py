"""Minimal reverse-mode autodiff on numpy arrays.

A Tensor wraps an ndarray plus a backward closure; calling backward() on an
output walks the tape in reverse topological order and accumulates gradients
into every tensor created with requires_grad=True. Only the operations the
vector-field models need are provided.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "add",
    "mul",
    "matmul",
    "silu",
    "conv1d",
    "concat",
    "slice_last",
    "reshape",
]


def _sum_to_shape(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Undo numpy broadcasting: sum grad down to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad: np.ndarray | None = None):
        """Seed this tensor with grad (ones if omitted) and propagate."""
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
                stack.append((p, False))
        if grad is None:
            grad = np.ones_like(self.data)
        self.grad = np.asarray(grad, dtype=self.data.dtype)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _accumulate(t: Tensor, g: np.ndarray):
    if not (t.requires_grad or t._parents):
        return
    g = g.astype(t.data.dtype, copy=False)
    t.grad = g if t.grad is None else t.grad + g


def _coerce(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype))


def add(a: Tensor, b) -> Tensor:
    b = _coerce(b, a)
    out = Tensor(a.data + b.data)
    out._parents = (a, b)

    def backward(g):
        _accumulate(a, _sum_to_shape(g, a.data.shape))
        _accumulate(b, _sum_to_shape(g, b.data.shape))

    out._backward = backward
    return out


def mul(a: Tensor, b) -> Tensor:
    b = _coerce(b, a)
    out = Tensor(a.data * b.data)
    out._parents = (a, b)

    def backward(g):
        _accumulate(a, _sum_to_shape(g * b.data, a.data.shape))
        _accumulate(b, _sum_to_shape(g * a.data, b.data.shape))

    out._backward = backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data @ b.data)
    out._parents = (a, b)

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    out._backward = backward
    return out


def silu(x: Tensor) -> Tensor:
    sig = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(x.data * sig)
    out._parents = (x,)

    def backward(g):
        _accumulate(x, g * sig * (1.0 + x.data * (1.0 - sig)))

    out._backward = backward
    return out


def conv1d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Same-padded 1-D convolution (cross-correlation), odd kernel only.

    x: (B, C_in, L), w: (C_out, C_in, K), b: (C_out,). Output (B, C_out, L).
    """
    k = w.data.shape[2]
    if k % 2 != 1:
        raise ValueError(f"kernel size must be odd, got {k}")
    pad = k // 2
    xpad = np.pad(x.data, ((0, 0), (0, 0), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xpad, k, axis=2)
    out = Tensor(np.einsum("bclk,ock->bol", win, w.data) + b.data[None, :, None])
    out._parents = (x, w, b)

    def backward(g):
        _accumulate(b, g.sum(axis=(0, 2)))
        _accumulate(w, np.einsum("bol,bclk->ock", g, win))
        gpad = np.pad(g, ((0, 0), (0, 0), (pad, pad)))
        gwin = np.lib.stride_tricks.sliding_window_view(gpad, k, axis=2)
        wflip = w.data[:, :, ::-1]
        _accumulate(x, np.einsum("bosk,ock->bcs", gwin, wflip))

    out._backward = backward
    return out


def concat(parts: list[Tensor], axis: int = -1) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    out._parents = tuple(parts)
    sizes = [p.data.shape[axis] for p in parts]

    def backward(g):
        offset = 0
        for p, size in zip(parts, sizes):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(offset, offset + size)
            _accumulate(p, g[tuple(idx)])
            offset += size

    out._backward = backward
    return out


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice along the last axis; backward zero-pads back to full width."""
    out = Tensor(x.data[..., start:stop])
    out._parents = (x,)

    def backward(g):
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        _accumulate(x, full)

    out._backward = backward
    return out


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = Tensor(x.data.reshape(shape))
    out._parents = (x,)

    def backward(g):
        _accumulate(x, g.reshape(x.data.shape))

    out._backward = backward
    return out
