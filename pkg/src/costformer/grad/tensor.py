"""Tensors, the recording graph, and reverse-mode backward."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    """A dense float64 array, optionally tracked for differentiation."""

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    # arithmetic sugar; each call goes through the primitive registry
    def __add__(self, other):
        from . import ops
        return ops.add(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, as_tensor(other))

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class Node:
    prim: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    ctx: object


@dataclass
class Primitive:
    name: str
    forward: Callable
    backward: Callable


PRIMITIVES: dict[str, Primitive] = {}


def register(name: str, forward: Callable, backward: Callable) -> Primitive:
    prim = Primitive(name, forward, backward)
    PRIMITIVES[name] = prim
    return prim


_local = threading.local()


def _active() -> "Graph | None":
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


@dataclass
class Graph:
    """Tape of primitive applications in execution (hence topological) order.

    Use as a context manager; primitives applied inside record a node when any
    input requires a gradient.
    """

    nodes: list[Node] = field(default_factory=list)
    params: list[Tensor] = field(default_factory=list)

    def param(self, t: Tensor) -> Tensor:
        t.requires_grad = True
        if not any(p is t for p in self.params):
            self.params.append(t)
        return t

    def __enter__(self):
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()
        return False


def apply(name: str, *inputs: Tensor, **kw) -> Tensor:
    prim = PRIMITIVES[name]
    # overflow surfaces as NonFiniteError below
    with np.errstate(over="ignore", invalid="ignore"):
        out_data, ctx = prim.forward(*(t.data for t in inputs), **kw)
    if not np.all(np.isfinite(out_data)):
        raise NonFiniteError(f"{name}: non-finite output")
    graph = _active()
    tracked = graph is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=tracked)
    if tracked:
        graph.nodes.append(Node(name, inputs, out, ctx))
    return out


def backward(graph: Graph, loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar ``loss`` for every parameter marked on ``graph``.

    The returned mapping is keyed by the parameter tensors themselves.
    Parameters the loss does not depend on get zero arrays.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        in_grads = PRIMITIVES[node.prim].backward(node.ctx, g)
        for t, gi in zip(node.inputs, in_grads):
            if gi is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
    out = {}
    for p in graph.params:
        g = grads.get(id(p))
        out[p] = np.zeros_like(p.data) if g is None else np.asarray(g, dtype=np.float64).reshape(p.shape)
    return out
