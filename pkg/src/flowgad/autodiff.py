"""Dense reverse-mode automatic differentiation over numpy float64 arrays.

A ``Tape`` records every primitive applied to tracked tensors while it is
active (innermost ``with Tape() as tape:`` wins).  ``tape.backward(loss)``
walks the record once in reverse and accumulates ``.grad`` buffers on every
tensor that had ``requires_grad`` set.  Outside a tape the same primitives
run as plain numpy calls, which keeps frozen-model inference cheap.

All data is float64.  Matrices are 2-D throughout; losses are 0-d scalars.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractViolation, DeterminismError, NumericFault

_TAPES: list["Tape"] = []


def _active_tape() -> Optional["Tape"]:
    return _TAPES[-1] if _TAPES else None


class Tensor:
    """A numpy array plus gradient bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar; scalars take the cheap constant path
    def __add__(self, other):
        if isinstance(other, (int, float)):
            return add_scalar(self, float(other))
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return add_scalar(self, -float(other))
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, 1.0 / float(other))
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    @property
    def T(self):
        return transpose(self)


class Node:
    """One recorded primitive: op name, input/output refs, backward closure."""

    __slots__ = ("op", "inputs", "out", "backprop")

    def __init__(self, op: str, inputs: tuple, out: Tensor, backprop: Callable):
        self.op = op
        self.inputs = inputs
        self.out = out
        self.backprop = backprop


class Tape:
    """Ordered operation record; single forward pass, single backward pass.

    Policy: a tape may be backpropagated at most once and is then spent;
    build a fresh tape per training step.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._spent = False

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.pop()
        return False

    def backward(self, loss: Tensor):
        """Populate ``.grad`` on every tracked tensor reachable from ``loss``."""
        if self._spent:
            raise ContractViolation("tape already backpropagated; build a new tape")
        if loss.data.size != 1:
            raise ContractViolation(
                f"backward requires a scalar loss, got shape {loss.data.shape}"
            )
        if not self.nodes:
            raise ContractViolation("tape is empty; no operations were recorded")
        if not np.isfinite(loss.data):
            raise NumericFault(self._first_nonfinite())
        self._spent = True
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            g = node.out.grad
            if g is not None:
                node.backprop(g)

    def _first_nonfinite(self) -> str:
        for i, node in enumerate(self.nodes):
            if not np.all(np.isfinite(node.out.data)):
                return f"non-finite values first produced by node #{i} '{node.op}'"
        return "loss is non-finite but every recorded node output is finite"


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        # owned copy: g may alias another tensor's grad buffer
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, dim in enumerate(shape):
        if dim == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _record(op: str, inputs: tuple, out_data: np.ndarray, backprop) -> Tensor:
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out = Tensor(out_data, requires_grad=True)
        tape.nodes.append(Node(op, inputs, out, backprop))
        return out
    return Tensor(out_data)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    """An untracked tensor (weights stay tracked; data stays constant)."""
    return Tensor(x, requires_grad=False)


# ---------------------------------------------------------------------------
# binary primitives
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def backprop(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _record("add", (a, b), out_data, backprop)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data - b.data

    def backprop(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g, b.data.shape))

    return _record("sub", (a, b), out_data, backprop)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def backprop(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _record("mul", (a, b), out_data, backprop)


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data / b.data

    def backprop(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(-g * out_data / b.data, b.data.shape))

    return _record("div", (a, b), out_data, backprop)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ContractViolation(
            f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ContractViolation(
            f"matmul inner dimensions disagree: {a.data.shape} @ {b.data.shape}"
        )
    out_data = a.data @ b.data

    def backprop(g):
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ g)

    return _record("matmul", (a, b), out_data, backprop)


# ---------------------------------------------------------------------------
# unary primitives
# ---------------------------------------------------------------------------

def transpose(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = a.data.T

    def backprop(g):
        if a.requires_grad:
            _accum(a, g.T)

    return _record("transpose", (a,), out_data, backprop)


def scale(a: Tensor, c: float) -> Tensor:
    a = as_tensor(a)
    out_data = a.data * c

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * c)

    return _record("scale", (a,), out_data, backprop)


def add_scalar(a: Tensor, c: float) -> Tensor:
    a = as_tensor(a)
    out_data = a.data + c

    def backprop(g):
        if a.requires_grad:
            _accum(a, g)

    return _record("add_scalar", (a,), out_data, backprop)


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = np.exp(a.data)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * out_data)

    return _record("exp", (a,), out_data, backprop)


def log(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = np.log(a.data)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g / a.data)

    return _record("log", (a,), out_data, backprop)


def sqrt(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = np.sqrt(a.data)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * (0.5 / out_data))

    return _record("sqrt", (a,), out_data, backprop)


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = np.tanh(a.data)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * (1.0 - out_data * out_data))

    return _record("tanh", (a,), out_data, backprop)


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.data
    out_data = np.empty_like(x)
    pos = x >= 0
    out_data[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out_data[~pos] = ex / (1.0 + ex)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * out_data * (1.0 - out_data))

    return _record("sigmoid", (a,), out_data, backprop)


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out_data = np.maximum(a.data, 0.0)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * (a.data > 0.0))

    return _record("relu", (a,), out_data, backprop)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; gradient passes through where the input lies inside."""
    a = as_tensor(a)
    out_data = np.clip(a.data, lo, hi)

    def backprop(g):
        if a.requires_grad:
            _accum(a, g * ((a.data >= lo) & (a.data <= hi)))

    return _record("clip", (a,), out_data, backprop)


# ---------------------------------------------------------------------------
# reductions and shape ops
# ---------------------------------------------------------------------------

def reduce_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backprop(g):
        if a.requires_grad:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis=axis)
            _accum(a, np.broadcast_to(g, a.data.shape).copy())

    return _record("reduce_sum", (a,), out_data, backprop)


def reduce_max(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    """Max reduction; gradient routes to the argmax only, ties to lowest index."""
    a = as_tensor(a)
    out_data = a.data.max(axis=axis, keepdims=keepdims)

    def backprop(g):
        if not a.requires_grad:
            return
        buf = np.zeros_like(a.data)
        if axis is None:
            idx = np.unravel_index(np.argmax(a.data), a.data.shape)
            buf[idx] = g if np.isscalar(g) or g.ndim == 0 else g.reshape(())
        else:
            idx = np.argmax(a.data, axis=axis)
            gsq = g if keepdims is False else np.squeeze(g, axis=axis)
            if axis == 0:
                buf[idx, np.arange(a.data.shape[1])] = gsq
            else:
                buf[np.arange(a.data.shape[0]), idx] = gsq
        _accum(a, buf)

    return _record("reduce_max", (a,), out_data, backprop)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return scale(reduce_sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    parts = tuple(as_tensor(p) for p in parts)
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backprop(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _accum(p, g[tuple(sl)])

    return _record("concat", parts, out_data, backprop)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    out_data = a.data[:, start:stop].copy()

    def backprop(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            buf[:, start:stop] = g
            _accum(a, buf)

    return _record("slice_cols", (a,), out_data, backprop)


def split_half(a: Tensor) -> tuple[Tensor, Tensor]:
    """Split columns into equal halves; width must be even."""
    a = as_tensor(a)
    d = a.data.shape[1]
    if d % 2 != 0:
        raise ContractViolation(f"split_half needs an even column count, got {d}")
    return slice_cols(a, 0, d // 2), slice_cols(a, d // 2, d)


# ---------------------------------------------------------------------------
# gradient verification
# ---------------------------------------------------------------------------

def gradcheck(fn, inputs: Sequence[Tensor], step: float = 1e-5) -> float:
    """Compare tape gradients of ``fn(inputs)`` against central differences.

    Returns the max over all coordinates of
    ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    ``fn`` must map the tensors to a scalar Tensor and be deterministic.
    """
    if not (1e-7 <= step <= 1e-3):
        raise ContractViolation(f"gradcheck step must lie in [1e-7, 1e-3], got {step}")
    inputs = list(inputs)
    for t in inputs:
        t.requires_grad = True
        t.zero_grad()

    y0 = fn(*inputs)
    y1 = fn(*inputs)
    if y0.data.shape != y1.data.shape or not np.array_equal(y0.data, y1.data):
        raise DeterminismError("fn produced different outputs on identical inputs")
    if y0.data.size != 1:
        raise ContractViolation("gradcheck expects fn to return a scalar")

    with Tape() as tape:
        loss = fn(*inputs)
    tape.backward(loss)
    analytic = [
        np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs
    ]
    for t in inputs:
        t.zero_grad()

    worst = 0.0
    for t, ga in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            f_plus = float(fn(*inputs).data)
            flat[i] = keep - step
            f_minus = float(fn(*inputs).data)
            flat[i] = keep
            numeric = (f_plus - f_minus) / (2.0 * step)
            denom = max(1.0, abs(gflat[i]), abs(numeric))
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst
