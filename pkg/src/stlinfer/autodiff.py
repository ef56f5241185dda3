"""Minimal reverse-mode automatic differentiation on an explicit tape.

Values are python floats or flat float64 arrays; the only broadcasting
allowed is scalar against array (general tensor broadcasting is out of
scope).  Forward evaluation is eager: each op computes its value when the
node is appended, and every value is checked for finiteness so NaN or inf
surfaces immediately with the offending node named.

One backward pass is allowed per forward build.  Gradient buffers are
fresh per pass; calling backward twice without appending new nodes is an
error, which catches accidental gradient reuse.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "Tape",
    "Var",
    "NonFiniteError",
    "add",
    "sub",
    "mul",
    "div",
    "exp",
    "relu",
    "vsum",
    "dot",
    "scale",
    "abs_max",
    "ste_binarize",
    "stack",
    "minimum",
    "gradient_check",
]

Value = Union[float, np.ndarray]


class NonFiniteError(FloatingPointError):
    """A forward value came out NaN or infinite."""


def _check_finite(value: Value, op: str, idx: int) -> Value:
    if type(value) is float:
        if not math.isfinite(value):
            raise NonFiniteError(f"non-finite value from op '{op}' at node {idx}: {value}")
        return value
    # One C-level pass; a finite array whose sum overflows still passes the
    # exact check below, so no false alarms from the shortcut.
    if math.isfinite(float(value.sum())) or bool(np.isfinite(value).all()):
        return value
    raise NonFiniteError(f"non-finite value from op '{op}' at node {idx}")


class _Node:
    __slots__ = ("op", "parents", "value", "vjp")

    def __init__(self, op: str, parents: tuple, value: Value, vjp: Optional[Callable]):
        self.op = op
        self.parents = parents
        self.value = value
        self.vjp = vjp


class Var:
    """Handle to one node of a tape."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape: "Tape", idx: int):
        self.tape = tape
        self.idx = idx

    @property
    def value(self) -> Value:
        return self.tape.nodes[self.idx].value

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"Var(node={self.idx}, value={self.value!r})"


class Tape:
    """Append-only record of forward operations, replayed in reverse for grads."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self._grads: Optional[list] = None
        self._spent = False

    def _append(self, op: str, parents: tuple, value: Value, vjp: Optional[Callable]) -> Var:
        idx = len(self.nodes)
        _check_finite(value, op, idx)
        self.nodes.append(_Node(op, parents, value, vjp))
        self._spent = False
        return Var(self, idx)

    def leaf(self, value: Value) -> Var:
        v = _as_value(value)
        return self._append("leaf", (), v, None)

    # constants share leaf mechanics; the name only aids debugging
    def const(self, value: Value) -> Var:
        v = _as_value(value)
        return self._append("const", (), v, None)

    def backward(self, out: Var):
        """Accumulate gradients of the scalar `out` wrt every node.

        May be called once per forward build; appending any node re-arms it.
        """
        if self._spent:
            raise RuntimeError("backward already ran for this tape; rebuild the forward pass first")
        if out.tape is not self:
            raise ValueError("output var belongs to a different tape")
        if not isinstance(out.value, float):
            raise ValueError("backward requires a scalar output")
        grads: list = [None] * len(self.nodes)
        grads[out.idx] = 1.0
        nodes = self.nodes
        for i in range(out.idx, -1, -1):
            g = grads[i]
            if g is None:
                continue
            node = nodes[i]
            if node.vjp is None:
                continue
            for pidx, pg in zip(node.parents, node.vjp(g)):
                if pg is None:
                    continue
                if grads[pidx] is None:
                    grads[pidx] = pg
                else:
                    grads[pidx] = grads[pidx] + pg
        self._grads = grads
        self._spent = True

    def grad(self, var: Var) -> Value:
        """Gradient of the last backward output wrt `var` (zeros if unused)."""
        if self._grads is None:
            raise RuntimeError("no backward pass has run on this tape")
        g = self._grads[var.idx]
        if g is None:
            v = self.nodes[var.idx].value
            return 0.0 if isinstance(v, float) else np.zeros_like(v)
        return g


def _as_value(x) -> Value:
    if isinstance(x, Var):
        raise TypeError("expected a raw value, got a Var")
    if isinstance(x, (int, float, np.floating, np.integer)):
        return float(x)
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        return float(a)
    if a.ndim != 1:
        raise ValueError(f"tape values are scalars or flat arrays, got shape {a.shape}")
    return a


def _lift(tape: Tape, x) -> Var:
    if isinstance(x, Var):
        if x.tape is not tape:
            raise ValueError("vars from different tapes cannot mix")
        return x
    return tape.const(x)


def _pair(a, b) -> tuple[Tape, Var, Var]:
    if isinstance(a, Var):
        tape = a.tape
    elif isinstance(b, Var):
        tape = b.tape
    else:
        raise TypeError("at least one operand must be a Var")
    return tape, _lift(tape, a), _lift(tape, b)


def _reduce_to(g, value: Value) -> Value:
    # gradient of a scalar operand that was broadcast against an array
    if isinstance(value, float) and not isinstance(g, float):
        return float(np.sum(g))
    return g


def add(a, b) -> Var:
    tape, va, vb = _pair(a, b)
    x, y = va.value, vb.value
    out = x + y

    def vjp(g):
        return _reduce_to(g, x), _reduce_to(g, y)

    return tape._append("add", (va.idx, vb.idx), out, vjp)


def sub(a, b) -> Var:
    tape, va, vb = _pair(a, b)
    x, y = va.value, vb.value
    out = x - y

    def vjp(g):
        return _reduce_to(g, x), _reduce_to(-g, y)

    return tape._append("sub", (va.idx, vb.idx), out, vjp)


def mul(a, b) -> Var:
    tape, va, vb = _pair(a, b)
    x, y = va.value, vb.value
    out = x * y

    def vjp(g):
        return _reduce_to(g * y, x), _reduce_to(g * x, y)

    return tape._append("mul", (va.idx, vb.idx), out, vjp)


def div(a, b) -> Var:
    """Elementwise division; the caller keeps the denominator away from 0."""
    tape, va, vb = _pair(a, b)
    x, y = va.value, vb.value
    out = x / y

    def vjp(g):
        return _reduce_to(g / y, x), _reduce_to(-g * x / (y * y), y)

    return tape._append("div", (va.idx, vb.idx), out, vjp)


def exp(a: Var) -> Var:
    # overflow becomes inf here so the finite check reports the node
    if isinstance(a.value, float):
        try:
            out = math.exp(a.value)
        except OverflowError:
            out = math.inf
    else:
        with np.errstate(over="ignore"):
            out = np.exp(a.value)

    def vjp(g):
        return (g * out,)

    return a.tape._append("exp", (a.idx,), out, vjp)


def relu(a: Var) -> Var:
    """max(x, 0) elementwise; the subgradient at 0 is 0."""
    x = a.value
    if isinstance(x, float):
        out = x if x > 0.0 else 0.0

        def vjp(g):
            return (g if x > 0.0 else 0.0,)

    else:
        mask = x > 0.0
        out = np.where(mask, x, 0.0)

        def vjp(g):
            return (g * mask,)

    return a.tape._append("relu", (a.idx,), out, vjp)


def vsum(a: Var) -> Var:
    """Sum of all elements, in index order."""
    x = a.value
    out = float(np.sum(x)) if not isinstance(x, float) else x

    def vjp(g):
        return (g if isinstance(x, float) else np.full_like(x, g),)

    return a.tape._append("sum", (a.idx,), out, vjp)


def dot(a, b) -> Var:
    tape, va, vb = _pair(a, b)
    x, y = va.value, vb.value
    if isinstance(x, float) or isinstance(y, float) or x.shape != y.shape:
        raise ValueError("dot requires two arrays of equal length")
    out = float(np.dot(x, y))

    def vjp(g):
        return g * y, g * x

    return tape._append("dot", (va.idx, vb.idx), out, vjp)


def scale(a: Var, c: float) -> Var:
    """Multiply by a constant (no gradient flows to the constant)."""
    c = float(c)
    out = a.value * c

    def vjp(g):
        return (g * c,)

    return a.tape._append("scale", (a.idx,), out, vjp)


def abs_max(a: Var) -> Var:
    """|max of elements| as a scalar.

    The gradient goes to the argmax element only (first index on ties),
    multiplied by the sign of the max.
    """
    x = a.value
    if isinstance(x, float):
        raise ValueError("abs_max expects an array")
    k = int(np.argmax(x))
    mx = float(x[k])
    out = abs(mx)
    s = 1.0 if mx > 0.0 else (-1.0 if mx < 0.0 else 0.0)

    def vjp(g):
        gx = np.zeros_like(x)
        gx[k] = g * s
        return (gx,)

    return a.tape._append("abs_max", (a.idx,), out, vjp)


def ste_binarize(a: Var, rng: Optional[np.random.Generator] = None) -> Var:
    """Straight-through binarization of values in [0, 1].

    Forward thresholds at 0.5 (values >= 0.5 map to 1).  With `rng` given,
    the forward instead samples Bernoulli with the value as probability.
    Backward passes the gradient through unchanged in both modes.
    """
    x = a.value
    if isinstance(x, float):
        if rng is None:
            out = 1.0 if x >= 0.5 else 0.0
        else:
            out = float(rng.random() < x)
    else:
        if rng is None:
            out = (x >= 0.5).astype(np.float64)
        else:
            out = (rng.random(x.shape) < x).astype(np.float64)

    def vjp(g):
        return (g,)

    return a.tape._append("ste_binarize", (a.idx,), out, vjp)


def stack(items: Sequence[Var]) -> Var:
    """Concatenate scalar vars into a flat array var."""
    if not items:
        raise ValueError("cannot stack zero vars")
    tape = items[0].tape
    for it in items:
        if it.tape is not tape:
            raise ValueError("vars from different tapes cannot mix")
        if not isinstance(it.value, float):
            raise ValueError("stack expects scalar vars")
    out = np.array([it.value for it in items], dtype=np.float64)

    def vjp(g):
        return tuple(float(g[i]) for i in range(len(items)))

    return tape._append("stack", tuple(it.idx for it in items), out, vjp)


def minimum(a: Var, b: Var) -> Var:
    """Elementwise min composed from primitives: min(a,b) = a - relu(a-b)."""
    return sub(a, relu(sub(a, b)))


def gradient_check(
    f: Callable[[Var], Var],
    x: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Compare analytic gradients of f against central finite differences.

    `f` maps a leaf var holding a copy of `x` to a scalar var on the same
    tape.  Returns max_i |analytic_i - fd_i| / max(1, |analytic_i|), so a
    small return value certifies the backward pass at this point.
    """
    x = np.asarray(x, dtype=np.float64)
    tape = Tape()
    leaf = tape.leaf(x.copy() if x.ndim else float(x))
    out = f(leaf)
    if not isinstance(out.value, float):
        raise ValueError("gradient_check needs a scalar-valued function")
    tape.backward(out)
    analytic = np.atleast_1d(np.asarray(tape.grad(leaf), dtype=np.float64))

    flat = np.atleast_1d(x.astype(np.float64))
    worst = 0.0
    for i in range(flat.size):
        hi = flat.copy()
        hi[i] += eps
        lo = flat.copy()
        lo[i] -= eps
        t_hi = Tape()
        v_hi = f(t_hi.leaf(hi if x.ndim else float(hi[0])))
        t_lo = Tape()
        v_lo = f(t_lo.leaf(lo if x.ndim else float(lo[0])))
        fd = (v_hi.value - v_lo.value) / (2.0 * eps)
        err = abs(analytic[i] - fd) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
