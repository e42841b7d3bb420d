"""Tape-based reverse-mode automatic differentiation with re-entrant contexts.

Values are 64-bit floats or float64 numpy arrays treated elementwise; every
operation is recorded on all currently active tapes, so a gradient computed
after an inner tape closes is itself differentiable on the enclosing tapes
(reverse-over-reverse, to arbitrary nesting depth).
"""

from __future__ import annotations

import math
import threading

import numpy as np

__all__ = [
    "AutodiffError",
    "ContextError",
    "DomainError",
    "NonFiniteError",
    "Tape",
    "Var",
    "lift",
    "variable",
    "apply",
    "gradient",
    "add", "sub", "mul", "div", "neg",
    "sin", "cos", "exp", "tanh", "pow_int", "sqrt", "absval",
    "reduce_sum", "reduce_mean", "matmul", "transpose", "reshape",
    "broadcast_to", "concat_columns", "where",
    "value_of", "set_strict", "strict_enabled",
]


class AutodiffError(Exception):
    """Base class for autodiff failures."""


class ContextError(AutodiffError):
    """A value or tape was used outside its legal recording context."""


class DomainError(AutodiffError):
    """An operation was evaluated outside its mathematical domain."""


class NonFiniteError(AutodiffError):
    """A NaN or infinity appeared in a recorded computation."""


_tls = threading.local()

# When True, array-valued results are checked for NaN/inf at every operation.
# Scalar results are always checked (the check is nearly free).
_strict = True


def set_strict(flag):
    """Enable or disable per-operation finiteness checks on array values."""
    global _strict
    _strict = bool(flag)


def strict_enabled():
    return _strict


def _stack():
    try:
        return _tls.stack
    except AttributeError:
        _tls.stack = []
        return _tls.stack


class Tape:
    """A recording context: an append-only store of operations.

    Tapes nest; entering a tape inside another records operations on both,
    which is what makes gradients of gradients work.
    """

    __slots__ = ("_nodes", "_open", "_closed", "_thread", "nesting_depth")

    def __init__(self):
        self._nodes = []
        self._open = False
        self._closed = False
        self._thread = threading.get_ident()
        self.nesting_depth = 0

    def __enter__(self):
        if self._open or self._closed:
            raise ContextError("a Tape can be entered exactly once")
        if threading.get_ident() != self._thread:
            raise ContextError("a Tape may only be used on its creating thread")
        stack = _stack()
        self.nesting_depth = len(stack)
        stack.append(self)
        self._open = True
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise ContextError("recording contexts must close innermost-first")
        stack.pop()
        self._open = False
        self._closed = True
        return False

    def __len__(self):
        return len(self._nodes)

    def variable(self, value):
        """Wrap a plain value as an input variable of this tape."""
        if self._closed:
            raise ContextError("cannot create variables on a closed tape")
        return Var(_coerce(value), self)

    def gradient(self, output, sources, seed=None):
        """Adjoints of `output` with respect to `sources`.

        Must be called after the tape has closed.  Returns plain values at
        top level, or Vars when an enclosing tape is still recording.
        """
        if self._open:
            raise ContextError("close the recording context before replaying it")
        adjoints = {}
        if isinstance(output, Var):
            adjoints[id(output)] = 1.0 if seed is None else seed
        for out, parents, vjp in reversed(self._nodes):
            bar = adjoints.pop(id(out), None)
            if bar is None:
                continue
            for parent, contrib in zip(parents, vjp(bar)):
                if contrib is None:
                    continue
                key = id(parent)
                prev = adjoints.get(key)
                adjoints[key] = contrib if prev is None else add(prev, contrib)
        results = []
        recording = bool(_stack())
        for s in sources:
            g = adjoints.get(id(s))
            if g is None:
                g = _zeros_like(s)
            elif not recording:
                g = value_of(g)
            results.append(g)
        return results


class Var:
    """A value participating in a recordable computation graph."""

    __slots__ = ("value", "_ctx")

    def __init__(self, value, ctx=None):
        self.value = value
        self._ctx = ctx

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f"Var({self.value!r})"

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
        return neg(self)

    def __pow__(self, n):
        return pow_int(self, n)

    def __abs__(self):
        return absval(self)


def lift(c):
    """A constant: value c, zero derivative with respect to everything."""
    return Var(_coerce(c), None)


def variable(value):
    """An input variable bound to the innermost active tape."""
    stack = _stack()
    if not stack:
        raise ContextError("variable() requires an active recording context")
    return stack[-1].variable(value)


def value_of(x):
    """The plain numeric payload of a Var, or x itself."""
    return x.value if isinstance(x, Var) else x


def _coerce(v):
    if isinstance(v, Var):
        raise TypeError("value is already a Var")
    if isinstance(v, np.ndarray):
        return v if v.dtype == np.float64 else v.astype(np.float64)
    if isinstance(v, (list, tuple)):
        return np.asarray(v, dtype=np.float64)
    return float(v)


def _zeros_like(x):
    v = value_of(x)
    if isinstance(v, np.ndarray):
        return np.zeros_like(v)
    return 0.0


def _check_finite(out, op):
    if isinstance(out, float):
        if not math.isfinite(out):
            raise NonFiniteError(f"non-finite result in '{op}'")
    elif _strict:
        if not np.isfinite(out).all():
            raise NonFiniteError(f"non-finite result in '{op}'")
    return out


def _record(value, parents, vjp, op):
    """Build the result Var and append the node to every active tape."""
    _check_finite(value, op)
    stack = _stack()
    out = Var(value, stack[-1] if stack else None)
    if stack:
        node = (out, parents, vjp)
        for tape in stack:
            tape._nodes.append(node)
    return out


def _prep(op, *args):
    """Split args into raw values and Var parents, validating contexts."""
    raws = []
    has_var = False
    tid = threading.get_ident()
    for a in args:
        if isinstance(a, Var):
            has_var = True
            ctx = a._ctx
            if ctx is not None and ctx._open and ctx._thread != tid:
                raise ContextError(
                    f"'{op}' mixes values from a recording context owned by "
                    "another thread"
                )
            raws.append(a.value)
        else:
            raws.append(a if isinstance(a, (float, np.ndarray)) else _coerce(a))
    return raws, has_var


def _unbroadcast(g, shape):
    """Reduce an adjoint back to the shape of the parent it flows into."""
    gshape = np.shape(value_of(g))
    if gshape == shape:
        return g
    while len(np.shape(value_of(g))) > len(shape):
        g = reduce_sum(g, axis=0)
    axes = tuple(
        i for i, (gd, sd) in enumerate(zip(np.shape(value_of(g)), shape))
        if sd == 1 and gd != 1
    )
    if axes:
        g = reduce_sum(g, axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# Elementwise arithmetic


def add(a, b):
    (av, bv), rec = _prep("add", a, b)
    out = av + bv
    if not rec:
        return _check_finite(out, "add")
    ash, bsh = np.shape(av), np.shape(bv)

    def vjp(g):
        return (
            _unbroadcast(g, ash) if isinstance(a, Var) else None,
            _unbroadcast(g, bsh) if isinstance(b, Var) else None,
        )

    return _record(out, (a, b), vjp, "add")


def sub(a, b):
    (av, bv), rec = _prep("sub", a, b)
    out = av - bv
    if not rec:
        return _check_finite(out, "sub")
    ash, bsh = np.shape(av), np.shape(bv)

    def vjp(g):
        return (
            _unbroadcast(g, ash) if isinstance(a, Var) else None,
            _unbroadcast(neg(g), bsh) if isinstance(b, Var) else None,
        )

    return _record(out, (a, b), vjp, "sub")


def mul(a, b):
    (av, bv), rec = _prep("mul", a, b)
    out = av * bv
    if not rec:
        return _check_finite(out, "mul")
    ash, bsh = np.shape(av), np.shape(bv)

    def vjp(g):
        return (
            _unbroadcast(mul(g, b), ash) if isinstance(a, Var) else None,
            _unbroadcast(mul(g, a), bsh) if isinstance(b, Var) else None,
        )

    return _record(out, (a, b), vjp, "mul")


def div(a, b):
    (av, bv), rec = _prep("div", a, b)
    if isinstance(bv, float):
        if bv == 0.0:
            raise DomainError("division by zero")
    elif np.any(bv == 0.0):
        raise DomainError("division by zero")
    out = av / bv
    if not rec:
        return _check_finite(out, "div")
    ash, bsh = np.shape(av), np.shape(bv)

    def vjp(g):
        ga = _unbroadcast(div(g, b), ash) if isinstance(a, Var) else None
        gb = None
        if isinstance(b, Var):
            gb = _unbroadcast(neg(div(mul(g, a), mul(b, b))), bsh)
        return (ga, gb)

    return _record(out, (a, b), vjp, "div")


def neg(a):
    (av,), rec = _prep("neg", a)
    out = -av
    if not rec:
        return out

    def vjp(g):
        return (neg(g),)

    return _record(out, (a,), vjp, "neg")


# ---------------------------------------------------------------------------
# Elementwise transcendental functions


def sin(a):
    (av,), rec = _prep("sin", a)
    out = np.sin(av) if isinstance(av, np.ndarray) else math.sin(av)
    if not rec:
        return out

    def vjp(g):
        return (mul(g, cos(a)),)

    return _record(out, (a,), vjp, "sin")


def cos(a):
    (av,), rec = _prep("cos", a)
    out = np.cos(av) if isinstance(av, np.ndarray) else math.cos(av)
    if not rec:
        return out

    def vjp(g):
        return (neg(mul(g, sin(a))),)

    return _record(out, (a,), vjp, "cos")


def exp(a):
    (av,), rec = _prep("exp", a)
    if isinstance(av, np.ndarray):
        out = np.exp(av)
    else:
        try:
            out = math.exp(av)
        except OverflowError:
            raise NonFiniteError("exp overflowed to a non-finite value") from None
    if not rec:
        return _check_finite(out, "exp")
    res = _record(out, (a,), None, "exp")

    def vjp(g):
        return (mul(g, res),)

    _patch_vjp(res, vjp)
    return res


def tanh(a):
    (av,), rec = _prep("tanh", a)
    out = np.tanh(av) if isinstance(av, np.ndarray) else math.tanh(av)
    if not rec:
        return out
    res = _record(out, (a,), None, "tanh")

    def vjp(g):
        return (mul(g, sub(1.0, mul(res, res))),)

    _patch_vjp(res, vjp)
    return res


def sqrt(a):
    (av,), rec = _prep("sqrt", a)
    if isinstance(av, float):
        if av < 0.0:
            raise DomainError("sqrt of a negative value")
    elif np.any(av < 0.0):
        raise DomainError("sqrt of a negative value")
    out = np.sqrt(av) if isinstance(av, np.ndarray) else math.sqrt(av)
    if not rec:
        return out
    res = _record(out, (a,), None, "sqrt")

    def vjp(g):
        return (div(g, mul(2.0, res)),)

    _patch_vjp(res, vjp)
    return res


def pow_int(a, n):
    """a raised to a fixed integer power n (n is not differentiated)."""
    if not isinstance(n, int):
        raise TypeError("pow_int exponent must be a Python int")
    (av,), rec = _prep("pow_int", a)
    if n < 0 and (av == 0.0 if isinstance(av, float) else np.any(av == 0.0)):
        raise DomainError("zero raised to a negative power")
    out = av ** n
    if not rec:
        return _check_finite(out, "pow_int")

    def vjp(g):
        if n == 0:
            return (mul(g, 0.0),)
        return (mul(g, mul(float(n), pow_int(a, n - 1))),)

    return _record(out, (a,), vjp, "pow_int")


def absval(a):
    """|a|, with subgradient 0 at 0."""
    (av,), rec = _prep("abs", a)
    out = np.abs(av) if isinstance(av, np.ndarray) else abs(av)
    if not rec:
        return out
    sign = np.sign(av) if isinstance(av, np.ndarray) else float(np.sign(av))

    def vjp(g):
        return (mul(g, sign),)

    return _record(out, (a,), vjp, "abs")


def _patch_vjp(res, vjp):
    """Install a vjp that closes over the result Var itself."""
    for tape in _stack():
        out, parents, _ = tape._nodes[-1]
        if out is res:
            tape._nodes[-1] = (out, parents, vjp)


# ---------------------------------------------------------------------------
# Shape and reduction operations (array values)


def reduce_sum(a, axis=None, keepdims=False):
    (av,), rec = _prep("reduce_sum", a)
    out = np.sum(av, axis=axis, keepdims=keepdims)
    if np.ndim(out) == 0:
        out = float(out)
    if not rec:
        return _check_finite(out, "reduce_sum")
    in_shape = np.shape(av)

    def vjp(g):
        if axis is None or not keepdims:
            exp_shape = list(in_shape)
            if axis is None:
                exp_shape = [1] * len(in_shape)
            else:
                axes = axis if isinstance(axis, tuple) else (axis,)
                for ax in axes:
                    exp_shape[ax] = 1
            g = reshape(g, tuple(exp_shape))
        return (broadcast_to(g, in_shape),)

    return _record(out, (a,), vjp, "reduce_sum")


def reduce_mean(a, axis=None, keepdims=False):
    av = value_of(a)
    if axis is None:
        count = av.size if isinstance(av, np.ndarray) else 1
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for ax in axes:
            count *= np.shape(av)[ax]
    return div(reduce_sum(a, axis=axis, keepdims=keepdims), float(count))


def reshape(a, shape):
    (av,), rec = _prep("reshape", a)
    out = np.reshape(av, shape)
    if not rec:
        return out
    in_shape = np.shape(av)

    def vjp(g):
        return (reshape(g, in_shape),)

    return _record(out, (a,), vjp, "reshape")


def broadcast_to(a, shape):
    (av,), rec = _prep("broadcast_to", a)
    out = np.ascontiguousarray(np.broadcast_to(av, shape))
    if not rec:
        return out
    in_shape = np.shape(av)

    def vjp(g):
        return (_unbroadcast(g, in_shape),)

    return _record(out, (a,), vjp, "broadcast_to")


def transpose(a):
    (av,), rec = _prep("transpose", a)
    out = np.transpose(av)
    if not rec:
        return out

    def vjp(g):
        return (transpose(g),)

    return _record(out, (a,), vjp, "transpose")


def matmul(a, b):
    (av, bv), rec = _prep("matmul", a, b)
    out = av @ bv
    if not rec:
        return _check_finite(out, "matmul")

    def vjp(g):
        ga = matmul(g, transpose(b)) if isinstance(a, Var) else None
        gb = matmul(transpose(a), g) if isinstance(b, Var) else None
        return (ga, gb)

    return _record(out, (a, b), vjp, "matmul")


def concat_columns(cols):
    """Stack 1-D values of equal length into an (N, d) matrix."""
    raws, rec = _prep("concat_columns", *cols)
    out = np.stack([np.asarray(r, dtype=np.float64) for r in raws], axis=1)
    if not rec:
        return out
    parents = tuple(cols)

    def vjp(g):
        return tuple(
            reshape(take_column(g, j), (out.shape[0],))
            if isinstance(c, Var) else None
            for j, c in enumerate(parents)
        )

    return _record(out, parents, vjp, "concat_columns")


def take_column(a, j):
    (av,), rec = _prep("take_column", a)
    out = np.ascontiguousarray(av[:, j])
    if not rec:
        return out
    n, d = np.shape(av)

    def vjp(g):
        cols = [g if k == j else np.zeros(n) for k in range(d)]
        return (concat_columns(cols),)

    return _record(out, (a,), vjp, "take_column")


def where(mask, a, b):
    """Elementwise select with a constant (non-differentiated) mask."""
    mask = np.asarray(value_of(mask), dtype=bool)
    (av, bv), rec = _prep("where", a, b)
    out = np.where(mask, av, bv)
    if not rec:
        return out
    ash, bsh = np.shape(av), np.shape(bv)

    def vjp(g):
        zero = np.zeros(np.shape(value_of(g)))
        ga = _unbroadcast(where(mask, g, zero), ash) if isinstance(a, Var) else None
        gb = _unbroadcast(where(mask, zero, g), bsh) if isinstance(b, Var) else None
        return (ga, gb)

    return _record(out, (a, b), vjp, "where")


# ---------------------------------------------------------------------------
# Public entry points


_OPS = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "neg": neg,
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "tanh": tanh,
    "pow-int": pow_int,
    "sqrt": sqrt,
    "abs": absval,
}


def apply(op, *args):
    """Apply a named operation to scalars, recording it if a tape is active."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(*args)


def gradient(f, x):
    """Gradient of a scalar-valued function f at the point x.

    x is a sequence of numbers and/or Vars.  When called inside an active
    recording context the returned components are Vars, so second and third
    derivatives are obtained by nesting gradient calls.
    """
    with Tape() as tape:
        xs = [xi if isinstance(xi, Var) else tape.variable(xi) for xi in x]
        y = f(*xs)
    return tape.gradient(y, xs)
