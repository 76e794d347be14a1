"""Closed-form scalar expressions with exact evaluation and gradients.

Expressions are immutable trees built from variables, constants, n-ary sums and
products, integer powers, ``abs``, ``min``, ``max``, ``sin``, ``cos`` and
negation.  They print to and parse from a prefix s-expression syntax::

    (+ 1 (pow (var 0) 2))

Evaluation compiles the tree once into a numpy lambda, so the same function
accepts a single point of shape ``(n,)`` or a batch of shape ``(n, m)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Expr",
    "ExprSyntaxError",
    "DimensionError",
    "NonsmoothError",
    "var",
    "const",
    "add",
    "mul",
    "power",
    "absolute",
    "minimum",
    "maximum",
    "sin",
    "cos",
    "neg",
    "parse",
    "to_sexpr",
    "evaluate",
    "compile_expr",
    "compile_vector",
    "gradient",
    "value_and_grad",
    "substitute",
    "max_var_index",
    "as_expr",
]

_NARY = ("+", "*", "min", "max")
_UNARY = ("abs", "sin", "cos", "neg")


class ExprSyntaxError(ValueError):
    """Raised by :func:`parse` with the 1-based column of the offending token."""

    def __init__(self, message: str, column: int, text: str = ""):
        super().__init__(f"{message} (column {column})")
        self.column = column
        self.text = text


class DimensionError(ValueError):
    pass


class NonsmoothError(ArithmeticError):
    """Gradient requested at a kink of ``abs``, ``min`` or ``max``."""


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple = ()
    # const value, var index, or pow exponent
    value: float | int | None = None

    def __hash__(self):
        # trees are immutable, so the recursive hash is computed once
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.op, self.args, self.value))
            object.__setattr__(self, "_hash", h)
        return h

    # -- construction sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        if isinstance(other, Expr):
            return mul(self, power(other, -1))
        return mul(self, const(1.0 / float(other)))

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if int(k) != k:
            raise ValueError("only integer exponents are supported")
        return power(self, int(k))

    def __abs__(self):
        return absolute(self)

    def __str__(self):
        return to_sexpr(self)

    def __call__(self, x):
        return evaluate(self, x)


def as_expr(obj) -> Expr:
    if isinstance(obj, Expr):
        return obj
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return const(float(obj))
    raise TypeError(f"cannot convert {type(obj).__name__} to Expr")


def var(index: int) -> Expr:
    if index < 0:
        raise ValueError("variable index must be non-negative")
    return Expr("var", (), int(index))


def const(value: float) -> Expr:
    return Expr("const", (), float(value))


def add(*terms: Expr) -> Expr:
    if not terms:
        return const(0.0)
    if len(terms) == 1:
        return terms[0]
    return Expr("+", tuple(as_expr(t) for t in terms))


def mul(*factors: Expr) -> Expr:
    if not factors:
        return const(1.0)
    if len(factors) == 1:
        return factors[0]
    return Expr("*", tuple(as_expr(f) for f in factors))


def power(base: Expr, k: int) -> Expr:
    return Expr("pow", (as_expr(base),), int(k))


def absolute(e: Expr) -> Expr:
    return Expr("abs", (as_expr(e),))


def minimum(*args: Expr) -> Expr:
    if len(args) < 2:
        raise ValueError("min needs at least two arguments")
    return Expr("min", tuple(as_expr(a) for a in args))


def maximum(*args: Expr) -> Expr:
    if len(args) < 2:
        raise ValueError("max needs at least two arguments")
    return Expr("max", tuple(as_expr(a) for a in args))


def sin(e: Expr) -> Expr:
    return Expr("sin", (as_expr(e),))


def cos(e: Expr) -> Expr:
    return Expr("cos", (as_expr(e),))


def neg(e: Expr) -> Expr:
    return Expr("neg", (as_expr(e),))


# ---------------------------------------------------------------------------
# printing and parsing
# ---------------------------------------------------------------------------


def _fmt_number(v: float) -> str:
    # repr round-trips IEEE doubles exactly
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def to_sexpr(e: Expr) -> str:
    if e.op == "const":
        return _fmt_number(e.value)
    if e.op == "var":
        return f"(var {e.value})"
    if e.op == "pow":
        return f"(pow {to_sexpr(e.args[0])} {e.value})"
    inner = " ".join(to_sexpr(a) for a in e.args)
    return f"({e.op} {inner})"


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex)
        out.append((m.group(m.lastindex), start + 1))
        pos = m.end()
    return out


def parse(text: str) -> Expr:
    """Parse a prefix s-expression.  Bare numbers are constants."""
    tokens = _tokenize(text)
    if not tokens:
        raise ExprSyntaxError("empty expression", 1, text)
    expr, i = _parse_at(tokens, 0, text)
    if i != len(tokens):
        raise ExprSyntaxError(f"unexpected token {tokens[i][0]!r}", tokens[i][1], text)
    return expr


def _parse_number(tok: str, col: int, text: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ExprSyntaxError(f"unknown symbol {tok!r}", col, text) from None


def _parse_at(tokens, i, text):
    if i >= len(tokens):
        raise ExprSyntaxError("unexpected end of expression", len(text) + 1, text)
    tok, col = tokens[i]
    if tok == ")":
        raise ExprSyntaxError("unexpected ')'", col, text)
    if tok != "(":
        return const(_parse_number(tok, col, text)), i + 1
    if i + 1 >= len(tokens):
        raise ExprSyntaxError("unterminated '('", col, text)
    op, opcol = tokens[i + 1]
    j = i + 2
    if op == "var":
        if j >= len(tokens):
            raise ExprSyntaxError("unterminated (var ...)", opcol, text)
        idx_tok, idx_col = tokens[j]
        if not re.fullmatch(r"\d+", idx_tok):
            raise ExprSyntaxError("variable index must be a non-negative integer", idx_col, text)
        j += 1
        _expect_close(tokens, j, text, col)
        return var(int(idx_tok)), j + 1
    if op == "const":
        if j >= len(tokens):
            raise ExprSyntaxError("unterminated (const ...)", opcol, text)
        value = _parse_number(tokens[j][0], tokens[j][1], text)
        _expect_close(tokens, j + 1, text, col)
        return const(value), j + 2
    if op == "pow":
        base, j = _parse_at(tokens, j, text)
        if j >= len(tokens):
            raise ExprSyntaxError("unterminated (pow ...)", opcol, text)
        k_tok, k_col = tokens[j]
        if not re.fullmatch(r"[+-]?\d+", k_tok):
            raise ExprSyntaxError("pow exponent must be an integer", k_col, text)
        _expect_close(tokens, j + 1, text, col)
        return power(base, int(k_tok)), j + 2
    if op == "-":
        args, j = _parse_args(tokens, j, text)
        if len(args) == 1:
            return neg(args[0]), j + 1
        if len(args) == 2:
            return add(args[0], neg(args[1])), j + 1
        raise ExprSyntaxError("'-' takes one or two arguments", opcol, text)
    if op in _NARY:
        args, j = _parse_args(tokens, j, text)
        if op in ("min", "max") and len(args) < 2:
            raise ExprSyntaxError(f"'{op}' needs at least two arguments", opcol, text)
        if not args:
            raise ExprSyntaxError(f"'{op}' needs arguments", opcol, text)
        return Expr(op, tuple(args)), j + 1
    if op in _UNARY:
        args, j = _parse_args(tokens, j, text)
        if len(args) != 1:
            raise ExprSyntaxError(f"'{op}' takes exactly one argument", opcol, text)
        return Expr(op, tuple(args)), j + 1
    raise ExprSyntaxError(f"unknown operator {op!r}", opcol, text)


def _parse_args(tokens, j, text):
    args = []
    while True:
        if j >= len(tokens):
            raise ExprSyntaxError("missing ')'", len(text) + 1, text)
        if tokens[j][0] == ")":
            return args, j
        arg, j = _parse_at(tokens, j, text)
        args.append(arg)


def _expect_close(tokens, j, text, open_col):
    if j >= len(tokens) or tokens[j][0] != ")":
        col = tokens[j][1] if j < len(tokens) else len(text) + 1
        raise ExprSyntaxError(f"expected ')' closing form at column {open_col}", col, text)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def max_var_index(e: Expr) -> int:
    """Largest variable index used, or -1 for a constant expression."""
    k = e.__dict__.get("_max_var")
    if k is not None:
        return k
    if e.op == "var":
        k = e.value
    elif e.op == "const":
        k = -1
    else:
        k = max((max_var_index(a) for a in e.args), default=-1)
    object.__setattr__(e, "_max_var", k)
    return k


def _source(e: Expr) -> str:
    op = e.op
    if op == "const":
        v = e.value
        if math.isinf(v):
            return "_inf" if v > 0 else "(-_inf)"
        return f"({v!r})"
    if op == "var":
        return f"x[{e.value}]"
    if op == "+":
        return "(" + " + ".join(_source(a) for a in e.args) + ")"
    if op == "*":
        return "(" + " * ".join(_source(a) for a in e.args) + ")"
    if op == "pow":
        return f"({_source(e.args[0])} ** {e.value})"
    if op == "neg":
        return f"(-{_source(e.args[0])})"
    if op == "abs":
        return f"_abs({_source(e.args[0])})"
    if op == "sin":
        return f"_sin({_source(e.args[0])})"
    if op == "cos":
        return f"_cos({_source(e.args[0])})"
    if op in ("min", "max"):
        fn = "_minimum" if op == "min" else "_maximum"
        out = _source(e.args[-1])
        for a in reversed(e.args[:-1]):
            out = f"{fn}({_source(a)}, {out})"
        return out
    raise ValueError(f"unknown op {op!r}")


_NAMESPACE = {
    "_abs": np.abs,
    "_sin": np.sin,
    "_cos": np.cos,
    "_minimum": np.minimum,
    "_maximum": np.maximum,
    "_inf": math.inf,
}


@lru_cache(maxsize=4096)
def compile_expr(e: Expr) -> Callable:
    """Compile to ``f(x)`` where ``x`` indexes as ``x[i]``."""
    return eval(f"lambda x: {_source(e)}", dict(_NAMESPACE))  # noqa: S307 - generated source


@lru_cache(maxsize=1024)
def compile_vector(components: tuple[Expr, ...]) -> Callable:
    """Compile a vector-valued function returning a float array.

    Single point ``(n,)`` -> ``(k,)``; batch ``(n, m)`` -> ``(k, m)``.
    """
    body = ", ".join(_source(c) for c in components)
    raw = eval(f"lambda x: ({body},)", dict(_NAMESPACE))  # noqa: S307

    def f(x):
        vals = raw(x)
        if np.ndim(x) == 1:
            return np.array(vals, dtype=float)
        shape = np.shape(x)[1:]
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals])
    return f


def _check_dim(e: Expr, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    need = max_var_index(e) + 1
    if x.shape[0] < need:
        raise DimensionError(f"expression uses var {need - 1} but input has dimension {x.shape[0]}")
    return x


def evaluate(e: Expr, x) -> float | np.ndarray:
    x = _check_dim(e, x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = compile_expr(e)(x)
    if x.ndim == 1:
        return float(out)
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape[1:]).copy()


def _vg(e: Expr, x: np.ndarray, n: int, kinks: list, shape):
    """Forward-mode: returns (value, grad) with grad shape (n, *shape)."""
    op = e.op
    if op == "const":
        return np.full(shape, e.value), np.zeros((n,) + shape)
    if op == "var":
        g = np.zeros((n,) + shape)
        g[e.value] = 1.0
        return np.asarray(x[e.value], dtype=float), g
    if op == "+":
        v, g = _vg(e.args[0], x, n, kinks, shape)
        for a in e.args[1:]:
            va, ga = _vg(a, x, n, kinks, shape)
            v = v + va
            g = g + ga
        return v, g
    if op == "*":
        v, g = _vg(e.args[0], x, n, kinks, shape)
        for a in e.args[1:]:
            va, ga = _vg(a, x, n, kinks, shape)
            g = g * va + v * ga
            v = v * va
        return v, g
    if op == "pow":
        k = e.value
        v, g = _vg(e.args[0], x, n, kinks, shape)
        if k == 0:
            return np.ones(shape), np.zeros((n,) + shape)
        return v ** k, k * v ** (k - 1) * g
    if op == "neg":
        v, g = _vg(e.args[0], x, n, kinks, shape)
        return -v, -g
    if op == "abs":
        v, g = _vg(e.args[0], x, n, kinks, shape)
        kinks.append(v == 0)
        return np.abs(v), np.sign(v) * g
    if op == "sin":
        v, g = _vg(e.args[0], x, n, kinks, shape)
        return np.sin(v), np.cos(v) * g
    if op == "cos":
        v, g = _vg(e.args[0], x, n, kinks, shape)
        return np.cos(v), -np.sin(v) * g
    if op in ("min", "max"):
        pick = np.less if op == "min" else np.greater
        v, g = _vg(e.args[0], x, n, kinks, shape)
        for a in e.args[1:]:
            va, ga = _vg(a, x, n, kinks, shape)
            kinks.append(v == va)
            take = pick(va, v)
            v = np.where(take, va, v)
            g = np.where(take, ga, g)
        return v, g
    raise ValueError(f"unknown op {op!r}")


def value_and_grad(e: Expr, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched value and gradient.

    ``X`` has shape ``(n, m)`` (or ``(n,)``).  Returns ``(values (m,),
    grads (n, m), nonsmooth (m,) bool)``; gradients at flagged points are the
    one-sided branch and must not be trusted.
    """
    X = _check_dim(e, X)
    n = X.shape[0]
    shape = X.shape[1:]
    kinks: list = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v, g = _vg(e, X, n, kinks, shape)
    v = np.broadcast_to(np.asarray(v, dtype=float), shape)
    g = np.broadcast_to(g, (n,) + shape)
    nonsmooth = np.zeros(shape, dtype=bool)
    for k in kinks:
        nonsmooth |= np.broadcast_to(k, shape)
    return v.copy(), g.copy(), nonsmooth


def gradient(e: Expr, x: Sequence[float]) -> np.ndarray:
    """Exact gradient at a single point; raises :class:`NonsmoothError` at kinks."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("gradient expects a single point")
    _, g, bad = value_and_grad(e, x)
    if bool(bad):
        raise NonsmoothError(f"{to_sexpr(e)} is nonsmooth at {x.tolist()}")
    return g


def substitute(e: Expr, mapping: dict[int, Expr | float], reindex: dict[int, int] | None = None) -> Expr:
    """Replace variables by expressions/constants; optionally renumber the rest."""
    if e.op == "var":
        if e.value in mapping:
            return as_expr(mapping[e.value])
        if reindex is not None:
            return var(reindex[e.value])
        return e
    if e.op == "const":
        return e
    return Expr(e.op, tuple(substitute(a, mapping, reindex) for a in e.args), e.value)


def variables(e: Expr) -> set[int]:
    if e.op == "var":
        return {e.value}
    out: set[int] = set()
    for a in e.args:
        out |= variables(a)
    return out


def dot(coeffs: Iterable[float], offset: int = 0) -> Expr:
    """Linear form sum_i c_i x_{offset+i}, skipping zero coefficients."""
    terms = [mul(const(c), var(offset + i)) for i, c in enumerate(coeffs) if c != 0.0]
    return add(*terms) if terms else const(0.0)
