"""Expression trees over (q1, q2, q3, t) and named parameters.

Trees are immutable.  The smart constructors (``add``, ``mul``, ...) apply
local simplification only: identities with 0 and 1, and constant folding.
Folded negative constants are kept as ``Unary('neg', Const(v))`` so that
every tree the library builds prints to text that parses back to the same
tree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union

VARIABLES = ("q1", "q2", "q3", "t")
FUNCTIONS = ("sin", "cos", "exp", "sqrt")
UNARY_OPS = ("neg",) + FUNCTIONS
BINARY_OPS = ("+", "-", "*", "/")


class ExprError(ValueError):
    code = "expr_error"

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (at byte offset {offset})")
        self.offset = offset

    def as_dict(self) -> dict:
        return {"error": self.code, "message": str(self), "offset": self.offset}


class UnboundParameterError(ExprError):
    code = "unbound_parameter"


class NonFiniteError(ExprError):
    code = "non_finite"


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exp: int


Node = Union[Const, Var, Param, Unary, Binary, Pow]

ZERO = Const(0.0)
ONE = Const(1.0)


# -- smart constructors ----------------------------------------------------

def const_value(node: Node) -> float | None:
    """Numeric value of a constant leaf (or negated constant), else None."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Unary) and node.op == "neg" and isinstance(node.arg, Const):
        return -node.arg.value
    return None


def const(v: float) -> Node:
    v = float(v)
    if v < 0:
        return Unary("neg", Const(-v))
    return Const(v + 0.0)  # drops -0.0


def _fold(v: float) -> Node | None:
    return const(v) if math.isfinite(v) else None


def neg(a: Node) -> Node:
    va = const_value(a)
    if va is not None:
        return const(-va)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def add(a: Node, b: Node) -> Node:
    va, vb = const_value(a), const_value(b)
    if va is not None and vb is not None:
        return _fold(va + vb) or Binary("+", a, b)
    if va == 0:
        return b
    if vb == 0:
        return a
    return Binary("+", a, b)


def sub(a: Node, b: Node) -> Node:
    va, vb = const_value(a), const_value(b)
    if va is not None and vb is not None:
        return _fold(va - vb) or Binary("-", a, b)
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    return Binary("-", a, b)


def mul(a: Node, b: Node) -> Node:
    va, vb = const_value(a), const_value(b)
    if va is not None and vb is not None:
        return _fold(va * vb) or Binary("*", a, b)
    if va == 0 or vb == 0:
        return ZERO
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    return Binary("*", a, b)


def div(a: Node, b: Node) -> Node:
    va, vb = const_value(a), const_value(b)
    if vb == 0:
        raise ExprError("division by a constant zero")
    if va is not None and vb is not None:
        return _fold(va / vb) or Binary("/", a, b)
    if va == 0:
        return ZERO
    if vb == 1:
        return a
    if vb == -1:
        return neg(a)
    return Binary("/", a, b)


def power(a: Node, n: int) -> Node:
    n = int(n)
    if n < 0:
        raise ExprError("negative integer exponents are not supported")
    if n == 0:
        return ONE
    if n == 1:
        return a
    va = const_value(a)
    if va is not None:
        return _fold(va**n) or Pow(a, n)
    return Pow(a, n)


_FOLD_FN = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "sqrt": math.sqrt}


def func(name: str, a: Node) -> Node:
    if name == "neg":
        return neg(a)
    if name not in _FOLD_FN:
        raise ExprError(f"unknown function {name!r}")
    va = const_value(a)
    if va is not None:
        try:
            folded = _fold(_FOLD_FN[name](va))
        except (ValueError, OverflowError):
            folded = None
        if folded is not None:
            return folded
    return Unary(name, a)


# -- printing ----------------------------------------------------------------

def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Pow):
        return 3
    if isinstance(node, Unary) and node.op == "neg":
        return 4
    return 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_source(node: Node) -> str:
    """Canonical text; ``parse(to_source(a)) == a`` for any tree built here."""
    if isinstance(node, Const):
        if node.value < 0:  # only reachable for hand-built trees
            return f"(-{_fmt_number(-node.value)})"
        return _fmt_number(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Unary):
        inner = to_source(node.arg)
        if node.op == "neg":
            return "-" + (inner if _prec(node.arg) >= 4 else f"({inner})")
        return f"{node.op}({inner})"
    if isinstance(node, Pow):
        inner = to_source(node.base)
        if _prec(node.base) < 4:
            inner = f"({inner})"
        return f"{inner}^{node.exp}"
    if isinstance(node, Binary):
        p = _prec(node)
        ls, rs = to_source(node.left), to_source(node.right)
        if _prec(node.left) < p:
            ls = f"({ls})"
        if _prec(node.right) <= p:
            rs = f"({rs})"
        sep = f" {node.op} " if node.op in "+-" else node.op
        return ls + sep + rs
    raise TypeError(f"not an expression node: {node!r}")


# -- queries -------------------------------------------------------------------

def free_symbols(node: Node) -> set[str]:
    if isinstance(node, (Var, Param)):
        return {node.name}
    if isinstance(node, Unary):
        return free_symbols(node.arg)
    if isinstance(node, Pow):
        return free_symbols(node.base)
    if isinstance(node, Binary):
        return free_symbols(node.left) | free_symbols(node.right)
    return set()


def parameters(node: Node) -> set[str]:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, Unary):
        return parameters(node.arg)
    if isinstance(node, Pow):
        return parameters(node.base)
    if isinstance(node, Binary):
        return parameters(node.left) | parameters(node.right)
    return set()


# -- evaluation ----------------------------------------------------------------

Compiled = Callable[[tuple, Mapping[str, float]], float]

_VAR_INDEX = {name: i for i, name in enumerate(VARIABLES)}


def _truediv(a: float, b: float) -> float:
    if b == 0.0:
        raise ZeroDivisionError("division by zero")
    return a / b


def compile_expr(node: Node) -> Compiled:
    """Closure ``f(x, env)`` with ``x = (q1, q2, q3, t)``; raises on domain errors."""
    if isinstance(node, Const):
        v = node.value
        return lambda x, env: v
    if isinstance(node, Var):
        i = _VAR_INDEX[node.name]
        return lambda x, env: x[i]
    if isinstance(node, Param):
        name = node.name

        def _param(x, env):
            try:
                return env[name]
            except KeyError:
                raise UnboundParameterError(f"parameter {name!r} is not bound") from None

        return _param
    if isinstance(node, Unary):
        f = compile_expr(node.arg)
        if node.op == "neg":
            return lambda x, env: -f(x, env)
        fn = _FOLD_FN[node.op]
        return lambda x, env: fn(f(x, env))
    if isinstance(node, Pow):
        f, n = compile_expr(node.base), node.exp
        return lambda x, env: f(x, env) ** n
    if isinstance(node, Binary):
        fl, fr = compile_expr(node.left), compile_expr(node.right)
        if node.op == "+":
            return lambda x, env: fl(x, env) + fr(x, env)
        if node.op == "-":
            return lambda x, env: fl(x, env) - fr(x, env)
        if node.op == "*":
            return lambda x, env: fl(x, env) * fr(x, env)
        return lambda x, env: _truediv(fl(x, env), fr(x, env))
    raise TypeError(f"not an expression node: {node!r}")


def run_compiled(f: Compiled, q, t: float, env: Mapping[str, float], label: str = "expression") -> float:
    x = (float(q[0]), float(q[1]), float(q[2]), float(t))
    try:
        v = float(f(x, env))
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        if isinstance(exc, ExprError):
            raise
        raise NonFiniteError(f"{label} is not finite at q={list(x[:3])}, t={x[3]}: {exc}") from None
    if not math.isfinite(v):
        raise NonFiniteError(f"{label} is not finite at q={list(x[:3])}, t={x[3]}")
    return v


def evaluate(node: Node, q, t: float, params: Mapping[str, float] | None = None) -> float:
    return run_compiled(compile_expr(node), q, t, params or {}, label=to_source(node))


# -- calculus ------------------------------------------------------------------

def diff(node: Node, var: str) -> Node:
    """Exact derivative with respect to one of q1, q2, q3, t."""
    if var not in VARIABLES:
        raise ExprError(f"cannot differentiate with respect to {var!r}")
    if isinstance(node, Const) or isinstance(node, Param):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if var not in free_symbols(node):
        return ZERO
    if isinstance(node, Unary):
        u, du = node.arg, diff(node.arg, var)
        if node.op == "neg":
            return neg(du)
        if node.op == "sin":
            return mul(func("cos", u), du)
        if node.op == "cos":
            return mul(neg(func("sin", u)), du)
        if node.op == "exp":
            return mul(func("exp", u), du)
        if node.op == "sqrt":
            return div(du, mul(Const(2.0), func("sqrt", u)))
    if isinstance(node, Pow):
        n = node.exp
        if n == 0:
            return ZERO
        return mul(mul(const(n), power(node.base, n - 1)), diff(node.base, var))
    if isinstance(node, Binary):
        a, b = node.left, node.right
        da, db = diff(a, var), diff(b, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        if node.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    raise TypeError(f"not an expression node: {node!r}")


def gradient(node: Node) -> tuple[Node, Node, Node]:
    return diff(node, "q1"), diff(node, "q2"), diff(node, "q3")
