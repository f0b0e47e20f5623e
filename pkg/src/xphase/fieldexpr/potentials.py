"""Electromagnetic potentials (A, V) as expression trees, plus the named catalog."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .nodes import (
    VARIABLES,
    ZERO,
    Node,
    Param,
    add,
    compile_expr,
    const,
    diff,
    div,
    mul,
    neg,
    parameters,
    power,
    run_compiled,
    sub,
    to_source,
    Var,
)
from .parser import parse

#: Parameter names bound automatically from the physical constants.
RESERVED = ("c",)


@dataclass(frozen=True, eq=True)
class Potentials:
    A: tuple[Node, Node, Node]
    V: Node
    params: tuple[tuple[str, float], ...] = ()
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if len(self.A) != 3:
            raise ValueError("vector potential needs exactly three components")
        object.__setattr__(self, "A", tuple(self.A))
        object.__setattr__(self, "params", tuple(sorted((str(k), float(v)) for k, v in dict(self.params).items())))
        declared = set(dict(self.params)) | set(RESERVED)
        used = set().union(*(parameters(a) for a in self.A), parameters(self.V))
        missing = used - declared
        if missing:
            raise ValueError(f"potentials use undeclared parameters: {sorted(missing)}")

    @classmethod
    def from_source(cls, A, V, params: Mapping[str, float] | None = None, name: str = "custom") -> "Potentials":
        params = dict(params or {})
        allowed = set(params) | set(RESERVED)
        return cls(tuple(parse(a, allowed) for a in A), parse(V, allowed), tuple(params.items()), name)

    def env(self, c: float) -> dict[str, float]:
        env = dict(self.params)
        env["c"] = c
        return env

    def to_dict(self) -> dict:
        return {
            "A": [to_source(a) for a in self.A],
            "V": to_source(self.V),
            "params": dict(self.params),
        }

    # exact derivative tables; rows are A1, A2, A3, V and columns q1, q2, q3, t
    @cached_property
    def derivative_exprs(self) -> tuple[tuple[Node, ...], ...]:
        return tuple(tuple(diff(f, v) for v in VARIABLES) for f in (*self.A, self.V))

    @cached_property
    def field_exprs(self) -> tuple[tuple[Node, Node, Node], tuple[Node, Node, Node]]:
        """(B, E) with B = curl A and E = -(1/c) dA/dt - grad V."""
        d = self.derivative_exprs
        B = (
            sub(d[2][1], d[1][2]),
            sub(d[0][2], d[2][0]),
            sub(d[1][0], d[0][1]),
        )
        E = tuple(sub(div(neg(d[i][3]), Param("c")), d[3][i]) for i in range(3))
        return B, E

    @cached_property
    def _compiled(self):
        return {
            "A": [compile_expr(a) for a in self.A],
            "V": compile_expr(self.V),
            "d": [[compile_expr(x) for x in row] for row in self.derivative_exprs],
            "B": [compile_expr(x) for x in self.field_exprs[0]],
            "E": [compile_expr(x) for x in self.field_exprs[1]],
        }

    def vector_potential(self, q, t: float, c: float) -> np.ndarray:
        env = self.env(c)
        return np.array([run_compiled(f, q, t, env, f"A{i + 1}") for i, f in enumerate(self._compiled["A"])])

    def scalar_potential(self, q, t: float, c: float) -> float:
        return run_compiled(self._compiled["V"], q, t, self.env(c), "V")

    def jacobian(self, q, t: float, c: float) -> np.ndarray:
        """4x4 array of exact partials: rows (A1, A2, A3, V), columns (q1, q2, q3, t)."""
        env = self.env(c)
        return np.array([[run_compiled(f, q, t, env, "potential derivative") for f in row] for row in self._compiled["d"]])

    def fields(self, q, t: float, c: float) -> tuple[np.ndarray, np.ndarray]:
        env = self.env(c)
        B = np.array([run_compiled(f, q, t, env, f"B{i + 1}") for i, f in enumerate(self._compiled["B"])])
        E = np.array([run_compiled(f, q, t, env, f"E{i + 1}") for i, f in enumerate(self._compiled["E"])])
        return B, E


_CATALOG = {
    "free": (("0", "0", "0"), "0", {}),
    "uniform-B": (("-B0*q2/2", "B0*q1/2", "0"), "0", {"B0": 1.0}),
    "coulomb": (("0", "0", "0"), "k/sqrt(q1^2 + q2^2 + q3^2)", {"k": 1.0}),
    "plane-wave": (("0", "A0*sin(q1 - c*t)", "0"), "0", {"A0": 1.0}),
}

CATALOG_NAMES = tuple(_CATALOG)


def catalog(name: str, **params: float) -> Potentials:
    """Named potentials; keyword arguments override the default parameters."""
    try:
        A, V, defaults = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog potential {name!r}; known: {', '.join(CATALOG_NAMES)}") from None
    unknown = set(params) - set(defaults)
    if unknown:
        raise KeyError(f"catalog potential {name!r} has no parameters {sorted(unknown)}")
    merged = {**defaults, **params}
    return Potentials.from_source(A, V, merged, name=name)


def random_polynomial(rng: np.random.Generator, degree: int = 3, n_terms: int = 5, scale: float = 1.0) -> Node:
    """Random polynomial in (q1, q2, q3, t) with total degree <= ``degree``."""
    node: Node = ZERO
    for _ in range(n_terms):
        powers = rng.multinomial(int(rng.integers(0, degree + 1)), [0.25] * 4)
        term: Node = const(float(np.round(rng.uniform(-scale, scale), 6)))
        for v, n in zip(VARIABLES, powers):
            term = mul(term, power(Var(v), int(n)))
        node = add(node, term)
    return node
