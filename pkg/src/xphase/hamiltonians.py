"""Hamiltonians in scope, each with an exact canonical gradient."""
from __future__ import annotations

import numpy as np

from .core import Constants, ExtendedState
from .fieldexpr import Node, compile_expr, diff, parse, to_source, VARIABLES
from .fieldexpr.nodes import run_compiled
from .numdiff import ScalarField


def kinetic(m: float) -> ScalarField:
    """H = p^2 / 2m."""
    if not m > 0:
        raise ValueError(f"mass must be > 0, got {m}")

    def grad(s, k):
        g = np.zeros(8)
        g[4:7] = s.p / m
        return g

    return ScalarField(lambda s, k: float(s.p @ s.p) / (2.0 * m), grad, f"p^2/(2*{m})")


def relativistic(m: float, alpha: int, c: float) -> ScalarField:
    """H = alpha c sqrt(m^2 c^2 + alpha p^2)."""
    if alpha not in (1, -1):
        raise ValueError("alpha must be +1 or -1")

    def root(p):
        r2 = m * m * c * c + alpha * float(p @ p)
        if r2 <= 0:
            raise ValueError(f"relativistic Hamiltonian undefined: m^2c^2 + alpha p^2 = {r2}")
        return np.sqrt(r2)

    def grad(s, k):
        g = np.zeros(8)
        g[4:7] = c * s.p / root(s.p)
        return g

    return ScalarField(lambda s, k: alpha * c * root(s.p), grad, "alpha*c*sqrt(m^2c^2 + alpha p^2)")


def potential_energy(U: Node | str, params: dict | None = None) -> ScalarField:
    """A scalar U(q, t) as a field on M^e, with exact gradient from the expression tree."""
    params = dict(params or {})
    if isinstance(U, str):
        U = parse(U, set(params) | {"c"})
    f = compile_expr(U)
    dfs = [compile_expr(diff(U, v)) for v in VARIABLES]

    def env(k):
        return {**params, "c": k.c}

    def fn(s, k):
        return run_compiled(f, s.q, s.t, env(k), "U")

    def grad(s, k):
        e = env(k)
        g = np.zeros(8)
        d = [run_compiled(df, s.q, s.t, e, "dU") for df in dfs]
        g[0:3] = d[0:3]
        g[3] = d[3] / k.c  # d/dq0 = (1/c) d/dt
        return g

    return ScalarField(fn, grad, f"U({to_source(U)})")


def energy_coordinate() -> ScalarField:
    """E as a field: E = -c p0."""

    def grad(s, k):
        g = np.zeros(8)
        g[7] = -k.c
        return g

    return ScalarField(lambda s, k: s.E, grad, "E")


def extended(H: ScalarField) -> ScalarField:
    """H^e = H + c p0 = H - E."""
    return H - energy_coordinate()
