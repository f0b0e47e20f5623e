"""Differentiation kernel and Poisson brackets on extended phase-space.

All gradients are taken in the canonical chart (q1, q2, q3, q0, p1, p2, p3, p0).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import CANONICAL_NAMES, Constants, ExtendedState, canonical_coords, state_from_canonical

DEFAULT_STEP = 1e-5

#: Canonical Poisson matrix: {f, g} = grad f . POISSON . grad g
POISSON = np.block([[np.zeros((4, 4)), np.eye(4)], [-np.eye(4), np.zeros((4, 4))]])


class DifferentiationError(ArithmeticError):
    def __init__(self, coordinate: str, detail: str = ""):
        super().__init__(f"non-finite evaluation while differentiating along {coordinate}" + (f": {detail}" if detail else ""))
        self.coordinate = coordinate


@dataclass(frozen=True)
class ScalarField:
    """A real observable on M^e.

    ``fn(state, k)`` must be deterministic and side-effect free; ``grad(state, k)``,
    if given, returns the exact canonical 8-gradient.
    """

    fn: Callable[[ExtendedState, Constants], float]
    grad: Optional[Callable[[ExtendedState, Constants], np.ndarray]] = None
    name: str = "field"

    def __call__(self, s: ExtendedState, k: Constants) -> float:
        return float(self.fn(s, k))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        grad = None
        if self.grad is not None and other.grad is not None:
            grad = lambda s, k: self.grad(s, k) + other.grad(s, k)
        return ScalarField(lambda s, k: self.fn(s, k) + other.fn(s, k), grad, f"{self.name} + {other.name}")

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        grad = None
        if self.grad is not None and other.grad is not None:
            grad = lambda s, k: self.grad(s, k) - other.grad(s, k)
        return ScalarField(lambda s, k: self.fn(s, k) - other.fn(s, k), grad, f"{self.name} - {other.name}")

    def scaled(self, a: float) -> "ScalarField":
        grad = None if self.grad is None else (lambda s, k: a * self.grad(s, k))
        return ScalarField(lambda s, k: a * self.fn(s, k), grad, f"{a}*{self.name}")

    def numeric(self) -> "ScalarField":
        """Same field with the exact gradient dropped."""
        return ScalarField(self.fn, None, self.name)

    @classmethod
    def on_canonical(cls, f, grad=None, name: str = "field") -> "ScalarField":
        """Build from functions of the canonical 8-vector."""
        g = None if grad is None else (lambda s, k: np.asarray(grad(canonical_coords(s, k)), dtype=float))
        return cls(lambda s, k: f(canonical_coords(s, k)), g, name)


def coordinate(index: int) -> ScalarField:
    """The canonical coordinate with the given slot (0..7) as a linear field."""
    e = np.zeros(8)
    e[index] = 1.0
    e.setflags(write=False)
    return ScalarField.on_canonical(lambda x: x[index], lambda x: e, CANONICAL_NAMES[index])


def grad8(f: ScalarField, s: ExtendedState, k: Constants = Constants(), h: float = DEFAULT_STEP) -> np.ndarray:
    if f.grad is not None:
        return np.asarray(f.grad(s, k), dtype=float)
    return fd_gradient(lambda x: f.fn(state_from_canonical(x, k), k), canonical_coords(s, k), h, CANONICAL_NAMES)


def fd_gradient(fun, x0, h: float = DEFAULT_STEP, names=None) -> np.ndarray:
    """Fourth-order central differences with steps h * max(1, |x_i|)."""
    x0 = np.asarray(x0, dtype=float)
    out = np.empty_like(x0)
    for i in range(x0.size):
        hi = h * max(1.0, abs(x0[i]))
        vals = []
        for step in (-2.0, -1.0, 1.0, 2.0):
            x = x0.copy()
            x[i] += step * hi
            try:
                v = float(fun(x))
            except (ArithmeticError, ValueError) as exc:
                raise DifferentiationError(names[i] if names else f"x[{i}]", str(exc)) from None
            if not np.isfinite(v):
                raise DifferentiationError(names[i] if names else f"x[{i}]")
            vals.append(v)
        out[i] = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * hi)
    return out


def fd_jacobian(fun, x0, h: float = DEFAULT_STEP) -> np.ndarray:
    """Jacobian of a vector map by the same fourth-order stencil, J[i, j] = d f_i / d x_j."""
    x0 = np.asarray(x0, dtype=float)
    cols = []
    for j in range(x0.size):
        hj = h * max(1.0, abs(x0[j]))
        vals = []
        for step in (-2.0, -1.0, 1.0, 2.0):
            x = x0.copy()
            x[j] += step * hj
            v = np.asarray(fun(x), dtype=float)
            if not np.all(np.isfinite(v)):
                raise DifferentiationError(f"x[{j}]")
            vals.append(v)
        cols.append((vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * hj))
    return np.stack(cols, axis=1)


def poisson_canonical(f: ScalarField, g: ScalarField, s: ExtendedState, k: Constants = Constants(), h: float = DEFAULT_STEP) -> float:
    """Bracket of the flat form  sum dq^mu ^ dp_mu  (mu = 0..3)."""
    gf, gg = grad8(f, s, k, h), grad8(g, s, k, h)
    return float(gf[:4] @ gg[4:] - gf[4:] @ gg[:4])


def minimal_coupling_jacobian(pot, s: ExtendedState, k: Constants) -> np.ndarray:
    """d(old canonical coords) / d(primed canonical coords) at s.

    The primed chart is (q, q0, p + eA/c, p0 - eV/c); the inverse shift is
    p = p' - eA/c, p0 = p0' + eV/c with A, V evaluated at (q, t).
    """
    c, e = k.c, k.e
    d = pot.jacobian(s.q, s.t, c)  # rows A1, A2, A3, V; cols q1, q2, q3, t
    G = np.zeros((4, 4))
    G[:3, :3] = -(e / c) * d[:3, :3]
    G[:3, 3] = -(e / c**2) * d[:3, 3]
    G[3, :3] = (e / c) * d[3, :3]
    G[3, 3] = (e / c**2) * d[3, 3]
    J = np.eye(8)
    J[4:, :4] = G
    return J


def field_poisson_tensor(pot, s: ExtendedState, k: Constants) -> np.ndarray:
    J = minimal_coupling_jacobian(pot, s, k)
    return J @ POISSON @ J.T


def poisson_field(f: ScalarField, g: ScalarField, pot, s: ExtendedState, k: Constants = Constants()) -> float:
    """Field-dependent bracket {f, g}^e_f.

    f and g are pulled back to the primed (minimal-coupling) chart, where the
    form is flat, and bracketed canonically there.
    """
    J = minimal_coupling_jacobian(pot, s, k)
    gf = J.T @ grad8(f, s, k)
    gg = J.T @ grad8(g, s, k)
    return float(gf[:4] @ gg[4:] - gf[4:] @ gg[:4])
