"""Equations of motion on M^e, with and without the electromagnetic coupling.

Integration runs in the physical chart (q, p, t, E), where p is the
kinetic momentum.  The minimal-coupling chart is only used for checks.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .core import Constants, ExtendedState, Tangent8, canonical_coords
from .fieldexpr import Node, Param, Potentials, add, diff, div, gradient, mul, sub
from .fieldexpr.nodes import compile_expr, run_compiled
from .hamiltonians import extended
from .numdiff import POISSON, ScalarField, grad8

TRAJECTORY_COLUMNS = ("s", "q1", "q2", "q3", "t", "p1", "p2", "p3", "E", "H_e_drift")


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_valid_index: int, trajectory: "Trajectory | None" = None):
        super().__init__(f"{message} (last valid step {last_valid_index})")
        self.last_valid_index = last_valid_index
        self.trajectory = trajectory


class StageConvergenceError(IntegrationError):
    pass


@dataclass(frozen=True)
class FieldStrengths:
    B: np.ndarray
    E_vec: np.ndarray


@dataclass
class Trajectory:
    s: np.ndarray  # (N+1,)
    y: np.ndarray  # (N+1, 8) in (q1, q2, q3, t, p1, p2, p3, E)
    method: str
    ds: float
    H_e: np.ndarray | None = None
    stage_iterations: list[int] = field(default_factory=list)

    def state(self, i: int) -> ExtendedState:
        return ExtendedState.from_array(self.y[i])

    @property
    def final(self) -> ExtendedState:
        return self.state(-1)

    @property
    def H_e_drift(self) -> np.ndarray:
        if self.H_e is None:
            return np.full(len(self.s), np.nan)
        return self.H_e - self.H_e[0]

    def dt_ds_error(self) -> float:
        """Largest per-step deviation of dt/ds from 1."""
        if len(self.s) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.y[:, 3]) / np.diff(self.s) - 1.0)))

    def write_csv(self, path) -> None:
        drift = self.H_e_drift
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_COLUMNS)
            for i in range(len(self.s)):
                w.writerow([repr(float(self.s[i])), *(repr(float(v)) for v in self.y[i]), repr(float(drift[i]))])


# -- right-hand sides ----------------------------------------------------------

def extended_rhs(H: ScalarField, s: ExtendedState, k: Constants = Constants()) -> Tangent8:
    """Hamilton equations on M^e generated by H^e = H + c p0 (so dt/ds = 1)."""
    g = grad8(H, s, k)
    return Tangent8(dq=g[4:7], dp=-g[0:3], dt=1.0, dE=k.c * g[3])


def field_strengths(pot: Potentials, q, t: float, k: Constants = Constants()) -> FieldStrengths:
    B, E = pot.fields(q, t, k.c)
    return FieldStrengths(B=B, E_vec=E)


def cross3(a, b) -> np.ndarray:
    """a x b for 3-vectors (np.cross carries heavy per-call overhead)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def em_rhs(H: ScalarField, pot: Potentials, s: ExtendedState, k: Constants = Constants()) -> Tangent8:
    """Lorentz-force dynamics and the mechanical energy rate."""
    g = grad8(H, s, k)
    B, E = pot.fields(s.q, s.t, k.c)
    dq = g[4:7]
    dp = -g[0:3] + k.e * (cross3(dq, B) / k.c + E)
    dE = k.e * float(dq @ E) + k.c * g[3]
    return Tangent8(dq=dq, dp=dp, dt=1.0, dE=dE)


def hamiltonian_rhs(He: ScalarField, s: ExtendedState, k: Constants = Constants(), poisson: np.ndarray = POISSON) -> Tangent8:
    """Flow of an arbitrary function He on M^e for a given Poisson matrix (canonical by default)."""
    xdot = poisson @ grad8(He, s, k)
    return Tangent8(dq=xdot[0:3], dp=xdot[4:7], dt=xdot[3] / k.c, dE=-k.c * xdot[7])


def primed_hamiltonian(H: ScalarField, pot: Potentials) -> ScalarField:
    """H^e in the minimal-coupling chart: H(q, p' - eA/c, t) - E' + eV.

    The returned field reads ``s.p`` as p' and ``s.E`` as E' = -c p0'.
    """

    def unshift(s, k):
        A = pot.vector_potential(s.q, s.t, k.c)
        return s.replace(p=s.p - k.e * A / k.c)

    return ScalarField(
        lambda s, k: H.fn(unshift(s, k), k) - s.E + k.e * pot.scalar_potential(s.q, s.t, k.c),
        None,
        "H^e'",
    )


def minimal_coupling(s: ExtendedState, pot: Potentials, k: Constants = Constants()) -> ExtendedState:
    """(p, p0) -> (p + eA/c, p0 - eV/c); returned as a state with E' = -c p0'."""
    A = pot.vector_potential(s.q, s.t, k.c)
    V = pot.scalar_potential(s.q, s.t, k.c)
    return s.replace(p=s.p + k.e * A / k.c, E=s.E + k.e * V)


def minimal_coupling_inverse(s: ExtendedState, pot: Potentials, k: Constants = Constants()) -> ExtendedState:
    A = pot.vector_potential(s.q, s.t, k.c)
    V = pot.scalar_potential(s.q, s.t, k.c)
    return s.replace(p=s.p - k.e * A / k.c, E=s.E - k.e * V)


# -- integration ---------------------------------------------------------------

def _finite(y) -> bool:
    return bool(np.all(np.isfinite(y)))


def integrate(
    rhs: Callable[[ExtendedState], Tangent8],
    s0: ExtendedState,
    ds: float,
    n_steps: int,
    method: str = "rk4",
    *,
    hamiltonian: ScalarField | None = None,
    k: Constants = Constants(),
    tol: float = 1e-12,
    max_iter: int = 100,
) -> Trajectory:
    """Fixed-step integration of ``rhs`` from ``s0``.

    ``hamiltonian`` (the mechanical H) only feeds the H^e = H - E drift record.
    """
    if not ds > 0:
        raise ValueError(f"ds must be > 0, got {ds}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if method not in ("rk4", "implicit-midpoint"):
        raise ValueError(f"unknown method {method!r}")

    def f(y):
        return rhs(ExtendedState.from_array(y)).as_array()

    y = np.empty((n_steps + 1, 8))
    y[0] = s0.as_array()
    iters: list[int] = []

    def partial(i):
        return Trajectory(s=ds * np.arange(i + 1), y=y[: i + 1].copy(), method=method, ds=ds)

    for n in range(n_steps):
        yn = y[n]
        try:
            if method == "rk4":
                k1 = f(yn)
                k2 = f(yn + 0.5 * ds * k1)
                k3 = f(yn + 0.5 * ds * k2)
                k4 = f(yn + ds * k3)
                y_next = yn + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                y_next = yn + ds * f(yn)
                for it in range(1, max_iter + 1):
                    y_new = yn + ds * f(0.5 * (yn + y_next))
                    diff = np.abs(y_new - y_next)
                    delta = float(np.max(diff))
                    y_next = y_new
                    # componentwise scale, so a large t does not loosen the phase-space test
                    if np.all(diff <= tol * np.maximum(1.0, np.abs(y_next))):
                        break
                else:
                    raise StageConvergenceError(f"implicit-midpoint stage did not converge (last update {delta:.3e})", n, partial(n))
                iters.append(it)
        except (ArithmeticError, ValueError) as exc:
            if isinstance(exc, IntegrationError):
                raise
            raise IntegrationError(f"right-hand side failed: {exc}", n, partial(n)) from None
        if not _finite(y_next):
            raise IntegrationError("non-finite state", n, partial(n))
        y[n + 1] = y_next

    traj = Trajectory(s=ds * np.arange(n_steps + 1), y=y, method=method, ds=ds, stage_iterations=iters)
    if hamiltonian is not None:
        traj.H_e = np.array([hamiltonian(traj.state(i), k) - y[i, 7] for i in range(n_steps + 1)])
    return traj


def steps_for(s_end: float, ds_max: float) -> tuple[int, float]:
    """Number of steps and the (possibly shortened) step landing exactly on s_end."""
    n = max(1, math.ceil(s_end / ds_max - 1e-9))
    return n, s_end / n


# -- gauge and structure checks ------------------------------------------------

def gauge_transform(pot: Potentials, f: Node, k: Constants = Constants(), params: dict | None = None) -> Potentials:
    """A -> A + grad f,  V -> V - (1/c) df/dt  (tree level)."""
    gf = gradient(f)
    A = tuple(add(a, g) for a, g in zip(pot.A, gf))
    V = sub(pot.V, div(diff(f, "t"), Param("c")))
    merged = {**dict(pot.params), **(params or {})}
    return Potentials(A, V, tuple(merged.items()), name=f"{pot.name}+gauge")


def symplectic_matrix(pot: Potentials, s: ExtendedState, k: Constants = Constants()) -> np.ndarray:
    """Coordinate matrix W of w^e(A, V) = w^e_0 + w_B + w_E, so that (i_X w)_b = sum_a X^a W[a, b].

    Basis (q1, q2, q3, q0, p1, p2, p3, p0).
    """
    B, E = pot.fields(s.q, s.t, k.c)
    ec = k.e / k.c
    F = np.zeros((4, 4))
    # w_B = -(e/c)(B1 dq2^dq3 + B2 dq3^dq1 + B3 dq1^dq2)
    F[1, 2], F[2, 0], F[0, 1] = -ec * B[0], -ec * B[1], -ec * B[2]
    F[2, 1], F[0, 2], F[1, 0] = ec * B[0], ec * B[1], ec * B[2]
    # w_E = -e E.dq ^ dt = -(e/c) E_j dq_j ^ dq0
    F[:3, 3] = -ec * E
    F[3, :3] = ec * E
    W = np.zeros((8, 8))
    W[:4, :4] = F
    W[:4, 4:] = np.eye(4)
    W[4:, :4] = -np.eye(4)
    return W


def interior_product_residual(H: ScalarField, pot: Potentials, s: ExtendedState, k: Constants = Constants()) -> float:
    """max |i_X w^e(A,V) - dH^e| with X the em_rhs vector field."""
    X = em_rhs(H, pot, s, k).canonical(k)
    lhs = X @ symplectic_matrix(pot, s, k)
    return float(np.max(np.abs(lhs - grad8(extended(H), s, k))))


def _curl(vec):
    return (
        sub(diff(vec[2], "q2"), diff(vec[1], "q3")),
        sub(diff(vec[0], "q3"), diff(vec[2], "q1")),
        sub(diff(vec[1], "q1"), diff(vec[0], "q2")),
    )


def maxwell_homogeneous_residual(
    pot: Potentials,
    samples: Iterable,
    k: Constants = Constants(),
    *,
    fields: tuple | None = None,
) -> tuple[float, float]:
    """(max |div B|, max |curl E + dB/dt|) over (q, t) samples, from exact derivatives.

    ``fields`` replaces the derived (B, E) trees; it exists so tests can
    inject configurations that do not come from potentials.
    """
    B, E = fields if fields is not None else pot.field_exprs
    divB = compile_expr(add(add(diff(B[0], "q1"), diff(B[1], "q2")), diff(B[2], "q3")))
    faraday = [compile_expr(add(ce, diff(b, "t"))) for ce, b in zip(_curl(E), B)]
    env = pot.env(k.c)
    r_div = r_far = 0.0
    for q, t in samples:
        r_div = max(r_div, abs(run_compiled(divB, q, t, env, "div B")))
        r_far = max(r_far, max(abs(run_compiled(fc, q, t, env, "curl E + dB/dt")) for fc in faraday))
    return r_div, r_far


def vacuum_residual(pot: Potentials, samples: Iterable, k: Constants = Constants()) -> tuple[float, float]:
    """(max |c div A + dV/dt|, max |(1/c^2) d2A/dt2 - lap A|)."""
    c = Param("c")
    gauge = compile_expr(add(
        mul(c, add(add(diff(pot.A[0], "q1"), diff(pot.A[1], "q2")), diff(pot.A[2], "q3"))),
        diff(pot.V, "t"),
    ))
    wave = []
    for a in pot.A:
        lap = add(add(diff(diff(a, "q1"), "q1"), diff(diff(a, "q2"), "q2")), diff(diff(a, "q3"), "q3"))
        wave.append(compile_expr(sub(div(div(diff(diff(a, "t"), "t"), c), c), lap)))
    env = pot.env(k.c)
    r_g = r_w = 0.0
    for q, t in samples:
        r_g = max(r_g, abs(run_compiled(gauge, q, t, env, "gauge condition")))
        r_w = max(r_w, max(abs(run_compiled(w, q, t, env, "wave operator")) for w in wave))
    return r_g, r_w
