"""Canonical transformations from generating functions S = q.p' + Phi(q, p', t).

The implicit map is

    p = p' + dPhi/dq(q, p', t),      q' = q + dPhi/dp'(q, p', t),

and the new Hamiltonian is H' = H + dPhi/dt.  Near the identity Phi is the
quadratic form of a :class:`QuadraticGenerator`, whose linearized map is
:func:`infinitesimal_map`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Constants, ExtendedState
from .numdiff import DEFAULT_STEP, ScalarField, fd_gradient, fd_jacobian


class DimensionError(ValueError):
    pass


class NewtonConvergenceError(ArithmeticError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"Newton iteration did not converge: residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class SingularJacobianError(ArithmeticError):
    pass


def _vec(x, name: str, n: int | None = None) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(-1)
    if n is not None and a.size != n:
        raise DimensionError(f"{name} must have {n} components, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q, p = _vec(self.q, "q"), _vec(self.p, "p")
        if q.size != p.size:
            raise DimensionError(f"q and p differ in length ({q.size} vs {p.size})")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, x) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], x[n:])

    @classmethod
    def from_state(cls, s: ExtendedState, k: Constants) -> "PhasePoint":
        """Extended slot order (q1, q2, q3, q0) / (p1, p2, p3, p0)."""
        return cls(np.append(s.q, k.c * s.t), np.append(s.p, -s.E / k.c))

    def to_state(self, k: Constants) -> ExtendedState:
        if self.n != 4:
            raise DimensionError("only n = 4 phase points map to extended states")
        return ExtendedState(q=self.q[:3], p=self.p[:3], t=self.q[3] / k.c, E=-self.p[3] * k.c)


@dataclass(frozen=True)
class QuadraticGenerator:
    """Phi = X.q - Y.p' + (q.b.q + p'.c.p')/2 - q.a.p'."""

    X: np.ndarray
    Y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c_mat: np.ndarray

    def __post_init__(self):
        X = _vec(self.X, "X")
        n = X.size
        Y = _vec(self.Y, "Y", n)
        mats = {}
        for name in ("a", "b", "c_mat"):
            m = np.array(getattr(self, name), dtype=float)
            if m.shape != (n, n):
                raise DimensionError(f"{name} must be {n}x{n}, got {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} has non-finite entries")
            m.setflags(write=False)
            mats[name] = m
        for name in ("b", "c_mat"):
            if not np.array_equal(mats[name], mats[name].T):
                raise ValueError(f"{name} must be exactly symmetric")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @property
    def n(self) -> int:
        return self.X.size

    @classmethod
    def zero(cls, n: int) -> "QuadraticGenerator":
        z = np.zeros((n, n))
        return cls(np.zeros(n), np.zeros(n), z, z, z)

    def scaled(self, eps: float) -> "QuadraticGenerator":
        return QuadraticGenerator(eps * self.X, eps * self.Y, eps * self.a, eps * self.b, eps * self.c_mat)

    def __add__(self, other: "QuadraticGenerator") -> "QuadraticGenerator":
        return QuadraticGenerator(self.X + other.X, self.Y + other.Y, self.a + other.a, self.b + other.b, self.c_mat + other.c_mat)

    def __neg__(self) -> "QuadraticGenerator":
        return self.scaled(-1.0)

    def affine(self) -> tuple[np.ndarray, np.ndarray]:
        """(M, k) with the generated vector field z -> M z + k on z = (q, p)."""
        M = np.block([[-self.a.T, self.c_mat], [-self.b, self.a]])
        return M, np.concatenate([-self.Y, -self.X])

    def vector_field(self, z: PhasePoint) -> np.ndarray:
        M, k = self.affine()
        return M @ z.as_array() + k

    def value(self, q, p) -> float:
        q, p = np.asarray(q, float), np.asarray(p, float)
        return float(self.X @ q - self.Y @ p + 0.5 * (q @ self.b @ q + p @ self.c_mat @ p) - q @ self.a @ p)

    def gradient(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        q, p = np.asarray(q, float), np.asarray(p, float)
        return self.X + self.b @ q - self.a @ p, -self.Y + self.c_mat @ p - self.a.T @ q

    def generating_function(self) -> "GeneratingFunction":
        return GeneratingFunction(
            value=lambda q, p, t: self.value(q, p),
            grad_q=lambda q, p, t: self.gradient(q, p)[0],
            grad_p=lambda q, p, t: self.gradient(q, p)[1],
            hess_qp=lambda q, p, t: -self.a,
            dt=lambda q, p, t: 0.0,
            name="quadratic",
        )

    def hamiltonian(self) -> ScalarField:
        """The generator as an observable on M^e (n = 4), with exact gradient.

        Its Hamiltonian vector field is :meth:`vector_field`.
        """
        if self.n != 4:
            raise DimensionError("hamiltonian() needs an n = 4 generator")

        def split(s, k):
            return np.append(s.q, k.c * s.t), np.append(s.p, -s.E / k.c)

        def grad(s, k):
            gq, gp = self.gradient(*split(s, k))
            return np.concatenate([gq, gp])

        return ScalarField(lambda s, k: self.value(*split(s, k)), grad, "J")


def infinitesimal_map(g: QuadraticGenerator, z: PhasePoint, eps: float = 1.0) -> PhasePoint:
    """q' = q + eps (-Y - a^T q + c p),  p' = p + eps (-X - b q + a p)."""
    if g.n != z.n:
        raise DimensionError(f"generator has n={g.n}, point has n={z.n}")
    dq = -g.Y - g.a.T @ z.q + g.c_mat @ z.p
    dp = -g.X - g.b @ z.q + g.a @ z.p
    return PhasePoint(z.q + eps * dq, z.p + eps * dp)


# -- generating functions --------------------------------------------------------

Grad = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class GeneratingFunction:
    """Phi(q, p', t) with optional exact partials; missing ones are taken numerically."""

    value: Callable[[np.ndarray, np.ndarray, float], float]
    grad_q: Optional[Grad] = None
    grad_p: Optional[Grad] = None
    hess_qp: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None
    dt: Optional[Callable[[np.ndarray, np.ndarray, float], float]] = None
    name: str = "Phi"

    def d_q(self, q, p, t) -> np.ndarray:
        if self.grad_q is not None:
            return np.asarray(self.grad_q(q, p, t), dtype=float)
        return fd_gradient(lambda x: self.value(x, p, t), q)

    def d_p(self, q, p, t) -> np.ndarray:
        if self.grad_p is not None:
            return np.asarray(self.grad_p(q, p, t), dtype=float)
        return fd_gradient(lambda x: self.value(q, x, t), p)

    def d_qp(self, q, p, t) -> np.ndarray:
        """H[i, j] = d^2 Phi / dq_i dp'_j."""
        if self.hess_qp is not None:
            return np.asarray(self.hess_qp(q, p, t), dtype=float)
        return fd_jacobian(lambda x: self.d_q(q, x, t), p)

    def d_t(self, q, p, t) -> float:
        if self.dt is not None:
            return float(self.dt(q, p, t))
        h = DEFAULT_STEP * max(1.0, abs(t))
        f = [self.value(q, p, t + s * h) for s in (-2, -1, 1, 2)]
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)


def zero_generating_function() -> GeneratingFunction:
    return GeneratingFunction(
        value=lambda q, p, t: 0.0,
        grad_q=lambda q, p, t: np.zeros_like(q),
        grad_p=lambda q, p, t: np.zeros_like(p),
        hess_qp=lambda q, p, t: np.zeros((q.size, p.size)),
        dt=lambda q, p, t: 0.0,
        name="0",
    )


def galilei_boost_generator(V, masses: Sequence[float]) -> GeneratingFunction:
    """Phi_v = sum_i V.(m_i q_i - t p'_i) for N particles (n = 3N)."""
    V = _vec(V, "V", 3)
    m = np.asarray(masses, dtype=float).reshape(-1)
    N = m.size
    Xq = np.concatenate([mi * V for mi in m])
    Vt = np.tile(V, N)

    def check(q):
        if q.size != 3 * N:
            raise DimensionError(f"expected {3 * N} coordinates for {N} particles, got {q.size}")

    def value(q, p, t):
        check(q)
        return float(Xq @ q - t * (Vt @ p))

    return GeneratingFunction(
        value=value,
        grad_q=lambda q, p, t: Xq.copy(),
        grad_p=lambda q, p, t: -t * Vt,
        hess_qp=lambda q, p, t: np.zeros((3 * N, 3 * N)),
        dt=lambda q, p, t: -float(Vt @ p),
        name="Phi_v",
    )


def cross_matrix(w) -> np.ndarray:
    """[w]_x with [w]_x u = w x u."""
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def rotation_generator(Omega, n_particles: int = 1) -> GeneratingFunction:
    """Phi_r = -t Omega.L with L = sum_i q_i x p'_i; t plays the role of the elapsed time."""
    Om = _vec(Omega, "Omega", 3)
    W = np.kron(np.eye(n_particles), cross_matrix(Om))

    def L(q, p):
        return sum(np.cross(q[3 * i: 3 * i + 3], p[3 * i: 3 * i + 3]) for i in range(n_particles))

    return GeneratingFunction(
        value=lambda q, p, t: -t * float(Om @ L(q, p)),
        grad_q=lambda q, p, t: t * (W @ p),
        grad_p=lambda q, p, t: -t * (W @ q),
        hess_qp=lambda q, p, t: t * W,
        dt=lambda q, p, t: -float(Om @ L(q, p)),
        name="Phi_r",
    )


def scaling_generator(kappa: float) -> GeneratingFunction:
    """Phi = kappa q.p'  (q' = (1 + kappa) q,  p' = p / (1 + kappa))."""
    return GeneratingFunction(
        value=lambda q, p, t: kappa * float(q @ p),
        grad_q=lambda q, p, t: kappa * p,
        grad_p=lambda q, p, t: kappa * q,
        hess_qp=lambda q, p, t: kappa * np.eye(q.size),
        dt=lambda q, p, t: 0.0,
        name="kappa q.p'",
    )


def solve_new_momentum(phi: GeneratingFunction, z: PhasePoint, t: float, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """Damped Newton solve of p = p' + dPhi/dq(q, p', t) for p'."""
    q, p = z.q, z.p
    pp = p.copy()

    def residual(x):
        return x + phi.d_q(q, x, t) - p

    r = residual(pp)
    rn = float(np.max(np.abs(r)))
    it = 0
    while rn > tol:
        if it >= max_iter:
            raise NewtonConvergenceError(rn, it)
        J = np.eye(q.size) + phi.d_qp(q, pp, t)
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(f"Newton Jacobian is singular at p'={pp}: {exc}") from None
        lam = 1.0
        for _ in range(40):
            cand = pp - lam * step
            r_c = residual(cand)
            rn_c = float(np.max(np.abs(r_c)))
            if rn_c <= rn or rn_c <= tol:
                break
            lam *= 0.5
        pp, r, rn = cand, r_c, rn_c
        it += 1
    return pp


def apply_generating_function(phi: GeneratingFunction, z: PhasePoint, t: float = 0.0, tol: float = 1e-12, max_iter: int = 50) -> PhasePoint:
    pp = solve_new_momentum(phi, z, t, tol, max_iter)
    return PhasePoint(z.q + phi.d_p(z.q, pp, t), pp)


def transformed_hamiltonian(H, phi: GeneratingFunction, z: PhasePoint, t: float, k: Constants = Constants()) -> float:
    """H' = H + dPhi/dt at the image of z.

    ``H`` is a callable ``H(q, p, t)`` or, for one particle, a :class:`ScalarField`.
    """
    if isinstance(H, ScalarField):
        field = H
        H = lambda q, p, tt: field(ExtendedState(q=q, p=p, t=tt, E=0.0), k)
    pp = solve_new_momentum(phi, z, t)
    return float(H(z.q, z.p, t)) + phi.d_t(z.q, pp, t)


def rotating_frame_step(Omega, dt: float, z: PhasePoint) -> PhasePoint:
    """q' = q - dt Omega x q,  p' = p - dt Omega x p, per particle block."""
    Om = _vec(Omega, "Omega", 3)
    if z.n % 3:
        raise DimensionError("rotating frame needs 3N coordinates")
    q = z.q.reshape(-1, 3)
    p = z.p.reshape(-1, 3)
    return PhasePoint((q - dt * np.cross(Om, q)).ravel(), (p - dt * np.cross(Om, p)).ravel())


def compose_infinitesimal(g: QuadraticGenerator, z: PhasePoint, eps: float, K: int, scheme: str = "midpoint") -> PhasePoint:
    """Finite map as K steps of size eps/K of the generator's vector field.

    ``euler`` repeats :func:`infinitesimal_map` (first order in 1/K);
    ``midpoint`` uses the implicit-midpoint (Cayley) form of each step,
    which is exactly symplectic and second order in 1/K.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if g.n != z.n:
        raise DimensionError(f"generator has n={g.n}, point has n={z.n}")
    M, kv = g.affine()
    h = eps / K
    x = z.as_array()
    if scheme == "euler":
        S = np.eye(M.shape[0]) + h * M
        b = h * kv
    elif scheme == "midpoint":
        lhs = np.eye(M.shape[0]) - 0.5 * h * M
        S = np.linalg.solve(lhs, np.eye(M.shape[0]) + 0.5 * h * M)
        b = np.linalg.solve(lhs, h * kv)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    for _ in range(K):
        x = S @ x + b
    return PhasePoint.from_array(x)


def symplectic_form(n: int) -> np.ndarray:
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


def symplecticity_residual(fmap: Callable[[PhasePoint], PhasePoint], z: PhasePoint, h: float = DEFAULT_STEP) -> float:
    """max |J^T W J - W| for the numerical Jacobian J of ``fmap`` at z."""
    J = fd_jacobian(lambda x: fmap(PhasePoint.from_array(x)).as_array(), z.as_array(), h)
    W = symplectic_form(z.n)
    return float(np.max(np.abs(J.T @ W @ J - W)))
