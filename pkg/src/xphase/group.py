"""Galilei and alpha-deformed inertial groups acting on M and M^e.

Algebra elements are (xi, d, v, tau).  Each lift kind turns an element into a
:class:`~xphase.canon.QuadraticGenerator`; its quadratic form, evaluated at
p' = p, is the momentum map.  The algebra bracket follows the convention of
the group action: X_[g,h] = -[X_g, X_h] for the Lie bracket of vector fields
[X, Y] = DY.X - DX.Y.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .canon import PhasePoint, QuadraticGenerator, compose_infinitesimal
from .core import Constants, ExtendedState
from .numdiff import ScalarField, fd_jacobian, poisson_canonical

EQUIVARIANCE_TOL = 1e-7

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k], _EPS3[_i, _k, _j] = 1.0, -1.0


class GroupError(ValueError):
    pass


class BoostDomainError(GroupError, ArithmeticError):
    pass


def _vec3(x, name: str) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise GroupError(f"{name} must be a finite 3-vector")
    a.setflags(write=False)
    return a


def xi_from_axis(omega) -> np.ndarray:
    """xi[mu, nu] = sum_s omega_s eps[s, mu, nu], so that xi q = -omega x q."""
    return np.einsum("s,smn->mn", _vec3(omega, "axis"), _EPS3)


def axis_from_xi(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return np.array([xi[1, 2], xi[2, 0], xi[0, 1]])


@dataclass(frozen=True)
class GalileiElement:
    xi: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau: float = 0.0

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if xi.shape != (3, 3) or not np.all(np.isfinite(xi)):
            raise GroupError("xi must be a finite 3x3 matrix")
        if not np.array_equal(xi, -xi.T):
            raise GroupError("xi must be exactly antisymmetric")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "d", _vec3(self.d, "d"))
        object.__setattr__(self, "v", _vec3(self.v, "v"))
        tau = float(self.tau)
        if not np.isfinite(tau):
            raise GroupError("tau must be finite")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_axis(cls, omega=(0.0, 0.0, 0.0), d=(0.0, 0.0, 0.0), v=(0.0, 0.0, 0.0), tau: float = 0.0) -> "GalileiElement":
        return cls(xi_from_axis(omega), d, v, tau)

    @property
    def axis(self) -> np.ndarray:
        return axis_from_xi(self.xi)

    def as_vector(self) -> np.ndarray:
        """(v, d, axis, tau): the coordinates used by :data:`BASIS_NAMES`."""
        return np.concatenate([self.v, self.d, self.axis, [self.tau]])

    @classmethod
    def from_vector(cls, x) -> "GalileiElement":
        x = np.asarray(x, dtype=float)
        return cls.from_axis(x[6:9], x[3:6], x[0:3], x[9])

    def __add__(self, other: "GalileiElement") -> "GalileiElement":
        return GalileiElement(self.xi + other.xi, self.d + other.d, self.v + other.v, self.tau + other.tau)

    def scaled(self, a: float) -> "GalileiElement":
        return GalileiElement(a * self.xi, a * self.d, a * self.v, a * self.tau)

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.as_vector()) <= tol))


BASIS_NAMES = ("v_x", "v_y", "v_z", "d_x", "d_y", "d_z", "xi_x", "xi_y", "xi_z", "tau")


def basis_element(name: str) -> GalileiElement:
    try:
        i = BASIS_NAMES.index(name)
    except ValueError:
        raise GroupError(f"unknown basis element {name!r}") from None
    e = np.zeros(10)
    e[i] = 1.0
    return GalileiElement.from_vector(e)


@dataclass(frozen=True)
class LiftKind:
    tag: str
    alpha: Optional[int] = None

    TAGS = ("galilei_M", "galilei_Me", "alpha_Me")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise GroupError(f"unknown lift kind {self.tag!r}")
        if self.tag == "alpha_Me":
            if self.alpha not in (1, -1):
                raise GroupError(f"alpha_Me needs alpha = +1 or -1, got {self.alpha}")
        elif self.alpha is not None:
            raise GroupError(f"{self.tag} takes no alpha")

    @classmethod
    def galilei_M(cls) -> "LiftKind":
        return cls("galilei_M")

    @classmethod
    def galilei_Me(cls) -> "LiftKind":
        return cls("galilei_Me")

    @classmethod
    def alpha_Me(cls, alpha: int) -> "LiftKind":
        return cls("alpha_Me", alpha)

    @property
    def extended(self) -> bool:
        return self.tag != "galilei_M"

    @property
    def is_galilei(self) -> bool:
        return self.tag != "alpha_Me"

    def basis(self) -> tuple[str, ...]:
        return BASIS_NAMES if self.extended else BASIS_NAMES[:-1]

    def __str__(self) -> str:
        return self.tag if self.alpha is None else f"{self.tag}({self.alpha:+d})"


# -- spacetime actions -----------------------------------------------------------

def galilei_action_spacetime(g: GalileiElement, q, t: float, eps: float = 1.0):
    q = np.asarray(q, dtype=float)
    return q + eps * (g.xi @ q - g.d - t * g.v), t - eps * g.tau


def alpha_action_spacetime(g: GalileiElement, alpha: int, q, t: float, eps: float = 1.0, k: Constants = Constants()):
    if alpha not in (1, -1):
        raise GroupError("alpha must be +1 or -1")
    q = np.asarray(q, dtype=float)
    return q + eps * (g.xi @ q - g.d - t * g.v), t + eps * (-alpha * float(g.v @ q) / k.c**2 - g.tau)


# -- lifts and momentum maps -------------------------------------------------------

def _check_mass(kind: LiftKind, m: float):
    if kind.is_galilei and not (np.isfinite(m) and m > 0):
        raise GroupError(f"{kind} needs a mass m > 0, got {m}")


def lift(g: GalileiElement, kind: LiftKind, k: Constants = Constants(), m: float = 1.0, t: float = 0.0) -> QuadraticGenerator:
    """Quadratic generator of the lifted action.

    The M^e kinds give n = 4 generators with Y = (d, tau), tau shifting q0.
    ``galilei_M`` gives the n = 3 generator on M at time ``t`` (Y = d + t v).
    """
    _check_mass(kind, m)
    c = k.c
    if kind.tag == "galilei_M":
        if g.tau != 0.0:
            raise GroupError("the tau sector has no lift on M")
        z = np.zeros((3, 3))
        return QuadraticGenerator(m * g.v, g.d + t * g.v, g.xi, z, z)
    a = np.zeros((4, 4))
    a[:3, :3] = g.xi
    a[3, :3] = g.v / c
    if kind.tag == "alpha_Me":
        a[:3, 3] = kind.alpha * g.v / c
        X = np.zeros(4)
    else:
        X = np.append(m * g.v, 0.0)
    z = np.zeros((4, 4))
    return QuadraticGenerator(X, np.append(g.d, g.tau), a, z, z)


def lift_vector_field(g: GalileiElement, kind: LiftKind, k: Constants = Constants(), m: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Generated vector field on the canonical array (q, p); time-dependent on M."""
    if kind.extended:
        M, kv = lift(g, kind, k, m).affine()
        return lambda z: M @ np.asarray(z, dtype=float) + kv
    raise GroupError("galilei_M vector fields depend on t; use lift(..., t=t).affine()")


def momentum_map(g: GalileiElement, kind: LiftKind, k: Constants = Constants(), m: float = 1.0) -> ScalarField:
    """J_g as a field on M^e with exact gradient.

    For the M^e kinds this is the lift's quadratic form at p' = p.  On M it is
    J = m v.q - (d + t v).p + p.xi q, with t read from the state.
    """
    if kind.extended:
        return lift(g, kind, k, m).hamiltonian()
    _check_mass(kind, m)
    if g.tau != 0.0:
        raise GroupError("the tau sector has no momentum map on M")

    def fn(s, kk):
        return float(m * g.v @ s.q - (g.d + s.t * g.v) @ s.p + s.p @ g.xi @ s.q)

    def grad(s, kk):
        out = np.zeros(8)
        out[0:3] = m * g.v + g.xi.T @ s.p
        out[3] = -float(g.v @ s.p) / kk.c
        out[4:7] = -(g.d + s.t * g.v) + g.xi @ s.q
        return out

    return ScalarField(fn, grad, "J_M")


def algebra_bracket(g: GalileiElement, h: GalileiElement, kind: LiftKind, k: Constants = Constants()) -> GalileiElement:
    """Closed-form bracket, consistent with X_[g,h] = -[X_g, X_h]."""
    c = k.c
    xi = g.xi @ h.xi - h.xi @ g.xi
    v = g.xi @ h.v - h.xi @ g.v
    d = g.xi @ h.d - h.xi @ g.d
    tau = 0.0
    if kind.extended:
        d = d + (g.tau * h.v - h.tau * g.v) / c
    if kind.tag == "alpha_Me":
        xi = xi + kind.alpha / c**2 * (np.outer(g.v, h.v) - np.outer(h.v, g.v))
        tau = kind.alpha * (float(h.v @ g.d) - float(g.v @ h.d)) / c
    # the products of antisymmetric matrices commute into an antisymmetric one up to rounding
    xi = 0.5 * (xi - xi.T)
    return GalileiElement(xi, d, v, tau)


def generator_bracket(A: QuadraticGenerator, B: QuadraticGenerator) -> QuadraticGenerator:
    """Bracket of two b = c = 0 generators matching X_[A,B] = -[X_A, X_B]."""
    for G in (A, B):
        if np.any(G.b) or np.any(G.c_mat):
            raise GroupError("generator_bracket supports b = c = 0 only")
    z = np.zeros_like(A.a)
    return QuadraticGenerator(
        A.a @ B.X - B.a @ A.X,
        B.a.T @ A.Y - A.a.T @ B.Y,
        A.a @ B.a - B.a @ A.a,
        z,
        z,
    )


def lie_bracket(X: Callable, Y: Callable, z, h: float = 1e-5) -> np.ndarray:
    """[X, Y](z) = DY(z) X(z) - DX(z) Y(z), with numerical Jacobians."""
    z = np.asarray(z, dtype=float)
    return fd_jacobian(Y, z, h) @ X(z) - fd_jacobian(X, z, h) @ Y(z)


def cocycle(g: GalileiElement, h: GalileiElement, kind: LiftKind, k: Constants, m: float, z: ExtendedState) -> float:
    """Q(g; h) = {J_g, J_h} - J_[g,h] at z."""
    Jg, Jh = momentum_map(g, kind, k, m), momentum_map(h, kind, k, m)
    Jgh = momentum_map(algebra_bracket(g, h, kind, k), kind, k, m)
    return poisson_canonical(Jg, Jh, z, k) - Jgh(z, k)


def cocycle_samples(g, h, kind, k, m, samples: Iterable[ExtendedState]) -> np.ndarray:
    return np.array([cocycle(g, h, kind, k, m, z) for z in samples])


def random_states(rng: np.random.Generator, n: int, scale: float = 1.0) -> list[ExtendedState]:
    out = []
    for _ in range(n):
        x = rng.uniform(-scale, scale, 8)
        out.append(ExtendedState(q=x[0:3], p=x[4:7], t=x[3], E=x[7]))
    return out


@dataclass(frozen=True)
class CocycleEntry:
    a: str
    b: str
    value: float
    spread: float


@dataclass(frozen=True)
class EquivarianceReport:
    kind: str
    m: float
    tolerance: float
    entries: tuple[CocycleEntry, ...]

    @property
    def max_abs(self) -> float:
        return max((abs(e.value) for e in self.entries), default=0.0)

    @property
    def max_spread(self) -> float:
        return max((e.spread for e in self.entries), default=0.0)

    @property
    def witness(self) -> Optional[CocycleEntry]:
        best = None
        for e in self.entries:
            if best is None or abs(e.value) > abs(best.value):
                best = e
        return best

    @property
    def equivariant(self) -> bool:
        return self.max_abs <= self.tolerance

    @property
    def verdict(self) -> str:
        return "EQUIVARIANT" if self.equivariant else "NOT-EQUIVARIANT"

    def to_dict(self) -> dict:
        w = self.witness
        return {
            "kind": self.kind,
            "m": self.m,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "max_abs_cocycle": self.max_abs,
            "max_spread": self.max_spread,
            "witness": None if w is None or self.equivariant else {"pair": [w.a, w.b], "value": w.value},
            "table": [{"a": e.a, "b": e.b, "value": e.value, "spread": e.spread} for e in self.entries],
        }


def basis_pairs(kind: LiftKind) -> list[tuple[str, str]]:
    names = kind.basis()
    return [(names[i], names[j]) for i in range(len(names)) for j in range(i + 1, len(names))]


def equivariance_verdict(
    kind: LiftKind,
    k: Constants,
    m: float,
    pairs: Optional[Sequence[tuple[str, str]]] = None,
    samples: Sequence[ExtendedState] = (),
    tolerance: float = EQUIVARIANCE_TOL,
) -> EquivarianceReport:
    if not samples:
        samples = random_states(np.random.default_rng(0), 8)
    entries = []
    for a, b in pairs if pairs is not None else basis_pairs(kind):
        vals = cocycle_samples(basis_element(a), basis_element(b), kind, k, m, samples)
        entries.append(CocycleEntry(a, b, float(np.mean(vals)), float(np.ptp(vals))))
    return EquivarianceReport(str(kind), m, tolerance, tuple(entries))


# -- finite boosts ---------------------------------------------------------------

def _boost_geometry(V, alpha: int, k: Constants):
    """(n, ch, sh) with the boost acting on (x = q.n, q0) as
    x' = ch x - sh q0,  q0' = ch q0 - alpha sh x."""
    if alpha not in (1, -1):
        raise GroupError("alpha must be +1 or -1")
    V = _vec3(V, "V")
    speed = float(np.linalg.norm(V))
    if speed == 0.0:
        return np.zeros(3), 1.0, 0.0
    beta = speed / k.c
    if alpha == 1:
        if beta >= 1.0:
            raise BoostDomainError(f"|V| = {speed} must be below c = {k.c} for alpha = +1")
        root = np.sqrt(1.0 - beta * beta)
    else:
        root = np.sqrt(1.0 + beta * beta)
    return V / speed, 1.0 / root, beta / root


def rapidity(V, alpha: int, k: Constants = Constants()) -> float:
    """artanh(|V|/c) for alpha = +1, arctan(|V|/c) for alpha = -1."""
    speed = float(np.linalg.norm(_vec3(V, "V")))
    if alpha == 1:
        if speed >= k.c:
            raise BoostDomainError(f"|V| = {speed} must be below c = {k.c} for alpha = +1")
        return float(np.arctanh(speed / k.c))
    return float(np.arctan(speed / k.c))


def boost_finite(V, alpha: int, q, t: float, k: Constants = Constants()):
    n, ch, sh = _boost_geometry(V, alpha, k)
    q = np.asarray(q, dtype=float)
    x, q0 = float(q @ n), k.c * t
    x_new = ch * x - sh * q0
    q0_new = ch * q0 - alpha * sh * x
    return q + (x_new - x) * n, q0_new / k.c


def boost_momentum_finite(V, alpha: int, p, p0: float, k: Constants = Constants()):
    """Inverse-transpose of the coordinate boost on (p.n, p0)."""
    n, ch, sh = _boost_geometry(V, alpha, k)
    p = np.asarray(p, dtype=float)
    pn = float(p @ n)
    pn_new = ch * pn + alpha * sh * p0
    p0_new = ch * p0 + sh * pn
    return p + (pn_new - pn) * n, p0_new


def boost_map(V, alpha: int, k: Constants = Constants()) -> Callable[[PhasePoint], PhasePoint]:
    """Closed-form finite boost on n = 4 phase points (q, q0; p, p0)."""

    def f(z: PhasePoint) -> PhasePoint:
        q, t = boost_finite(V, alpha, z.q[:3], z.q[3] / k.c, k)
        p, p0 = boost_momentum_finite(V, alpha, z.p[:3], z.p[3], k)
        return PhasePoint(np.append(q, k.c * t), np.append(p, p0))

    return f


def boost_element(V, alpha: int, k: Constants = Constants()) -> GalileiElement:
    """The algebra element whose unit-time flow under alpha_Me is the finite boost V."""
    V = _vec3(V, "V")
    speed = float(np.linalg.norm(V))
    if speed == 0.0:
        return GalileiElement()
    return GalileiElement(v=k.c * rapidity(V, alpha, k) * V / speed)


def composed_boost(V, alpha: int, z: PhasePoint, K: int, k: Constants = Constants(), scheme: str = "midpoint") -> PhasePoint:
    """Finite boost as K composed infinitesimal alpha_Me steps."""
    g = lift(boost_element(V, alpha, k), LiftKind.alpha_Me(alpha), k)
    return compose_infinitesimal(g, z, 1.0, K, scheme)


def velocity_sum(u: float, w: float, alpha: int, k: Constants = Constants()) -> float:
    """Parallel composition: boost(u) o boost(w) = boost(velocity_sum(u, w))."""
    return (u + w) / (1.0 + alpha * u * w / k.c**2)


def invariant_quadratic(p, p0: float, alpha: int) -> float:
    p = np.asarray(p, dtype=float)
    return float(p @ p - alpha * p0 * p0)
