"""Value types for the extended phase-space M^e = T*R^3 x T*R.

Points are stored in the physical chart (q, p, t, E).  The canonical chart
used by every bracket and symplectic check is the 8-vector

    (q1, q2, q3, q0, p1, p2, p3, p0),   q0 = c t,  p0 = -E / c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CANONICAL_NAMES = ("q1", "q2", "q3", "q0", "p1", "p2", "p3", "p0")


class StateError(ValueError):
    """Invalid (non-finite or mis-shaped) state or constants."""


def _frozen_vec(x, n: int, name: str) -> np.ndarray:
    a = np.array(x, dtype=float).reshape(-1)
    if a.shape != (n,):
        raise StateError(f"{name} must have {n} components, got shape {np.shape(x)}")
    if not all(map(math.isfinite, a.tolist())):
        raise StateError(f"{name} has non-finite components: {a}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Constants:
    c: float = 1.0
    e: float = 1.0
    m: float = 1.0
    alpha: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise StateError(f"c must be finite and > 0, got {self.c}")
        if not (np.isfinite(self.e) and np.isfinite(self.m)):
            raise StateError("e and m must be finite")
        if self.alpha not in (1, -1):
            raise StateError(f"alpha must be +1 or -1, got {self.alpha}")


@dataclass(frozen=True)
class ExtendedState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0
    E: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen_vec(self.q, 3, "q"))
        object.__setattr__(self, "p", _frozen_vec(self.p, 3, "p"))
        for name in ("t", "E"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise StateError(f"{name} is not finite: {v}")
            object.__setattr__(self, name, v)

    def q0(self, k: Constants) -> float:
        return k.c * self.t

    def p0(self, k: Constants) -> float:
        return -self.E / k.c

    def as_array(self) -> np.ndarray:
        """Physical chart (q1, q2, q3, t, p1, p2, p3, E)."""
        return np.concatenate([self.q, [self.t], self.p, [self.E]])

    @classmethod
    def from_array(cls, y) -> "ExtendedState":
        y = np.asarray(y, dtype=float)
        return cls(q=y[0:3], p=y[4:7], t=y[3], E=y[7])

    def replace(self, **changes) -> "ExtendedState":
        kw = dict(q=self.q, p=self.p, t=self.t, E=self.E)
        kw.update(changes)
        return ExtendedState(**kw)


@dataclass(frozen=True)
class Tangent8:
    dq: np.ndarray
    dp: np.ndarray
    dt: float = 1.0
    dE: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "dq", _frozen_vec(self.dq, 3, "dq"))
        object.__setattr__(self, "dp", _frozen_vec(self.dp, 3, "dp"))
        for name in ("dt", "dE"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise StateError(f"{name} is not finite: {v}")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        """Components in the physical chart order (q, t, p, E)."""
        return np.concatenate([self.dq, [self.dt], self.dp, [self.dE]])

    def canonical(self, k: Constants) -> np.ndarray:
        """Components along (q, q0, p, p0)."""
        return np.concatenate([self.dq, [k.c * self.dt], self.dp, [-self.dE / k.c]])


def canonical_coords(s: ExtendedState, k: Constants) -> np.ndarray:
    return np.array([*s.q, k.c * s.t, *s.p, -s.E / k.c])


def state_from_canonical(x, k: Constants) -> ExtendedState:
    x = np.asarray(x, dtype=float)
    if x.shape != (8,):
        raise StateError(f"canonical vector must have 8 components, got {x.shape}")
    return ExtendedState(q=x[0:3], p=x[4:7], t=x[3] / k.c, E=-x[7] * k.c)


def extended_hamiltonian(h_value: float, s: ExtendedState, k: Constants) -> float:
    """H^e = H + c p0, i.e. H - E."""
    return h_value + k.c * s.p0(k)
