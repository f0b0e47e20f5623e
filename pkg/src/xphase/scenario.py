"""JSON scenario files (schema ``xphase/1``) and their validation.

Every validation failure raises :class:`ScenarioError` naming the offending
key path, e.g. ``constants.alpha`` or ``integrator.ds``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .core import Constants, ExtendedState, StateError
from .fieldexpr import ExprError, Potentials, catalog, parse
from .fieldexpr.potentials import CATALOG_NAMES
from .dynamics import steps_for
from .group import BASIS_NAMES, GalileiElement, GroupError, LiftKind, basis_element
from .hamiltonians import kinetic, potential_energy, relativistic
from .numdiff import ScalarField

VERSION = "xphase/1"
KINDS = ("simulate", "transform", "cocycle", "equivariance", "maxwell-check", "boost-table")
QUASI_ISOTROPY_TOL = 1e-12
U64_MAX = 2**64 - 1


class ScenarioError(ValueError):
    def __init__(self, key: str, message: str, code: str = "schema_error", offset: Optional[int] = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
        self.code = code
        self.offset = offset

    def as_dict(self) -> dict:
        d = {"error": self.code, "key": self.key, "message": str(self)}
        if self.offset is not None:
            d["offset"] = self.offset
        return d


# -- small schema helpers ---------------------------------------------------------

def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _obj(x, path: str, allowed: tuple[str, ...], required: tuple[str, ...] = ()) -> dict:
    if not isinstance(x, dict):
        raise ScenarioError(path, "expected an object")
    for key in x:
        if key not in allowed:
            raise ScenarioError(_join(path, key), "unknown key")
    for key in required:
        if key not in x:
            raise ScenarioError(_join(path, key), "required key missing")
    return x


def _num(x, path: str, *, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(path, f"expected a number, got {json.dumps(x)}")
    v = float(x)
    if not math.isfinite(v):
        raise ScenarioError(path, "must be finite")
    if positive and not v > 0:
        raise ScenarioError(path, f"must be > 0, got {v}")
    if nonneg and v < 0:
        raise ScenarioError(path, f"must be >= 0, got {v}")
    return v


def _int(x, path: str, lo: int = 1, hi: Optional[int] = None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ScenarioError(path, f"expected an integer, got {json.dumps(x)}")
    if x < lo or (hi is not None and x > hi):
        raise ScenarioError(path, f"out of range [{lo}, {hi if hi is not None else 'inf'}]: {x}")
    return x


def _vec(x, path: str, n: Optional[int] = 3) -> np.ndarray:
    if not isinstance(x, list) or (n is not None and len(x) != n):
        raise ScenarioError(path, f"expected a list of {n} numbers" if n else "expected a list of numbers")
    return np.array([_num(v, _join(path, i)) for i, v in enumerate(x)])


def _mat(x, path: str, n: int) -> np.ndarray:
    if not isinstance(x, list) or len(x) != n:
        raise ScenarioError(path, f"expected a {n}x{n} nested list")
    return np.array([_vec(row, _join(path, i), n) for i, row in enumerate(x)])


def _str(x, path: str, choices: Optional[tuple[str, ...]] = None) -> str:
    if not isinstance(x, str):
        raise ScenarioError(path, "expected a string")
    if choices is not None and x not in choices:
        raise ScenarioError(path, f"must be one of {', '.join(choices)}; got {x!r}")
    return x


def _params(x, path: str) -> dict[str, float]:
    if not isinstance(x, dict):
        raise ScenarioError(path, "expected an object of numbers")
    return {str(k): _num(v, _join(path, k)) for k, v in x.items()}


def _expr(src, path: str, allowed) -> Any:
    if not isinstance(src, str):
        raise ScenarioError(path, "expected an expression string")
    try:
        return parse(src, allowed)
    except ExprError as exc:
        raise ScenarioError(path, str(exc), code="parse_error", offset=getattr(exc, "offset", None)) from None


# -- specs -----------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianSpec:
    form: str = "kinetic"
    U: Optional[str] = None
    params: tuple = ()

    def build(self, k: Constants) -> ScalarField:
        H = kinetic(k.m) if self.form == "kinetic" else relativistic(k.m, k.alpha, k.c)
        if self.U is not None:
            H = H + potential_energy(self.U, dict(self.params))
        return H


@dataclass(frozen=True)
class IntegratorSpec:
    method: str = "rk4"
    ds: float = 1e-3
    steps: int = 1

    @property
    def s_end(self) -> float:
        return self.ds * self.steps


@dataclass(frozen=True)
class TransformSpec:
    generator: dict
    t: float = 0.0
    eps: float = 1.0
    K: int = 1000
    points: tuple = ()


@dataclass(frozen=True)
class BoostSpec:
    alpha: int
    velocities: tuple
    rows: tuple
    K: tuple = ()


@dataclass(frozen=True)
class GroupSpec:
    lift: LiftKind
    m: float = 1.0
    pairs: Optional[tuple] = None
    elements: tuple = ()


@dataclass(frozen=True)
class Scenario:
    kind: str
    constants: Constants = Constants()
    hamiltonian: HamiltonianSpec = HamiltonianSpec()
    potential: Optional[Potentials] = None
    potentials: tuple = ()
    states: tuple = ()
    integrator: IntegratorSpec = IntegratorSpec()
    group: Optional[GroupSpec] = None
    transform: Optional[TransformSpec] = None
    boost: Optional[BoostSpec] = None
    sample_count: int = 20
    sample_scale: float = 1.0
    gates: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    name: str = ""
    source: Optional[str] = None

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


GATE_DEFAULTS = {
    "simulate": {"dt_ds": 1e-9},
    "transform": {"symplecticity": 1e-8},
    "cocycle": {"spread": 1e-8},
    "equivariance": {"spread": 1e-8},
    "maxwell-check": {"homogeneous": 1e-12, "interior_product": 1e-7},
    "boost-table": {"invariant": 1e-10},
}
GATE_KEYS = {
    "simulate": ("dt_ds", "return_residual", "energy_drift", "energy_rate", "H_e_drift"),
    "transform": ("symplecticity", "newton_vs_composed"),
    "cocycle": ("spread", "value"),
    "equivariance": ("spread", "verdict"),
    "maxwell-check": ("homogeneous", "interior_product", "vacuum"),
    "boost-table": ("invariant", "composition"),
}
OUTPUT_DEFAULTS = {"report": "report.json", "trajectory": "trajectory.csv", "table": "boost_table.csv"}


def _constants(x, path: str) -> Constants:
    d = _obj(x, path, ("c", "e", "m", "alpha"))
    alpha = d.get("alpha", 1)
    if alpha not in (1, -1) or isinstance(alpha, bool):
        raise ScenarioError(_join(path, "alpha"), f"must be +1 or -1, got {json.dumps(alpha)}")
    kw = {key: _num(d[key], _join(path, key)) for key in ("c", "e", "m") if key in d}
    if "c" in kw and kw["c"] <= 0:
        raise ScenarioError(_join(path, "c"), "must be > 0")
    return Constants(alpha=int(alpha), **kw)


def _hamiltonian(x, path: str) -> HamiltonianSpec:
    d = _obj(x, path, ("form", "U", "params"))
    form = _str(d.get("form", "kinetic"), _join(path, "form"), ("kinetic", "relativistic"))
    params = _params(d.get("params", {}), _join(path, "params"))
    U = d.get("U")
    if U is not None:
        _expr(U, _join(path, "U"), set(params) | {"c"})
    return HamiltonianSpec(form, U, tuple(sorted(params.items())))


def _potential(x, path: str) -> Potentials:
    if isinstance(x, str):
        x = {"catalog": x}
    d = _obj(x, path, ("catalog", "A", "V", "params", "name"))
    params = _params(d.get("params", {}), _join(path, "params"))
    if "catalog" in d:
        if "A" in d or "V" in d:
            raise ScenarioError(path, "give either catalog or inline A/V, not both")
        name = _str(d["catalog"], _join(path, "catalog"), CATALOG_NAMES)
        try:
            return catalog(name, **params)
        except KeyError as exc:
            raise ScenarioError(_join(path, "params"), exc.args[0]) from None
    allowed = set(params) | {"c"}
    A = d.get("A", ["0", "0", "0"])
    if not isinstance(A, list) or len(A) != 3:
        raise ScenarioError(_join(path, "A"), "expected three expression strings")
    A_nodes = tuple(_expr(a, _join(_join(path, "A"), i), allowed) for i, a in enumerate(A))
    V_node = _expr(d.get("V", "0"), _join(path, "V"), allowed)
    name = _str(d.get("name", "inline"), _join(path, "name"))
    return Potentials(A_nodes, V_node, tuple(params.items()), name=name)


def _state(x, path: str) -> ExtendedState:
    d = _obj(x, path, ("q", "p", "t", "E"), ("q", "p"))
    try:
        return ExtendedState(
            q=_vec(d["q"], _join(path, "q")),
            p=_vec(d["p"], _join(path, "p")),
            t=_num(d.get("t", 0.0), _join(path, "t")),
            E=_num(d.get("E", 0.0), _join(path, "E")),
        )
    except StateError as exc:
        raise ScenarioError(path, str(exc)) from None


def quasi_isotropy_residual(s: ExtendedState, k: Constants) -> float:
    """Relative defect of p^2 - alpha p0^2 = -alpha m^2 c^2, or inf if sign(E) != alpha."""
    p0 = s.p0(k)
    if s.E == 0.0 or np.sign(s.E) != k.alpha:
        return math.inf
    lhs = float(s.p @ s.p) - k.alpha * p0 * p0
    rhs = -k.alpha * (k.m * k.c) ** 2
    return abs(lhs - rhs) / max(1.0, abs(rhs), float(s.p @ s.p), p0 * p0)


def _check_quasi_isotropy(s: ExtendedState, k: Constants, path: str):
    r = quasi_isotropy_residual(s, k)
    if not r <= QUASI_ISOTROPY_TOL:
        raise ScenarioError(
            path,
            f"state violates quasi-isotropy p^2 - alpha p0^2 = -alpha m^2 c^2 with sign(E) = alpha (relative defect {r:.3e})",
            code="quasi_isotropy",
        )


def _element(x, path: str) -> GalileiElement:
    if isinstance(x, str):
        if x not in BASIS_NAMES:
            raise ScenarioError(path, f"unknown basis element {x!r}")
        return basis_element(x)
    d = _obj(x, path, ("axis", "d", "v", "tau"))
    return GalileiElement.from_axis(
        _vec(d.get("axis", [0, 0, 0]), _join(path, "axis")),
        _vec(d.get("d", [0, 0, 0]), _join(path, "d")),
        _vec(d.get("v", [0, 0, 0]), _join(path, "v")),
        _num(d.get("tau", 0.0), _join(path, "tau")),
    )


def _lift_kind(x, path: str) -> LiftKind:
    if isinstance(x, str):
        x = {"kind": x}
    d = _obj(x, path, ("kind", "alpha"), ("kind",))
    tag = _str(d["kind"], _join(path, "kind"), LiftKind.TAGS)
    alpha = d.get("alpha")
    try:
        return LiftKind(tag, alpha)
    except GroupError as exc:
        raise ScenarioError(_join(path, "alpha"), str(exc)) from None


def _group(x, path: str, kind: str) -> GroupSpec:
    d = _obj(x, path, ("lift", "m", "pairs", "elements"), ("lift",))
    lk = _lift_kind(d["lift"], _join(path, "lift"))
    m = _num(d.get("m", 1.0), _join(path, "m"))
    if lk.is_galilei and not m > 0:
        raise ScenarioError(_join(path, "m"), f"{lk} needs m > 0")
    pairs = None
    if "pairs" in d:
        pp = d["pairs"]
        if not isinstance(pp, list):
            raise ScenarioError(_join(path, "pairs"), "expected a list of [a, b] pairs")
        pairs = []
        for i, pair in enumerate(pp):
            p_path = _join(_join(path, "pairs"), i)
            if not isinstance(pair, list) or len(pair) != 2:
                raise ScenarioError(p_path, "expected [a, b]")
            for j, name in enumerate(pair):
                _str(name, _join(p_path, j), lk.basis())
            pairs.append(tuple(pair))
        pairs = tuple(pairs)
    elements = ()
    if "elements" in d:
        ee = d["elements"]
        if not isinstance(ee, list) or len(ee) != 2:
            raise ScenarioError(_join(path, "elements"), "expected exactly two algebra elements")
        elements = tuple(_element(e, _join(_join(path, "elements"), i)) for i, e in enumerate(ee))
        if not lk.extended and any(e.tau != 0.0 for e in elements):
            raise ScenarioError(_join(path, "elements"), "galilei_M has no tau sector")
    if kind == "cocycle" and not elements:
        raise ScenarioError(_join(path, "elements"), "required key missing")
    return GroupSpec(lk, m, pairs, elements)


GENERATOR_TYPES = ("quadratic", "galilei-boost", "rotation", "scaling", "lift")


def _generator(x, path: str) -> dict:
    d = _obj(x, path, ("type", "X", "Y", "a", "b", "c", "V", "masses", "Omega", "n_particles", "kappa", "element", "lift", "m"), ("type",))
    typ = _str(d["type"], _join(path, "type"), GENERATOR_TYPES)
    out: dict = {"type": typ}
    if typ == "quadratic":
        X = _vec(d.get("X"), _join(path, "X"), None) if "X" in d else None
        if X is None:
            raise ScenarioError(_join(path, "X"), "required key missing")
        n = X.size
        out["X"] = X
        out["Y"] = _vec(d.get("Y", [0.0] * n), _join(path, "Y"), n)
        for key in ("a", "b", "c"):
            out[key] = _mat(d.get(key, np.zeros((n, n)).tolist()), _join(path, key), n)
        for key in ("b", "c"):
            if not np.array_equal(out[key], out[key].T):
                raise ScenarioError(_join(path, key), "must be symmetric")
    elif typ == "galilei-boost":
        out["V"] = _vec(d.get("V"), _join(path, "V")) if "V" in d else _missing(_join(path, "V"))
        masses = d.get("masses", [1.0])
        out["masses"] = _vec(masses, _join(path, "masses"), None)
        if out["masses"].size == 0 or np.any(out["masses"] <= 0):
            raise ScenarioError(_join(path, "masses"), "need at least one positive mass")
    elif typ == "rotation":
        out["Omega"] = _vec(d.get("Omega"), _join(path, "Omega")) if "Omega" in d else _missing(_join(path, "Omega"))
        out["n_particles"] = _int(d.get("n_particles", 1), _join(path, "n_particles"))
    elif typ == "scaling":
        out["kappa"] = _num(d.get("kappa"), _join(path, "kappa")) if "kappa" in d else _missing(_join(path, "kappa"))
        if out["kappa"] == -1.0:
            raise ScenarioError(_join(path, "kappa"), "kappa = -1 is singular")
    else:
        if "element" not in d:
            _missing(_join(path, "element"))
        out["element"] = _element(d["element"], _join(path, "element"))
        out["lift"] = _lift_kind(d.get("lift", "galilei_Me"), _join(path, "lift"))
        out["m"] = _num(d.get("m", 1.0), _join(path, "m"))
        if out["lift"].is_galilei and not out["m"] > 0:
            raise ScenarioError(_join(path, "m"), "must be > 0")
    return out


def _missing(path: str):
    raise ScenarioError(path, "required key missing")


def generator_dimension(gen: dict) -> int:
    typ = gen["type"]
    if typ == "quadratic":
        return gen["X"].size
    if typ == "galilei-boost":
        return 3 * gen["masses"].size
    if typ == "rotation":
        return 3 * gen["n_particles"]
    if typ == "lift":
        return 4 if gen["lift"].extended else 3
    return -1  # scaling works in any dimension


def _transform(x, path: str) -> TransformSpec:
    d = _obj(x, path, ("generator", "t", "eps", "K", "points"), ("generator", "points"))
    gen = _generator(d["generator"], _join(path, "generator"))
    n = generator_dimension(gen)
    pts = d["points"]
    if not isinstance(pts, list) or not pts:
        raise ScenarioError(_join(path, "points"), "expected a non-empty list of {q, p} points")
    points = []
    for i, pt in enumerate(pts):
        p_path = _join(_join(path, "points"), i)
        pd = _obj(pt, p_path, ("q", "p"), ("q", "p"))
        q = _vec(pd["q"], _join(p_path, "q"), None if n < 0 else n)
        p = _vec(pd["p"], _join(p_path, "p"), q.size)
        points.append((q, p))
    return TransformSpec(
        generator=gen,
        t=_num(d.get("t", 0.0), _join(path, "t")),
        eps=_num(d.get("eps", 1.0), _join(path, "eps")),
        K=_int(d.get("K", 1000), _join(path, "K")),
        points=tuple(points),
    )


def _boost(x, path: str, k: Constants) -> BoostSpec:
    d = _obj(x, path, ("velocities", "rows", "K", "enforce_quasi_isotropy"), ("velocities", "rows"))
    vs = d["velocities"]
    if not isinstance(vs, list) or not vs:
        raise ScenarioError(_join(path, "velocities"), "expected a non-empty list of 3-vectors")
    velocities = []
    for i, v in enumerate(vs):
        V = _vec(v, _join(_join(path, "velocities"), i))
        if k.alpha == 1 and np.linalg.norm(V) >= k.c:
            raise ScenarioError(_join(_join(path, "velocities"), i), f"|V| must be below c for alpha = +1", code="domain_error")
        velocities.append(V)
    rows = d["rows"]
    if not isinstance(rows, list) or not rows:
        raise ScenarioError(_join(path, "rows"), "expected a non-empty list of states")
    enforce = d.get("enforce_quasi_isotropy", True)
    if not isinstance(enforce, bool):
        raise ScenarioError(_join(path, "enforce_quasi_isotropy"), "expected true or false")
    states = []
    for i, r in enumerate(rows):
        r_path = _join(_join(path, "rows"), i)
        s = _state(r, r_path)
        if enforce:
            _check_quasi_isotropy(s, k, r_path)
        states.append(s)
    Ks = d.get("K", [])
    if not isinstance(Ks, list):
        raise ScenarioError(_join(path, "K"), "expected a list of step counts")
    Ks = tuple(_int(v, _join(_join(path, "K"), i)) for i, v in enumerate(Ks))
    return BoostSpec(k.alpha, tuple(velocities), tuple(states), Ks)


def _integrator(x, path: str) -> IntegratorSpec:
    d = _obj(x, path, ("method", "ds", "steps", "s_end"))
    method = _str(d.get("method", "rk4"), _join(path, "method"), ("rk4", "implicit-midpoint"))
    ds = _num(d.get("ds", 1e-3), _join(path, "ds"), positive=True)
    if "steps" in d and "s_end" in d:
        raise ScenarioError(path, "give either steps or s_end, not both")
    if "s_end" in d:
        s_end = _num(d["s_end"], _join(path, "s_end"), positive=True)
        steps, ds = steps_for(s_end, ds)
    else:
        steps = _int(d.get("steps", 1000), _join(path, "steps"))
    return IntegratorSpec(method, ds, steps)


def _gates(x, path: str, kind: str) -> dict:
    d = _obj(x, path, GATE_KEYS[kind])
    out = dict(GATE_DEFAULTS[kind])
    for key, v in d.items():
        if key == "verdict":
            out[key] = _str(v, _join(path, key), ("EQUIVARIANT", "NOT-EQUIVARIANT"))
        elif key == "value":
            out[key] = _vec(v, _join(path, key), 2)  # [expected, tolerance]
        else:
            out[key] = _num(v, _join(path, key), nonneg=True)
    return out


TOP_KEYS = (
    "version", "kind", "name", "constants", "hamiltonian", "potential", "potentials", "initial",
    "integrator", "group", "transform", "boost", "samples", "gates", "outputs", "seed",
)
REQUIRED = {
    "simulate": ("initial",),
    "transform": ("transform",),
    "cocycle": ("group",),
    "equivariance": ("group",),
    "maxwell-check": ("potentials",),
    "boost-table": ("boost",),
}


def parse_scenario(raw: Any, source: Optional[str] = None) -> Scenario:
    d = _obj(raw, "", TOP_KEYS, ("version", "kind"))
    if d["version"] != VERSION:
        raise ScenarioError("version", f"unsupported version {json.dumps(d['version'])}; expected {VERSION!r}")
    kind = _str(d["kind"], "kind", KINDS)
    for key in REQUIRED[kind]:
        if key not in d:
            raise ScenarioError(key, f"required for kind {kind}")
    k = _constants(d.get("constants", {}), "constants")
    ham = _hamiltonian(d.get("hamiltonian", {}), "hamiltonian")
    if ham.form == "relativistic" and k.m <= 0:
        raise ScenarioError("constants.m", "relativistic Hamiltonian needs m > 0")
    if ham.form == "kinetic" and kind == "simulate" and not k.m > 0:
        raise ScenarioError("constants.m", "kinetic Hamiltonian needs m > 0")
    pot = _potential(d["potential"], "potential") if "potential" in d else catalog("free")

    potentials = ()
    if "potentials" in d:
        pl = d["potentials"]
        if not isinstance(pl, list) or not pl:
            raise ScenarioError("potentials", "expected a non-empty list")
        potentials = tuple(_potential(p, _join("potentials", i)) for i, p in enumerate(pl))

    states = ()
    if "initial" in d:
        init = d["initial"]
        items = init if isinstance(init, list) else [init]
        base = "initial" if not isinstance(init, list) else None
        states = tuple(_state(s, base or _join("initial", i)) for i, s in enumerate(items))
        if not states:
            raise ScenarioError("initial", "expected at least one state")
        if ham.form == "relativistic":
            for i, s in enumerate(states):
                _check_quasi_isotropy(s, k, base or _join("initial", i))

    samples = _obj(d.get("samples", {}), "samples", ("count", "scale"))
    seed = d.get("seed", 0)
    seed = _int(seed, "seed", 0, U64_MAX)
    outputs = _obj(d.get("outputs", {}), "outputs", tuple(OUTPUT_DEFAULTS))
    outputs = {**OUTPUT_DEFAULTS, **{key: _str(v, _join("outputs", key)) for key, v in outputs.items()}}
    for key, v in outputs.items():
        if Path(v).is_absolute() or ".." in Path(v).parts:
            raise ScenarioError(_join("outputs", key), "must be a relative path inside the output directory")

    return Scenario(
        kind=kind,
        constants=k,
        hamiltonian=ham,
        potential=pot,
        potentials=potentials,
        states=states,
        integrator=_integrator(d.get("integrator", {}), "integrator"),
        group=_group(d["group"], "group", kind) if "group" in d else None,
        transform=_transform(d["transform"], "transform") if "transform" in d else None,
        boost=_boost(d["boost"], "boost", k) if "boost" in d else None,
        sample_count=_int(samples.get("count", 20), "samples.count"),
        sample_scale=_num(samples.get("scale", 1.0), "samples.scale", positive=True),
        gates=_gates(d.get("gates", {}), "gates", kind),
        outputs=outputs,
        seed=seed,
        name=_str(d.get("name", ""), "name"),
        source=source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError("", f"cannot read {path}: {exc.strerror}", code="io_error") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", code="json_error", offset=exc.pos) from None
    return parse_scenario(raw, str(path))
