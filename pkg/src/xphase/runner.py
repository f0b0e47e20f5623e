"""Execute a validated :class:`~xphase.scenario.Scenario` and write its artifacts.

Every report is deterministic JSON (sorted keys, no timestamps) with a
``gates`` table; the exit code is 0 iff every gate passes.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import canon, dynamics, group
from .core import Constants, ExtendedState
from .numdiff import grad8
from .scenario import VERSION, Scenario

EXIT_OK, EXIT_GATE, EXIT_ERROR = 0, 1, 2

BOOST_COLUMNS = (
    "V1", "V2", "V3",
    "q1", "q2", "q3", "t", "p1", "p2", "p3", "E",
    "q1_prime", "q2_prime", "q3_prime", "t_prime", "p1_prime", "p2_prime", "p3_prime", "E_prime",
    "invariant", "invariant_prime",
)


@dataclass
class RunResult:
    exit_code: int
    report: dict
    artifacts: list[str] = field(default_factory=list)


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


class Gates:
    def __init__(self):
        self.table: dict[str, dict] = {}

    def upper(self, name: str, value: float, tol: float):
        ok = bool(np.isfinite(value) and value <= tol)
        self.table[name] = {"value": value, "tolerance": tol, "pass": ok}

    def equal(self, name: str, value, expected):
        self.table[name] = {"value": value, "expected": expected, "pass": value == expected}

    @property
    def passed(self) -> bool:
        return all(g["pass"] for g in self.table.values())


def _state_dict(s: ExtendedState) -> dict:
    return {"q": s.q, "p": s.p, "t": s.t, "E": s.E}


def _constants_dict(k: Constants) -> dict:
    return {"c": k.c, "e": k.e, "m": k.m, "alpha": k.alpha}


def _sample_states(rng, n: int, scale: float) -> list[ExtendedState]:
    return group.random_states(rng, n, scale)


def _sample_points(rng, n: int, scale: float, r_min: float) -> list[tuple[np.ndarray, float]]:
    """(q, t) pairs, rejecting |q| < r_min (keeps point sources off their singularity)."""
    out = []
    while len(out) < n:
        q = rng.uniform(-scale, scale, 3)
        t = float(rng.uniform(-scale, scale))
        if np.linalg.norm(q) >= r_min:
            out.append((q, t))
    return out


def _energy_rate_residual(traj: dynamics.Trajectory, H, pot, k: Constants) -> float:
    """max |dE/ds (5-point stencil on the samples) - (e qdot.E + dH/dt)| over interior samples."""
    E = traj.y[:, 7]
    n = len(E)
    if n < 5:
        return 0.0
    h = traj.ds
    measured = (E[:-4] - 8 * E[1:-3] + 8 * E[3:-1] - E[4:]) / (12 * h)
    worst = 0.0
    for j, i in enumerate(range(2, n - 2)):
        s = traj.state(i)
        g = grad8(H, s, k)
        _, Evec = pot.fields(s.q, s.t, k.c)
        predicted = k.e * float(g[4:7] @ Evec) + k.c * g[3]
        worst = max(worst, abs(measured[j] - predicted))
    return worst


def run_simulate(sc: Scenario, out: Path, rng) -> tuple[dict, Gates, list[str]]:
    k, pot, integ = sc.constants, sc.potential, sc.integrator
    H = sc.hamiltonian.build(k)
    gates, artifacts, runs = Gates(), [], []
    worst = {key: 0.0 for key in ("return_residual", "energy_drift", "H_e_drift", "energy_rate", "dt_ds")}
    for i, s0 in enumerate(sc.states):
        traj = dynamics.integrate(
            lambda s: dynamics.em_rhs(H, pot, s, k), s0, integ.ds, integ.steps, integ.method, hamiltonian=H, k=k
        )
        name = sc.outputs["trajectory"]
        if len(sc.states) > 1:
            p = Path(name)
            name = str(p.with_name(f"{p.stem}_{i}{p.suffix}"))
        traj.write_csv(out / name)
        artifacts.append(name)
        y0, y1 = traj.y[0], traj.y[-1]
        idx = [0, 1, 2, 4, 5, 6, 7]
        metrics = {
            "return_residual": float(np.max(np.abs(y1[idx] - y0[idx]))),
            "energy_drift": float(np.max(np.abs(traj.y[:, 7] - y0[7]))),
            "H_e_drift": float(np.max(np.abs(traj.H_e_drift))),
            "energy_rate": _energy_rate_residual(traj, H, pot, k),
            "dt_ds": traj.dt_ds_error(),
        }
        for key, v in metrics.items():
            worst[key] = max(worst[key], v)
        runs.append({
            "initial": _state_dict(s0),
            "final": _state_dict(traj.final),
            "trajectory": name,
            "s_end": float(traj.s[-1]),
            "stage_iterations_max": max(traj.stage_iterations, default=0),
            **metrics,
        })
    for key, tol in sc.gates.items():
        gates.upper(key, worst[key], tol)
    results = {
        "potential": pot.to_dict(),
        "hamiltonian": {"form": sc.hamiltonian.form, "U": sc.hamiltonian.U},
        "integrator": {"method": integ.method, "ds": integ.ds, "steps": integ.steps},
        "runs": runs,
    }
    return results, gates, artifacts


def _build_generator(spec: dict, eps: float, t: float, k: Constants):
    """(GeneratingFunction, QuadraticGenerator or None) scaled by eps."""
    typ = spec["type"]
    if typ == "quadratic":
        g = canon.QuadraticGenerator(spec["X"], spec["Y"], spec["a"], spec["b"], spec["c"]).scaled(eps)
        return g.generating_function(), g
    if typ == "lift":
        g = group.lift(spec["element"], spec["lift"], k, spec["m"], t).scaled(eps)
        return g.generating_function(), g
    if typ == "galilei-boost":
        return canon.galilei_boost_generator(eps * spec["V"], spec["masses"]), None
    if typ == "rotation":
        return canon.rotation_generator(eps * spec["Omega"], spec["n_particles"]), None
    return canon.scaling_generator(eps * spec["kappa"]), None


def run_transform(sc: Scenario, out: Path, rng) -> tuple[dict, Gates, list[str]]:
    tr, k = sc.transform, sc.constants
    phi, g = _build_generator(tr.generator, tr.eps, tr.t, k)
    H = sc.hamiltonian.build(k)
    rows, sym, disc = [], 0.0, 0.0

    def newton(z):
        return canon.apply_generating_function(phi, z, tr.t)

    for q, p in tr.points:
        z = canon.PhasePoint(q, p)
        zn = newton(z)
        r_newton = canon.symplecticity_residual(newton, z)
        row = {"q": q, "p": p, "newton": {"q": zn.q, "p": zn.p}, "symplecticity_newton": r_newton}
        sym = max(sym, r_newton)
        if g is not None:
            zi = canon.infinitesimal_map(g, z, 1.0)
            compose = lambda w: canon.compose_infinitesimal(g, w, 1.0, tr.K)
            zc = compose(z)
            r_comp = canon.symplecticity_residual(compose, z)
            d = float(np.max(np.abs(zn.as_array() - zc.as_array())))
            row.update({
                "infinitesimal": {"q": zi.q, "p": zi.p},
                "composed": {"q": zc.q, "p": zc.p},
                "symplecticity_composed": r_comp,
                "newton_vs_composed": d,
            })
            sym, disc = max(sym, r_comp), max(disc, d)
        if z.n == 3:
            row["H"] = H(ExtendedState(q=q, p=p, t=tr.t, E=0.0), k)
            row["H_prime"] = canon.transformed_hamiltonian(H, phi, z, tr.t, k)
        rows.append(row)
    gates = Gates()
    gates.upper("symplecticity", sym, sc.gates["symplecticity"])
    if "newton_vs_composed" in sc.gates:
        gates.upper("newton_vs_composed", disc, sc.gates["newton_vs_composed"])
    gen = {key: (str(v) if isinstance(v, (group.LiftKind,)) else v) for key, v in tr.generator.items()}
    if "element" in gen:
        gen["element"] = gen["element"].as_vector()
    results = {"generator": gen, "t": tr.t, "eps": tr.eps, "K": tr.K, "points": rows,
               "max_symplecticity": sym, "max_newton_vs_composed": disc if g is not None else None}
    return results, gates, []


def _element_dict(e: group.GalileiElement) -> dict:
    return {"axis": e.axis, "d": e.d, "v": e.v, "tau": e.tau}


def run_cocycle(sc: Scenario, out: Path, rng) -> tuple[dict, Gates, list[str]]:
    gs, k = sc.group, sc.constants
    g, h = gs.elements
    samples = _sample_states(rng, sc.sample_count, sc.sample_scale)
    vals = group.cocycle_samples(g, h, gs.lift, k, gs.m, samples)
    value, spread = float(np.mean(vals)), float(np.ptp(vals))
    results = {
        "lift": str(gs.lift),
        "m": gs.m,
        "g": _element_dict(g),
        "h": _element_dict(h),
        "bracket": _element_dict(group.algebra_bracket(g, h, gs.lift, k)),
        "value": value,
        "spread": spread,
        "samples": len(samples),
    }
    if gs.lift.is_galilei:
        results["galilei_closed_form"] = gs.m * (float(g.d @ h.v) - float(h.d @ g.v))
    gates = Gates()
    gates.upper("spread", spread, sc.gates["spread"])
    if "value" in sc.gates:
        expected, tol = sc.gates["value"]
        gates.upper("value", abs(value - expected), tol)
    return results, gates, []


def run_equivariance(sc: Scenario, out: Path, rng) -> tuple[dict, Gates, list[str]]:
    gs, k = sc.group, sc.constants
    samples = _sample_states(rng, sc.sample_count, sc.sample_scale)
    rep = group.equivariance_verdict(gs.lift, k, gs.m, gs.pairs, samples)
    gates = Gates()
    gates.upper("spread", rep.max_spread, sc.gates["spread"])
    if "verdict" in sc.gates:
        gates.equal("verdict", rep.verdict, sc.gates["verdict"])
    return rep.to_dict(), gates, []


def run_maxwell(sc: Scenario, out: Path, rng) -> tuple[dict, Gates, list[str]]:
    k = sc.constants
    H = sc.hamiltonian.build(k)
    points = _sample_points(rng, sc.sample_count, sc.sample_scale, 0.5 * sc.sample_scale)
    states = [
        ExtendedState(q=q, p=rng.uniform(-sc.sample_scale, sc.sample_scale, 3), t=t, E=float(rng.uniform(-1, 1)))
        for q, t in points
    ]
    rows, hom, ip, vac = [], 0.0, 0.0, 0.0
    for pot in sc.potentials:
        r_div, r_far = dynamics.maxwell_homogeneous_residual(pot, points, k)
        r_gauge, r_wave = dynamics.vacuum_residual(pot, points, k)
        r_ip = max(dynamics.interior_product_residual(H, pot, s, k) for s in states)
        rows.append({
            "potential": pot.to_dict(),
            "div_B": r_div,
            "faraday": r_far,
            "gauge_residual": r_gauge,
            "wave_residual": r_wave,
            "interior_product": r_ip,
        })
        hom = max(hom, r_div, r_far)
        ip = max(ip, r_ip)
        vac = max(vac, r_gauge, r_wave)
    gates = Gates()
    gates.upper("homogeneous", hom, sc.gates["homogeneous"])
    gates.upper("interior_product", ip, sc.gates["interior_product"])
    if "vacuum" in sc.gates:
        gates.upper("vacuum", vac, sc.gates["vacuum"])
    return {"potentials": rows, "samples": len(points)}, gates, []


def _loglog_slope(K, err) -> float | None:
    K, err = np.asarray(K, float), np.asarray(err, float)
    ok = err > 0
    if ok.sum() < 2:
        return None
    return float(-np.polyfit(np.log(K[ok]), np.log(err[ok]), 1)[0])


def run_boost_table(sc: Scenario, out: Path, rng) -> tuple[dict, Gates, list[str]]:
    b, k = sc.boost, sc.constants
    alpha = b.alpha
    inv_err, table = 0.0, []
    for V in b.velocities:
        for s in b.rows:
            q, t = group.boost_finite(V, alpha, s.q, s.t, k)
            p, p0 = group.boost_momentum_finite(V, alpha, s.p, s.p0(k), k)
            inv0 = group.invariant_quadratic(s.p, s.p0(k), alpha)
            inv1 = group.invariant_quadratic(p, p0, alpha)
            inv_err = max(inv_err, abs(inv1 - inv0) / max(1.0, abs(inv0)))
            table.append([*V, *s.q, s.t, *s.p, s.E, *q, t, *p, -k.c * p0, inv0, inv1])
    name = sc.outputs["table"]
    with open(out / name, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BOOST_COLUMNS)
        for row in table:
            w.writerow([repr(float(v)) for v in row])
    composition = []
    for K in b.K:
        err = 0.0
        for V in b.velocities:
            exact = group.boost_map(V, alpha, k)
            for s in b.rows:
                z = canon.PhasePoint.from_state(s, k)
                err = max(err, float(np.max(np.abs(group.composed_boost(V, alpha, z, K, k).as_array() - exact(z).as_array()))))
        composition.append({"K": K, "max_error": err})
    gates = Gates()
    gates.upper("invariant", inv_err, sc.gates["invariant"])
    if "composition" in sc.gates and composition:
        gates.upper("composition", composition[-1]["max_error"], sc.gates["composition"])
    results = {
        "alpha": alpha,
        "rows": len(table),
        "table": name,
        "columns": list(BOOST_COLUMNS),
        "max_invariant_error": inv_err,
        "composition": composition,
        "composition_slope": _loglog_slope([c["K"] for c in composition], [c["max_error"] for c in composition]),
    }
    return results, gates, [name]


RUNNERS = {
    "simulate": run_simulate,
    "transform": run_transform,
    "cocycle": run_cocycle,
    "equivariance": run_equivariance,
    "maxwell-check": run_maxwell,
    "boost-table": run_boost_table,
}


def run(sc: Scenario, out_dir) -> RunResult:
    """Run the scenario, write its artifacts and report.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(sc.seed)
    results, gates, artifacts = RUNNERS[sc.kind](sc, out, rng)
    report = {
        "version": VERSION,
        "kind": sc.kind,
        "name": sc.name,
        "seed": sc.seed,
        "constants": _constants_dict(sc.constants),
        "gates": gates.table,
        "passed": gates.passed,
        "results": results,
        "artifacts": sorted(artifacts),
    }
    (out / sc.outputs["report"]).write_text(dumps_report(report))
    artifacts.append(sc.outputs["report"])
    return RunResult(EXIT_OK if gates.passed else EXIT_GATE, report, artifacts)
