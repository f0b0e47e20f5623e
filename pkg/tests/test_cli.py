import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from xphase.cli import main
from xphase.runner import BOOST_COLUMNS, EXIT_ERROR, EXIT_GATE, EXIT_OK
from xphase.scenario import ScenarioError, load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write(tmp_path, doc, name="sc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


MINIMAL = {"version": "xphase/1", "kind": "simulate", "initial": {"q": [0, 0, 0], "p": [1, 0, 0]}}


# -- loading ---------------------------------------------------------------------

def test_minimal_scenario_defaults(tmp_path):
    sc = load_scenario(write(tmp_path, MINIMAL))
    assert sc.kind == "simulate" and sc.seed == 0
    assert sc.constants.c == 1.0 and sc.constants.alpha == 1
    assert sc.hamiltonian.form == "kinetic" and sc.integrator.method == "rk4"
    assert sc.states[0].t == 0.0 and sc.states[0].E == 0.0
    assert sc.gates["dt_ds"] == 1e-9


def test_cyclotron_fixture():
    sc = load_scenario(SCENARIOS / "cyclotron.json")
    assert sc.potential.name == "uniform-B"
    assert sc.integrator.method == "rk4"
    assert sc.integrator.ds == pytest.approx(1e-3, rel=1e-3) and sc.integrator.ds <= 1e-3


def test_bad_alpha_names_the_key():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({**MINIMAL, "constants": {"alpha": 2}})
    assert ei.value.key == "constants.alpha"


def test_unknown_key_is_rejected():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({**MINIMAL, "integrator": {"method": "rk4", "dss": 0.1}})
    assert ei.value.key == "integrator.dss"
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({**MINIMAL, "extra": 1})
    assert ei.value.key == "extra"


def test_missing_required_field():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({"version": "xphase/1", "kind": "simulate"})
    assert ei.value.key == "initial"


def test_version_is_checked():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({**MINIMAL, "version": "xphase/2"})
    assert ei.value.key == "version"


def test_expression_error_carries_offset():
    doc = {**MINIMAL, "hamiltonian": {"form": "kinetic", "U": "q1 + * 2"}}
    with pytest.raises(ScenarioError) as ei:
        parse_scenario(doc)
    d = ei.value.as_dict()
    assert d["error"] == "parse_error" and d["key"] == "hamiltonian.U" and d["offset"] == 5


def test_quasi_isotropy_is_enforced():
    doc = {**MINIMAL, "hamiltonian": {"form": "relativistic"}, "initial": {"q": [0, 0, 0], "p": [0, 0, 0], "E": 2.0}}
    with pytest.raises(ScenarioError):
        parse_scenario(doc)
    doc["initial"]["E"] = 1.0
    assert parse_scenario(doc).states[0].E == 1.0


def test_absolute_output_path_rejected():
    with pytest.raises(ScenarioError) as ei:
        parse_scenario({**MINIMAL, "outputs": {"report": "/tmp/report.json"}})
    assert ei.value.key == "outputs.report"


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ScenarioError) as ei:
        load_scenario(tmp_path / "missing.json")
    assert ei.value.code == "io_error"
    with pytest.raises(ScenarioError) as ei:
        load_scenario(write(tmp_path, "{not json"))
    assert ei.value.code == "json_error"


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_fixtures_validate(path, capsys):
    assert main(["validate", "--config", str(path)]) == EXIT_OK


# -- running ---------------------------------------------------------------------

def test_cyclotron_run(tmp_path, capsys):
    assert main(["simulate", "--config", str(SCENARIOS / "cyclotron.json"), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["version"] == "xphase/1"
    assert report["gates"]["return_residual"]["value"] < 1e-6
    rows = list(csv.reader(open(tmp_path / report["artifacts"][0])))
    assert rows[0][:3] == ["s", "q1", "q2"] and len(rows) > 6000
    assert "PASS return_residual" in capsys.readouterr().out


def test_galilei_equivariance_run(tmp_path, capsys):
    assert main(["equivariance", "--config", str(SCENARIOS / "equivariance-galilei.json"), "--out", str(tmp_path)]) == EXIT_OK
    res = json.loads((tmp_path / "report.json").read_text())["results"]
    assert res["verdict"] == "NOT-EQUIVARIANT"
    assert res["witness"]["pair"] == ["v_x", "d_x"] and res["witness"]["value"] == pytest.approx(-1.0, abs=1e-9)


def test_boost_table_row(tmp_path, capsys):
    assert main(["boost-table", "--config", str(SCENARIOS / "boost-table.json"), "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "boost_table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == BOOST_COLUMNS
    first = {k: float(v) for k, v in rows[0].items()}
    assert first["q1_prime"] == pytest.approx(1.25) and first["t_prime"] == pytest.approx(-0.75)
    assert first["invariant"] == pytest.approx(first["invariant_prime"], abs=1e-10)


def test_gate_failure_exits_one(tmp_path, capsys):
    doc = json.loads((SCENARIOS / "equivariance-galilei.json").read_text())
    doc["gates"] = {"verdict": "EQUIVARIANT"}
    code = main(["equivariance", "--config", write(tmp_path, doc), "--out", str(tmp_path / "out")])
    assert code == EXIT_GATE
    assert json.loads((tmp_path / "out" / "report.json").read_text())["passed"] is False
    assert "FAIL verdict" in capsys.readouterr().out


def test_schema_error_exits_two(tmp_path, capsys):
    path = write(tmp_path, {**MINIMAL, "constants": {"alpha": 2}})
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_ERROR
    err = last_error(capsys)
    assert err["error"] == "schema_error" and err["key"] == "constants.alpha"
    assert not (tmp_path / "out").exists()


def test_kind_mismatch(tmp_path, capsys):
    assert main(["cocycle", "--config", str(SCENARIOS / "free.json"), "--out", str(tmp_path)]) == EXIT_ERROR
    assert last_error(capsys)["error"] == "kind_mismatch"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["simulate"])
    assert ei.value.code == EXIT_ERROR
    assert last_error(capsys)["error"] == "usage_error"
    with pytest.raises(SystemExit):
        main(["simulate", "--config", "x.json", "--seed", "-1"])
    assert last_error(capsys)["error"] == "usage_error"


def test_runtime_error_is_reported(tmp_path, capsys):
    doc = {**MINIMAL, "hamiltonian": {"form": "kinetic", "U": "-(q1^8)*1e300"},
           "initial": {"q": [10, 0, 0], "p": [0, 0, 0]}, "integrator": {"ds": 0.1, "steps": 50}}
    assert main(["simulate", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "message" in last_error(capsys)


def test_reports_are_deterministic(tmp_path, capsys):
    cfg = str(SCENARIOS / "maxwell.json")
    outs = []
    for name in ("a", "b"):
        assert main(["maxwell-check", "--config", cfg, "--out", str(tmp_path / name), "--seed", "7"]) == EXIT_OK
        outs.append((tmp_path / name / "report.json").read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["seed"] == 7


def test_seed_changes_samples(tmp_path, capsys):
    cfg = str(SCENARIOS / "equivariance-alpha-plus.json")
    tables = []
    for seed in ("1", "2"):
        main(["equivariance", "--config", cfg, "--out", str(tmp_path / seed), "--seed", seed])
        report = json.loads((tmp_path / seed / "report.json").read_text())
        assert report["seed"] == int(seed)
        tables.append(report["results"]["table"])
    assert tables[0] != tables[1]


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "xphase.cli", "simulate", "--config", str(tmp_path / "none.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_ERROR
    assert json.loads(proc.stderr)["error"] == "io_error"
    ok = subprocess.run(
        [sys.executable, "-m", "xphase.cli", "simulate", "--config", str(SCENARIOS / "free.json"), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert ok.returncode == EXIT_OK and "all gates passed" in ok.stdout
