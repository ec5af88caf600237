import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from contactgeo.cli import bump_family_sweep, load_schema, main
from contactgeo.config import OPERATIONS, ConfigError, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, op, config, *extra):
    out = tmp_path / op
    code = main([op, str(config), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    if report is not None:
        jsonschema.validate(report, load_schema(op))
    return code, report, out


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=1))
    return p


BUMP = {"kind": "radial_bump", "A": 2.5, "B": "B0"}
CORE7 = {"kind": "quadratic_core", "a": 7, "cutoff_radius": 1, "transition_width": 4}


def test_every_operation_has_a_schema():
    for op in OPERATIONS:
        schema = load_schema(op)
        assert schema["properties"]["operation"]["const"] == op


def test_norms(tmp_path):
    code, rep, out = run(tmp_path, "norms", CONFIGS / "norms_bump.json")
    assert code == 0 and rep["status"] == "ok" and rep["schema_version"] == "1.0"
    r = rep["result"]
    assert r["shelukhin_norm"] == pytest.approx(2.5, abs=1e-9)
    assert (r["fpr_norm"], r["discriminant_norm"], r["oscillation_norm"]) == (3, 3, 3)
    assert r["t0"] == pytest.approx(0.4)
    assert (out / "norms.csv").exists()


def test_norms_signed(tmp_path):
    code, rep, _ = run(tmp_path, "norms", CONFIGS / "norms_signed.json")
    assert code == 0
    r = rep["result"]
    assert r["max_h"] == pytest.approx(1.0) and r["min_h"] == pytest.approx(-2.0)
    assert r["oscillation_norm"] == "not-applicable"


def test_hessian_check_inadmissible_is_not_an_error(tmp_path):
    code, rep, _ = run(tmp_path, "hessian-check", CONFIGS / "hessian_core7.json")
    assert code == 0 and rep["result"]["admissible"] is False
    assert rep["result"]["bound"] > 2 * math.pi


def test_spectrum_refuses_inadmissible(tmp_path):
    cfg = write(tmp_path, {"operation": "spectrum", "hamiltonian": CORE7})
    code, rep, _ = run(tmp_path, "spectrum", cfg)
    assert code == 2 and rep["status"] == "hypothesis-failed" and rep["result"] is None


def test_spectrum_matches_brute_force(tmp_path):
    cfg = write(tmp_path, {"operation": "spectrum", "hamiltonian": BUMP,
                           "params": {"t": 0.5, "brute_force": True}, "grid": 48})
    code, rep, _ = run(tmp_path, "spectrum", cfg)
    assert code == 0
    r = rep["result"]
    assert r["selector"] == pytest.approx(1.25, abs=1e-9)
    assert r["brute_force_agrees"] and max(r["brute_force_values"]) == pytest.approx(1.25, abs=1e-4)


def test_flow(tmp_path):
    code, rep, out = run(tmp_path, "flow", CONFIGS / "flow_bump.json")
    assert code == 0
    r = rep["result"]
    assert r["energy_drift"] < 1e-9 and r["lift_minus_shift"] < 1e-8
    rows = list(csv.reader((out / "trajectory.csv").open()))
    assert len(rows) > 100


def test_periodic_scan_override(tmp_path):
    code, rep, out = run(tmp_path, "periodic-scan", CONFIGS / "periodic_bump.json", "--grid", "32")
    assert code == 0 and rep["overrides"]["grid"] == 32
    assert rep["result"]["orbits"] == []
    assert (out / "orbits.csv").exists()


def test_parseval(tmp_path):
    code, rep, _ = run(tmp_path, "parseval", CONFIGS / "parseval.json")
    assert code == 0 and rep["result"]["all_ok"]
    loops = rep["result"]["loops"]
    assert len(loops) == 101 and loops[0]["single_mode"]
    assert all(l["margin"] >= -1e-9 for l in loops)


def test_capacity_audit(tmp_path):
    code, rep, _ = run(tmp_path, "capacity-audit", CONFIGS / "capacity_shear.json")
    assert code == 0
    r = rep["result"]
    assert r["displaced"] and r["capacity"] == pytest.approx(math.pi / 4)
    assert all(v >= 0 for v in r["slacks"].values())


def test_geodesic_audit(tmp_path):
    code, rep, out = run(tmp_path, "geodesic-audit", CONFIGS / "geodesic_bump.json")
    assert code == 0
    rows = rep["result"]["schedules"]
    assert [r["equality"] for r in rows] == [True, True, True, False]
    assert (out / "geodesic.csv").exists()


def test_sweep(tmp_path):
    code, rep, out = run(tmp_path, "sweep", CONFIGS / "sweep.json")
    assert code == 0
    rows = {r["A"]: r for r in rep["result"]["rows"]}
    for A in (0.5, 2.5, 7.3):
        assert rows[A]["nu_S"] == pytest.approx(A, abs=1e-9)
        assert rows[A]["nu_FPR"] == math.ceil(A)
        assert rows[A]["nu_d"] == rows[A]["nu_osc"] == math.floor(A) + 1
    assert rows[1.0]["nu_d"] == 2 and rows[1.0]["nu_FPR"] == 1
    table = list(csv.DictReader((out / "sweep.csv").open()))
    assert [float(r["A"]) for r in table] == [0.5, 1.0, 2.5, 7.3]


def test_sweep_edge_cases():
    assert bump_family_sweep([]) == []
    row = bump_family_sweep([-1.0])[0]
    assert row["error"].startswith("DomainError")


def test_malformed_config_reports_position(tmp_path, capsys):
    code = main(["norms", str(CONFIGS / "bad.json"), "--out", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "line 3, column 2" in err and "gird" in err
    assert not (tmp_path / "report.json").exists()


def test_invalid_json_position():
    with pytest.raises(ConfigError) as exc:
        parse_config('{"operation": "norms",\n "grid": }')
    assert exc.value.line == 2


@pytest.mark.parametrize("doc, key", [
    ({"operation": "norms", "grid": -4}, "grid"),
    ({"operation": "norms", "tol": 0}, "tol"),
    ({"operation": "norms", "hamiltonian": {"kind": "radial_bump", "A": "x", "B": 1}}, "A"),
    ({"operation": "norms", "hamiltonian": {"kind": "blob"}}, "kind"),
    ({"operation": "flow", "params": {"samples": 0}}, "samples"),
])
def test_config_rejections(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc, indent=1))
    assert exc.value.line is not None


def test_operation_mismatch(tmp_path):
    assert main(["flow", str(CONFIGS / "norms_bump.json"), "--out", str(tmp_path)]) == 1


def test_negative_override(tmp_path):
    assert main(["norms", str(CONFIGS / "norms_bump.json"), "--grid", "-1", "--out", str(tmp_path)]) == 1


def test_unknown_param(tmp_path):
    cfg = write(tmp_path, {"operation": "norms", "hamiltonian": BUMP, "params": {"bogus": 1}})
    assert run(tmp_path, "norms", cfg)[0] == 1


def test_reports_are_byte_reproducible(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        assert main(["parseval", str(CONFIGS / "parseval.json"), "--out", str(d)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "contactgeo.cli", "hessian-check", str(CONFIGS / "hessian_core7.json"),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads((tmp_path / "report.json").read_text())["result"]["admissible"] is False
