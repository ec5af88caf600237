"""Command-line runner: one subcommand per operation, JSON reports validated against shipped schemas.

Exit status: 0 success, 1 malformed config, 2 a required hypothesis fails,
3 an integrity check fails (the numerics contradict a proven statement).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import capacity, flow, hamiltonian, norms, orbits, translated
from .config import OPERATIONS, ConfigError, ScenarioConfig, build_hamiltonian, load_config
from .errors import AccuracyError, DomainError, HypothesisError, IntegrityError, UnsupportedError

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_INTEGRITY = 0, 1, 2, 3


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays unwrapped, NaN -> null, infinities -> strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v + 0.0
    return obj


def load_schema(operation: str) -> dict:
    text = resources.files("contactgeo").joinpath("schemas", f"{operation}.schema.json").read_text()
    return json.loads(text)


def _require(cfg: ScenarioConfig):
    if cfg.hamiltonian is None:
        cfg.fail(f"{cfg.operation} needs a hamiltonian")
    return build_hamiltonian(cfg.hamiltonian, cfg)


def _param(cfg: ScenarioConfig, key: str, default):
    return cfg.params.get(key, default)


def _check_params(cfg: ScenarioConfig, allowed: set[str]) -> None:
    extra = sorted(set(cfg.params) - allowed)
    if extra:
        cfg.fail(f"unknown parameter {extra[0]!r} for {cfg.operation}", extra[0])


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# operations: each returns its result dict and writes its CSV files into out


def op_flow(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"p0", "z0", "t", "scheme"})
    H = _require(cfg)
    p0 = hamiltonian.as_point(_param(cfg, "p0", [0.5] + [0.0] * (2 * H.n - 1)), H.n)
    t = float(_param(cfg, "t", 1.0))
    step = cfg.step or flow.DEFAULT_STEP
    scheme = _param(cfg, "scheme", "rk4")
    st, traj = flow.integrate_contact(flow.ContactPathSpec(H, step=step, scheme=scheme), (p0, float(_param(cfg, "z0", 0.0))),
                                      t, return_trajectory=True)
    shift = flow.reeb_shift(H, p0, t, step)
    sym = flow.integrate_symplectic(H, p0, t, step, scheme)
    result = {"base": st.base, "reeb_lift": st.reeb_lift, "fiber": st.fiber, "conformal": st.conformal,
              "reeb_shift": shift, "lift_minus_shift": st.reeb_lift - float(_param(cfg, "z0", 0.0)) - shift,
              "energy_drift": sym.energy_drift, "step_halving_error": sym.error_estimate, "step": step, "t": t,
              "scheme": scheme}
    if traj is not None:
        traj.drift_series = H.value(traj.base) - float(H.value(p0))
        traj.write_csv(out / "trajectory.csv")
    return result


def op_spectrum(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"t", "brute_force"})
    H = _require(cfg)
    t = float(_param(cfg, "t", 1.0))
    spec = translated.spectrum_autonomous(H, t, cfg.grid)
    result = {"spectrum": spec.to_dict(), "selector": translated.translation_selector(H, t),
              "selector_inverse": translated.translation_selector_inverse(H, t)}
    if _param(cfg, "brute_force", False):
        pts = translated.brute_force_translated_points(H, t, cfg.grid, tol=cfg.tol or 1e-9,
                                                       step=cfg.step or flow.DEFAULT_STEP)
        result["translated_points"] = [tp.to_dict() for tp in pts]
        found = translated.translation_values(pts, 4)
        expected = sorted({round(v, 4) + 0.0 for v in spec.values})
        result["brute_force_values"] = found
        result["brute_force_agrees"] = found == expected
        if found != expected:
            raise IntegrityError(f"brute-force translations {found} differ from the spectrum {expected}")
    return result


def op_norms(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, set())
    H = _require(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", norms.DegeneratePathWarning)
        rep = norms.norm_report(H, cfg.grid)
    result = rep.to_dict()
    try:
        result["t0"] = norms.t_zero(H, cfg.grid)
    except HypothesisError:
        result["t0"] = norms.NOT_CERTIFIED
    spec = cfg.hamiltonian
    A = spec.get("A", "") if spec.get("kind") == "radial_bump" else ""
    B = getattr(H, "B", "")
    norms.write_norm_table([norms.norm_table_row(A, B, rep)], out / "norms.csv")
    return result


def op_hessian_check(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"safety_margin"})
    H = _require(cfg)
    rep = hamiltonian.admissibility_check(H, _param(cfg, "safety_margin", hamiltonian.DEFAULT_SAFETY_MARGIN), cfg.grid)
    return {"bound": rep.bound, "admissible": rep.admissible, "margin": rep.margin, "witness": rep.witness,
            "grid_spacing": rep.grid_spacing, "threshold": hamiltonian.TWO_PI}


def op_periodic_scan(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"T_max", "period_samples"})
    H = _require(cfg)
    T_max = float(_param(cfg, "T_max", 1.0))
    grid = cfg.grid or 128
    samples = int(_param(cfg, "period_samples", 256))
    found = orbits.find_periodic_orbits(H, T_max, grid, samples, tol=cfg.tol or orbits.CLOSURE_TOL)
    bound = hamiltonian.global_hessian_bound(H).value
    live = [o for o in found if o.nonconstant_flag and o.resolved]
    if bound < hamiltonian.TWO_PI and live:
        raise IntegrityError(f"nonconstant orbit of period {live[0].period:.6g} with Hessian bound {bound:.6g} < 2*pi")
    status = "orbits found, bound >= 2*pi" if live else "consistent at resolution"
    _write_csv(out / "orbits.csv", ["seed", "period", "closure_residual"],
               ([" ".join(repr(float(v)) for v in o.seed), o.period, o.closure_residual] for o in found))
    return {"orbits": [o.to_dict() for o in found], "hessian_bound": bound, "orbits_found": len(live),
            "consistent": True, "status": status, "grid_resolution": grid, "period_samples": samples, "T_max": T_max}


def _loop_from_modes(modes, samples: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, samples + 1)[:, None]
    dim = None
    g = 0.0
    for m in modes:
        k = int(m["k"])
        a = np.asarray(m.get("cos", []), float)
        b = np.asarray(m.get("sin", []), float)
        d = max(a.size, b.size)
        dim = dim or d
        if d != dim:
            raise DomainError("all modes need the same dimension")
        a = np.resize(a, dim) if a.size else np.zeros(dim)
        b = np.resize(b, dim) if b.size else np.zeros(dim)
        g = g + np.cos(2 * np.pi * k * t) * a + np.sin(2 * np.pi * k * t) * b
    if dim is None:
        return np.zeros((samples + 1, 2))
    g = g + np.zeros((samples + 1, dim))
    g[-1] = g[0]
    return g


def random_trig_loop(rng: np.random.Generator, degree: int = 8, dim: int = 2, samples: int = 512) -> np.ndarray:
    modes = [{"k": k, "cos": rng.standard_normal(dim).tolist(), "sin": rng.standard_normal(dim).tolist()}
             for k in range(1, int(rng.integers(1, degree + 1)) + 1)]
    return _loop_from_modes(modes, samples)


def op_parseval(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"modes", "random", "degree", "samples"})
    samples = int(_param(cfg, "samples", 512))
    tol = cfg.tol or 1e-9
    loops = []
    if "modes" in cfg.params:
        loops.append(("modes", _loop_from_modes(cfg.params["modes"], samples)))
    rng = np.random.default_rng(cfg.seed)
    for i in range(int(_param(cfg, "random", 0))):
        loops.append((f"random-{i}", random_trig_loop(rng, int(_param(cfg, "degree", 8)), samples=samples)))
    reports = []
    for label, loop in loops:
        r = orbits.loop_parseval_check(loop, tol)
        if not r.ok:
            raise IntegrityError(f"loop {label} violates the Parseval inequality: {r.lhs} > {r.rhs}")
        reports.append({"label": label, "lhs": r.lhs, "rhs": r.rhs, "margin": r.rhs - r.lhs, "ok": r.ok,
                        "single_mode": r.single_mode})
    return {"loops": reports, "all_ok": all(r["ok"] for r in reports), "tol": tol, "samples": samples}


def op_capacity_audit(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"U", "shear", "grid_resolution"})
    Uspec = _param(cfg, "U", {"kind": "ball_cylinder", "radius": 0.5})
    kind = Uspec.get("kind")
    if kind == "ball_cylinder":
        U = capacity.BallCylinder(float(Uspec["radius"]), tuple(Uspec.get("center", (0.0, 0.0))))
    elif kind == "box_cylinder":
        U = capacity.BoxCylinder(tuple(Uspec["lo"]), tuple(Uspec["hi"]))
        capacity.cylinder_capacity(U)  # raises: no closed form for boxes
    else:
        cfg.fail(f"unknown domain kind {kind!r}", "U")
    if "shear" in cfg.params:
        sh = cfg.params["shear"]
        H, U = capacity.make_displacing_shear(U, float(sh.get("c", 1.2)), float(sh.get("width", 2.5)),
                                              float(sh.get("margin", 0.1)))
    else:
        H = _require(cfg)
    audit = capacity.capacity_energy_audit(H, U, int(_param(cfg, "grid_resolution", 41)), cfg.grid)
    return audit.to_dict()


def _schedule(spec: dict) -> norms.Schedule:
    kind = spec.get("kind")
    if kind == "oscillating":
        return norms.oscillating_schedule(float(spec["beta"]), int(spec.get("m", 1)))
    if kind == "power":
        return norms.power_schedule(float(spec["k"]))
    if kind == "identity":
        return norms.identity_schedule()
    raise DomainError(f"unknown schedule kind {kind!r}")


def op_geodesic_audit(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"schedules"})
    H = _require(cfg)
    specs = _param(cfg, "schedules", [{"kind": "identity"}])
    c = translated.translation_selector(H, 1.0)
    ci = translated.translation_selector_inverse(H, 1.0)
    tol = cfg.tol or norms.AUDIT_TOL
    rows = []
    for spec in specs:
        sch = _schedule(spec)
        audit = norms.selector_lower_bound_audit(norms.scheduled_path(H, sch), c, ci, tol, cfg.grid)
        monotone = sch.is_monotone()
        if audit.equality != monotone:
            raise IntegrityError(f"{sch.label}: equality {audit.equality} but monotone {monotone}")
        rows.append({"schedule": sch.label, "monotone": monotone, "integral_max": audit.integral_max,
                     "integral_min": audit.integral_min, "slack": audit.slack, "slack_inverse": audit.slack_inverse,
                     "shelukhin_length": audit.shelukhin_length, "equality": audit.equality})
    floor = None
    hyp = norms.check_hypotheses(H, cfg.grid)
    if hyp.admissible and hyp.regular_zero:
        fa = norms.floor_lower_bound_audit(H, cfg.grid)
        floor = {"lhs": fa.lhs, "nu_d": fa.nu_d}
    _write_csv(out / "geodesic.csv", list(rows[0]) if rows else ["schedule"], (list(r.values()) for r in rows))
    return {"c": c, "c_inverse": ci, "tol": tol, "schedules": rows, "floor_audit": floor}


def bump_family_sweep(A_values, grid_resolution: int | None = None) -> list[dict]:
    """One norm-table row per A for the bump (B0(A), A); failures are recorded in the row."""
    rows = []
    for A in A_values:
        try:
            if not A > 0:
                raise DomainError("A must be positive")
            B = hamiltonian.compute_B0(float(A))
            H = hamiltonian.make_radial_bump(B, float(A))
            rep = norms.norm_report(H, grid_resolution)
            spec = translated.spectrum_autonomous(H, 1.0, grid_resolution)
            if abs(max(spec.values) - A) > 1e-9:
                raise IntegrityError(f"spectrum maximum {max(spec.values)} differs from A = {A}")
            rows.append(norms.norm_table_row(A, B, rep))
        except (DomainError, HypothesisError, IntegrityError, AccuracyError, ValueError) as exc:
            rows.append(norms.norm_table_row(A, "", None, f"{type(exc).__name__}: {exc}"))
    return rows


def op_sweep(cfg: ScenarioConfig, out: Path):
    _check_params(cfg, {"A_values"})
    A_values = _param(cfg, "A_values", [])
    if not isinstance(A_values, list) or any(isinstance(a, bool) or not isinstance(a, (int, float)) for a in A_values):
        cfg.fail("A_values must be a list of numbers", "A_values")
    rows = bump_family_sweep(A_values, cfg.grid)
    norms.write_norm_table(rows, out / "sweep.csv")
    return {"rows": rows}


DISPATCH = {"flow": op_flow, "spectrum": op_spectrum, "norms": op_norms, "hessian-check": op_hessian_check,
            "periodic-scan": op_periodic_scan, "parseval": op_parseval, "capacity-audit": op_capacity_audit,
            "geodesic-audit": op_geodesic_audit, "sweep": op_sweep}
assert set(DISPATCH) == set(OPERATIONS)


def write_report(out: Path, cfg: ScenarioConfig, status: str, result, message: str = "") -> dict:
    report = _clean({"schema_version": SCHEMA_VERSION, "operation": cfg.operation, "status": status,
                     "message": message, "seed": cfg.seed,
                     "overrides": {"grid": cfg.grid, "step": cfg.step, "tol": cfg.tol}, "result": result})
    jsonschema.validate(report, load_schema(cfg.operation))
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return report


def run_scenario(cfg: ScenarioConfig, out: Path | None = None) -> int:
    out = Path(out or cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = DISPATCH[cfg.operation](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HypothesisError, UnsupportedError) as exc:
        write_report(out, cfg, "hypothesis-failed", None, str(exc))
        print(f"hypothesis not met: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (IntegrityError, AccuracyError) as exc:
        write_report(out, cfg, "integrity-failed", None, str(exc))
        print(f"integrity failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (DomainError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        write_report(out, cfg, "ok", result)
    except jsonschema.ValidationError as exc:
        print(f"integrity failure: report does not match its schema: {exc.message}", file=sys.stderr)
        return EXIT_INTEGRITY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="contactgeo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for op in OPERATIONS:
        p = sub.add_parser(op)
        p.add_argument("config", help="scenario file (JSON)")
        p.add_argument("--grid", type=int, help="grid resolution override")
        p.add_argument("--step", type=float, help="integration step override")
        p.add_argument("--tol", type=float, help="tolerance override")
        p.add_argument("--out", help="output directory (default: the config's 'out' or the cwd)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        for key in ("grid", "step", "tol"):
            v = getattr(args, key)
            if v is not None:
                if not v > 0:
                    raise ConfigError(f"--{key} must be positive")
                setattr(cfg, key, v)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_scenario(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
