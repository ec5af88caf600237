"""Scenario files: JSON documents naming a Hamiltonian, an operation and its parameters.

Example::

    {"operation": "norms",
     "hamiltonian": {"kind": "radial_bump", "A": 2.5, "B": "B0"},
     "grid": 128}

Hamiltonian kinds: ``radial_bump`` {A, B (number or "B0"), center?, n?},
``quadratic_core`` {a, cutoff_radius, transition_width, center?, n?},
``shear`` {c, core_lo, core_hi, width}, ``zero`` {n?} and
``sum`` {terms: [{coeff?, hamiltonian}]}.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContactGeoError
from .hamiltonian import (AutonomousHamiltonian, QuadraticCore, ShearHamiltonian, SumHamiltonian, ZeroHamiltonian,
                          compute_B0, make_radial_bump)

OPERATIONS = ("flow", "spectrum", "norms", "hessian-check", "periodic-scan", "parseval", "capacity-audit",
              "geodesic-audit", "sweep")
TOP_KEYS = {"operation", "hamiltonian", "params", "grid", "step", "tol", "seed", "out"}
NUMBER = (int, float)


class ConfigError(ContactGeoError):
    """Malformed scenario; carries a 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass
class ScenarioConfig:
    operation: str
    hamiltonian: dict | None = None
    params: dict = field(default_factory=dict)
    grid: int | None = None
    step: float | None = None
    tol: float | None = None
    seed: int = 0
    out: str | None = None
    source: str = ""

    def locate(self, key: str) -> tuple[int | None, int | None]:
        """Line and column of the first occurrence of ``"key"`` in the source text."""
        m = re.search(r'"%s"\s*:' % re.escape(key), self.source)
        if not m:
            return None, None
        line = self.source.count("\n", 0, m.start()) + 1
        return line, m.start() - (self.source.rfind("\n", 0, m.start()) + 1) + 1

    def fail(self, message: str, key: str | None = None):
        line, col = self.locate(key) if key else (None, None)
        raise ConfigError(message, line, col)


def _positive(cfg: ScenarioConfig, name: str, v, integer: bool = False):
    ok = isinstance(v, int) if integer else isinstance(v, NUMBER)
    if isinstance(v, bool) or not ok or not v > 0:
        cfg.fail(f"{name} must be a positive {'integer' if integer else 'number'}, got {v!r}", name)
    return v


def parse_config(text: str, source_name: str = "<config>", operation: str | None = None) -> ScenarioConfig:
    """Parse a scenario; ``operation`` (the subcommand) fills in or must match the file's own."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source_name}: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source_name}: top level must be an object", 1, 1)
    cfg = ScenarioConfig(operation="", source=text)
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        cfg.fail(f"unknown key {unknown[0]!r}", unknown[0])
    op = raw.get("operation", operation)
    if operation is not None and op != operation:
        cfg.fail(f"config is for {op!r} but the subcommand is {operation!r}", "operation")
    if op not in OPERATIONS:
        cfg.fail(f"operation must be one of {', '.join(OPERATIONS)}; got {op!r}", "operation")
    cfg.operation = op
    cfg.hamiltonian = raw.get("hamiltonian")
    if cfg.hamiltonian is not None and not isinstance(cfg.hamiltonian, dict):
        cfg.fail("hamiltonian must be an object", "hamiltonian")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        cfg.fail("params must be an object", "params")
    cfg.params = params
    for key in ("grid", "step", "tol"):
        if key in raw:
            setattr(cfg, key, _positive(cfg, key, raw[key], integer=(key == "grid")))
    for key, v in params.items():
        if key.endswith("tol") or key in ("grid_resolution", "period_samples", "samples"):
            _positive(cfg, key, v, integer=not key.endswith("tol"))
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        cfg.fail("seed must be a non-negative integer", "seed")
    cfg.seed = seed
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        cfg.fail("out must be a path string", "out")
    cfg.out = out
    if cfg.hamiltonian is not None:
        build_hamiltonian(cfg.hamiltonian, cfg)  # validate eagerly
    return cfg


def load_config(path, operation: str | None = None) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, str(p), operation)


_KINDS = {
    "radial_bump": ({"A", "B"}, {"center", "n"}),
    "quadratic_core": ({"a"}, {"cutoff_radius", "transition_width", "center", "n"}),
    "shear": ({"c", "core_lo", "core_hi", "width"}, set()),
    "zero": (set(), {"n"}),
    "sum": ({"terms"}, set()),
}


def build_hamiltonian(spec: dict, cfg: ScenarioConfig | None = None) -> AutonomousHamiltonian:
    """Instantiate an AutonomousHamiltonian from its dictionary form."""
    cfg = cfg or ScenarioConfig(operation="")

    if not isinstance(spec, dict) or spec.get("kind") not in _KINDS:
        cfg.fail(f"hamiltonian kind must be one of {', '.join(_KINDS)}", "kind")
    kind = spec["kind"]
    required, optional = _KINDS[kind]
    keys = set(spec) - {"kind"}
    missing = sorted(required - keys)
    if missing:
        cfg.fail(f"{kind} needs key {missing[0]!r}", "kind")
    extra = sorted(keys - required - optional)
    if extra:
        cfg.fail(f"unknown key {extra[0]!r} for {kind}", extra[0])

    def num(key, positive=False):
        v = spec[key]
        if isinstance(v, bool) or not isinstance(v, NUMBER):
            cfg.fail(f"{key} must be a number", key)
        if positive and not v > 0:
            cfg.fail(f"{key} must be positive", key)
        return float(v)

    n = spec.get("n", 1)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        cfg.fail("n must be a positive integer", "n")
    center = spec.get("center")
    if center is not None and (not isinstance(center, list) or len(center) != 2 * n
                               or not all(isinstance(v, NUMBER) for v in center)):
        cfg.fail(f"center must be a list of {2 * n} numbers", "center")

    if kind == "radial_bump":
        A = num("A", positive=True)
        B = spec["B"]
        if B == "B0":
            B = compute_B0(A, n=n)
        else:
            B = num("B", positive=True)
        return make_radial_bump(B, A, n=n, center=center)
    if kind == "quadratic_core":
        return QuadraticCore(num("a"), float(spec.get("cutoff_radius", 1.0)), float(spec.get("transition_width", 1.0)),
                             n=n, center=center)
    if kind == "shear":
        lo, hi = spec["core_lo"], spec["core_hi"]
        if not (isinstance(lo, list) and isinstance(hi, list) and len(lo) == len(hi) and len(lo) % 2 == 0):
            cfg.fail("core_lo and core_hi must be lists of equal even length", "core_lo")
        return ShearHamiltonian(num("c"), lo, hi, num("width", positive=True))
    if kind == "zero":
        return ZeroHamiltonian(n)
    terms = spec["terms"]
    if not isinstance(terms, list) or not terms:
        cfg.fail("terms must be a non-empty list", "terms")
    hams, coeffs = [], []
    for term in terms:
        if not isinstance(term, dict) or "hamiltonian" not in term or set(term) - {"hamiltonian", "coeff"}:
            cfg.fail("each term is {\"hamiltonian\": {...}, \"coeff\": number}", "terms")
        c = term.get("coeff", 1.0)
        if isinstance(c, bool) or not isinstance(c, NUMBER):
            cfg.fail("coeff must be a number", "coeff")
        hams.append(build_hamiltonian(term["hamiltonian"], cfg))
        coeffs.append(float(c))
    return SumHamiltonian(hams, coeffs)
