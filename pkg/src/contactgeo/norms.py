"""Lengths of contact paths and closed-form norm values on the certified class.

Lengths are always evaluated directly (time quadrature of spatial extrema of
the generating Hamiltonian).  Norm values are emitted only when the
hypotheses of the corresponding closed form hold: the Hessian bound for the
Shelukhin and FPR values, and additionally a regular zero level for the
discriminant value, plus a sign-definite H for the oscillation value.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.integrate import simpson

from .errors import DomainError, HypothesisError, IntegrityError
from .flow import AutonomousLift, ContactHamiltonian, ContactPathSpec, FunctionHamiltonian, ScheduledHamiltonian, as_path
from .hamiltonian import AutonomousHamiltonian, admissibility_check, extreme_values, regular_zero_check
from .translated import translation_selector, translation_selector_inverse

NOT_CERTIFIED = "not-certified"
NOT_APPLICABLE = "not-applicable"
INTEGER_SNAP = 1e-9
QUAD_TOL = 1e-10
AUDIT_TOL = 1e-6


class DegeneratePathWarning(UserWarning):
    """A length was requested for a constant path."""


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < INTEGER_SNAP else v


def floor_plus_one(v: float) -> int:
    return int(math.floor(_snap(v))) + 1


def ceil_int(v: float) -> int:
    return int(math.ceil(_snap(v)))


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Schedule:
    """A time change a: [0, 1] -> R with a(0) = 0, a(1) = 1 and its rate a'."""

    a: Callable
    rate: Callable
    label: str = ""

    def is_monotone(self, samples: int = 4001) -> bool:
        t = np.linspace(0.0, 1.0, samples)
        return bool(np.all(np.asarray(self.rate(t)) >= 0.0))


def oscillating_schedule(beta: float, m: int = 1) -> Schedule:
    """a(t) = t + beta sin(2 pi m t) / (2 pi m); monotone iff |beta| <= 1."""
    w = 2.0 * math.pi * m
    return Schedule(lambda t: t + beta * np.sin(w * np.asarray(t)) / w,
                    lambda t: 1.0 + beta * np.cos(w * np.asarray(t)),
                    f"oscillating(beta={beta}, m={m})")


def power_schedule(k: float) -> Schedule:
    """a(t) = t^k, k >= 1 (monotone)."""
    if k < 1:
        raise DomainError("power schedules need k >= 1 to keep the rate bounded")
    return Schedule(lambda t: np.asarray(t, dtype=float) ** k,
                    lambda t: k * np.asarray(t, dtype=float) ** (k - 1), f"power({k})")


def identity_schedule() -> Schedule:
    return Schedule(lambda t: np.asarray(t, dtype=float), lambda t: np.ones_like(np.asarray(t, dtype=float)), "identity")


def scheduled_path(H: AutonomousHamiltonian, schedule: Schedule, **kw) -> ContactPathSpec:
    """The path t -> phi_H^{a(t)}, generated by a'(t) H."""
    return ContactPathSpec(ScheduledHamiltonian(H, schedule.rate), **kw)


def reparametrize(path: ContactPathSpec, schedule: Schedule) -> ContactPathSpec:
    """The path t -> phi^{a(t)}, generated by a'(t) h^{a(t)}."""
    ham = path.hamiltonian
    if isinstance(ham, (AutonomousLift, ScheduledHamiltonian)):
        base_rate = ham.rate if isinstance(ham, ScheduledHamiltonian) else (lambda s: np.ones_like(np.asarray(s, dtype=float)))
        rate = lambda t: schedule.rate(t) * base_rate(schedule.a(t))
        return ContactPathSpec(ScheduledHamiltonian(ham.H, rate), T=path.T, scheme=path.scheme, step=path.step)
    fn = lambda t, p, z: schedule.rate(t) * ham.value(schedule.a(t), p, z)
    return ContactPathSpec(FunctionHamiltonian(fn, ham.n, ham.support_box, ham.z_independent),
                           T=path.T, scheme=path.scheme, step=path.step)


def inverse_path(path: ContactPathSpec) -> ContactPathSpec:
    """The path t -> phi^{1-t} (phi^1)^{-1}, generated by -h^{1-t}."""
    ham = path.hamiltonian
    T = path.T
    if isinstance(ham, (AutonomousLift, ScheduledHamiltonian)):
        base_rate = ham.rate if isinstance(ham, ScheduledHamiltonian) else (lambda s: np.ones_like(np.asarray(s, dtype=float)))
        return ContactPathSpec(ScheduledHamiltonian(ham.H, lambda t: -base_rate(T - np.asarray(t))),
                               T=T, scheme=path.scheme, step=path.step)
    fn = lambda t, p, z: -ham.value(T - t, p, z)
    return ContactPathSpec(FunctionHamiltonian(fn, ham.n, ham.support_box, ham.z_independent),
                           T=T, scheme=path.scheme, step=path.step)


# ---------------------------------------------------------------------------
# spatial extrema of h^t and time quadrature


def _spatial_extrema(ham: ContactHamiltonian, grid_resolution: int | None):
    """Return (max_t, min_t, breakpoints): vectorised t -> max h^t, t -> min h^t.

    Since phi^t is a bijection, max_x h^t(phi^t x) = max_y h^t(y), so no flow
    is needed.  Breakpoints are times where the extrema may have kinks.
    """
    if isinstance(ham, AutonomousLift):
        hi, lo = extreme_values(ham.H, grid_resolution)
        return (lambda t: np.full(np.shape(t), hi), lambda t: np.full(np.shape(t), lo), [])
    if isinstance(ham, ScheduledHamiltonian):
        hi, lo = extreme_values(ham.H, grid_resolution)

        def mx(t):
            r = np.asarray(ham.rate(np.asarray(t, dtype=float)), dtype=float)
            return np.where(r >= 0, r * hi, r * lo)

        def mn(t):
            r = np.asarray(ham.rate(np.asarray(t, dtype=float)), dtype=float)
            return np.where(r >= 0, r * lo, r * hi)

        return mx, mn, ["rate-roots"]
    box = ham.support_box
    res = grid_resolution or (256 if ham.n == 1 else 32)
    pts = box.grid(res)
    bounds = list(zip(box.lo, box.hi))

    def refine(t, sign):
        vals = sign * ham.value(t, pts, 0.0)
        k = int(np.argmax(vals))
        best = max(0.0, float(vals[k]))
        sol = optimize.minimize(lambda q: -sign * float(ham.value(t, q, 0.0)), pts[k],
                                method="Nelder-Mead", bounds=bounds, options={"xatol": 1e-12, "fatol": 1e-14})
        return max(best, float(-sol.fun))

    mx = lambda t: np.array([refine(float(s), 1.0) for s in np.atleast_1d(t)]).reshape(np.shape(t))
    mn = lambda t: -np.array([refine(float(s), -1.0) for s in np.atleast_1d(t)]).reshape(np.shape(t))
    return mx, mn, []


def _rate_roots(rate: Callable, T: float, samples: int = 4097) -> list[float]:
    t = np.linspace(0.0, T, samples)
    r = np.asarray(rate(t), dtype=float)
    roots = []
    for k in np.flatnonzero(np.sign(r[:-1]) * np.sign(r[1:]) < 0):
        roots.append(optimize.brentq(lambda s: float(rate(s)), t[k], t[k + 1], xtol=1e-15))
    return roots


def piecewise_simpson(f: Callable, T: float, breaks=(), nodes: int = 101, tol: float = QUAD_TOL,
                      max_nodes: int = 1 << 17) -> float:
    """Composite Simpson on each smooth piece of [0, T] after an end-grading substitution, doubling nodes until stable."""
    edges = [0.0] + sorted(b for b in breaks if 0.0 < b < T) + [T]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        n = nodes
        prev = None
        while True:
            # t = a + (b - a) g(s) grades nodes towards the ends, where rates like k t^(k-1) are singular
            s = np.linspace(0.0, 1.0, n)
            den = s**3 + (1.0 - s) ** 3
            t = a + (b - a) * s**3 / den
            dt = (b - a) * 3.0 * s**2 * (1.0 - s) ** 2 / den**2
            val = float(simpson(np.asarray(f(t), dtype=float) * dt, x=s))
            if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
                break
            if n > max_nodes:
                break
            prev = val
            n = 2 * n - 1
        total += val
    return total


def shelukhin_length(path, grid_resolution: int | None = None) -> float:
    """int_0^T max_x |h^t(x)| dt by composite Simpson (at least 101 nodes)."""
    path = as_path(path)
    mx, mn, marker = _spatial_extrema(path.hamiltonian, grid_resolution)
    brk = _rate_roots(path.hamiltonian.rate, path.T) if marker else []
    return piecewise_simpson(lambda t: np.maximum(mx(t), -mn(t)), path.T, brk)


def extremal_integrals(path, grid_resolution: int | None = None) -> tuple[float, float]:
    """(int max h^t dt, -int min h^t dt) along the path."""
    path = as_path(path)
    mx, mn, marker = _spatial_extrema(path.hamiltonian, grid_resolution)
    brk = _rate_roots(path.hamiltonian.rate, path.T) if marker else []
    return piecewise_simpson(mx, path.T, brk), -piecewise_simpson(mn, path.T, brk) + 0.0


# ---------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class Hypotheses:
    admissible: bool
    regular_zero: bool
    sign_definite: str  # "nonneg" | "nonpos" | "mixed"
    hessian_bound: float


def check_hypotheses(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> Hypotheses:
    adm = admissibility_check(H, grid_resolution=grid_resolution)
    hi, lo = extreme_values(H, grid_resolution)
    sign = "nonneg" if lo >= 0.0 else ("nonpos" if hi <= 0.0 else "mixed")
    return Hypotheses(adm.admissible, regular_zero_check(H, grid_resolution), sign, adm.bound)


def _is_identity(H, grid_resolution=None) -> bool:
    hi, lo = extreme_values(H, grid_resolution)
    return hi == 0.0 and lo == 0.0


def t_zero(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> float:
    """1 / max{max H, -min H}: the first time phi_H^t has an interior discriminant point."""
    hyp = check_hypotheses(H, grid_resolution)
    if not (hyp.admissible and hyp.regular_zero):
        raise HypothesisError("t_0 needs an admissible H with 0 a regular value inside its support")
    hi, lo = extreme_values(H, grid_resolution)
    m = max(hi, -lo)
    return math.inf if m == 0.0 else 1.0 / m


def discriminant_length_autonomous(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> float:
    """floor(1/t_0) + 1; the constant path is degenerate and reported as 1."""
    t0 = t_zero(H, grid_resolution)
    if math.isinf(t0):
        warnings.warn("discriminant length of a constant path", DegeneratePathWarning, stacklevel=2)
        return 1
    if t0 == 0.0:
        return math.inf
    return floor_plus_one(1.0 / t0)


@dataclass
class NormReport:
    shelukhin_length: float
    shelukhin_norm: float | str
    discriminant_length: float | str
    discriminant_norm: int | str
    oscillation_norm: int | str
    fpr_norm: int | str
    hypotheses: Hypotheses
    max_h: float
    min_h: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hypotheses"] = asdict(self.hypotheses)
        if isinstance(self.discriminant_length, float) and math.isinf(self.discriminant_length):
            d["discriminant_length"] = "inf"
        return d


def norm_report(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> NormReport:
    """All four norm values with hypothesis gating, plus the Shelukhin length of t -> phi_H^t."""
    hyp = check_hypotheses(H, grid_resolution)
    hi, lo = extreme_values(H, grid_resolution)
    length = shelukhin_length(ContactPathSpec(H), grid_resolution)
    if hi == 0.0 and lo == 0.0:
        # the identity: every norm vanishes
        return NormReport(length, 0.0, 1, 0, 0, 0, hyp, hi, lo, degenerate=True)
    m = max(hi, -lo)
    nu_s = m if hyp.admissible else NOT_CERTIFIED
    fpr = max(ceil_int(hi), ceil_int(-lo)) if hyp.admissible else NOT_CERTIFIED
    thm2 = hyp.admissible and hyp.regular_zero
    nu_d = max(floor_plus_one(hi), floor_plus_one(-lo)) if thm2 else NOT_CERTIFIED
    l_d = discriminant_length_autonomous(H, grid_resolution) if thm2 else NOT_CERTIFIED
    if not thm2:
        osc = NOT_CERTIFIED
    elif hyp.sign_definite == "mixed":
        osc = NOT_APPLICABLE
    else:
        osc = floor_plus_one(hi) if hyp.sign_definite == "nonneg" else floor_plus_one(-lo)
    return NormReport(length, nu_s, l_d, nu_d, osc, fpr, hyp, hi, lo)


# ---------------------------------------------------------------------------
# audits


@dataclass(frozen=True)
class SelectorAudit:
    c_value: float
    c_inverse_value: float
    integral_max: float
    integral_min: float
    slack: float
    slack_inverse: float
    shelukhin_length: float
    equality: bool


def selector_lower_bound_audit(path, c_value: float, c_inverse_value: float, tol: float = AUDIT_TOL,
                               grid_resolution: int | None = None) -> SelectorAudit:
    """Check c <= int max k^t dt and c(inverse) <= -int min k^t dt along any representative."""
    path = as_path(path)
    imax, imin = extremal_integrals(path, grid_resolution)
    s1 = imax - c_value
    s2 = imin - c_inverse_value
    if s1 < -tol or s2 < -tol:
        raise IntegrityError(f"selector exceeds its path bound (slacks {s1:.3e}, {s2:.3e})")
    return SelectorAudit(c_value, c_inverse_value, imax, imin, s1, s2,
                         shelukhin_length(path, grid_resolution), bool(abs(s1) <= tol and abs(s2) <= tol))


@dataclass(frozen=True)
class FloorAudit:
    lhs: int
    nu_d: int
    c_value: float
    c_inverse_value: float


def floor_lower_bound_audit(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> FloorAudit:
    """max{floor c + 1, floor c(inverse) + 1} = nu_d on the certified class."""
    rep = norm_report(H, grid_resolution)
    if not (rep.hypotheses.admissible and rep.hypotheses.regular_zero):
        raise HypothesisError("the floor audit needs an admissible H with a regular zero level")
    c = translation_selector(H, 1.0)
    ci = translation_selector_inverse(H, 1.0)
    if rep.degenerate:
        lhs = 0
    else:
        lhs = max(floor_plus_one(c), floor_plus_one(ci))
    if lhs > rep.discriminant_norm:
        raise IntegrityError(f"floor bound {lhs} exceeds nu_d = {rep.discriminant_norm}")
    if lhs != rep.discriminant_norm:
        raise IntegrityError(f"floor bound {lhs} should equal nu_d = {rep.discriminant_norm} on this class")
    return FloorAudit(lhs, rep.discriminant_norm, c, ci)


NORM_TABLE_COLUMNS = ["A", "B", "nu_S", "nu_FPR", "nu_d", "nu_osc", "shelukhin_length",
                      "admissible", "regular_zero", "sign", "error"]


def norm_table_row(A, B, rep: NormReport | None, error: str = "") -> dict:
    if rep is None:
        return {k: "" for k in NORM_TABLE_COLUMNS} | {"A": A, "B": B, "error": error}
    return {
        "A": A, "B": B, "nu_S": rep.shelukhin_norm, "nu_FPR": rep.fpr_norm, "nu_d": rep.discriminant_norm,
        "nu_osc": rep.oscillation_norm, "shelukhin_length": rep.shelukhin_length,
        "admissible": rep.hypotheses.admissible, "regular_zero": rep.hypotheses.regular_zero,
        "sign": rep.hypotheses.sign_definite, "error": error,
    }


def write_norm_table(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=NORM_TABLE_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
