"""Displacement of cylinders B(r) x S^1 and the capacity-energy inequalities.

The capacity of the ball cylinder is pi r^2.  A displacing map must have
``ceil(nu) >= ceil(c(U)) / 2`` for each certified norm nu, and its selector
values satisfy ``ceil(c(U)) <= ceil(c(phi)) + ceil(c(phi^-1))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HypothesisError, IntegrityError, UnsupportedError
from .flow import DEFAULT_STEP, _rk4_contact, as_path, flow_map
from .hamiltonian import (AutonomousHamiltonian, ShearHamiltonian, SumHamiltonian, admissibility_check,
                          extreme_values)
from .norms import floor_plus_one, norm_report
from .translated import brute_force_translated_points, translation_selector, translation_selector_inverse


@dataclass(frozen=True)
class BallCylinder:
    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("cylinder radius must be positive")
        c = tuple(float(v) for v in self.center)
        if len(c) % 2:
            raise DomainError("ball center needs an even number of coordinates")
        object.__setattr__(self, "center", c)

    @property
    def n(self) -> int:
        return len(self.center) // 2

    def distance(self, p) -> np.ndarray:
        """Distance from base points to the closed ball (0 inside)."""
        d = np.linalg.norm(np.asarray(p) - np.asarray(self.center), axis=-1) - self.radius
        return np.maximum(d, 0.0)

    def contains(self, p) -> np.ndarray:
        return np.linalg.norm(np.asarray(p) - np.asarray(self.center), axis=-1) <= self.radius

    def sample(self, resolution: int) -> tuple[np.ndarray, float]:
        c = np.asarray(self.center)
        axes = [np.linspace(ci - self.radius, ci + self.radius, resolution) for ci in c]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return pts[self.contains(pts)], 2.0 * self.radius / (resolution - 1)

    def to_dict(self) -> dict:
        return {"kind": "ball_cylinder", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class BoxCylinder:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise DomainError("box cylinder needs a non-empty box")

    def to_dict(self) -> dict:
        return {"kind": "box_cylinder", "lo": list(self.lo), "hi": list(self.hi)}


def cylinder_capacity(U) -> float:
    if isinstance(U, BallCylinder):
        return math.pi * U.radius**2
    raise UnsupportedError("no closed-form capacity is available for this domain")


@dataclass(frozen=True)
class DisplacementReport:
    displaced: bool
    min_separation: float
    grid_spacing: float
    certified: bool
    samples: int


def displacement_check(H, U: BallCylinder, grid_resolution: int = 41, t: float = 1.0,
                       fiber_samples: int = 4, step: float = DEFAULT_STEP) -> DisplacementReport:
    """Push samples of U (base grid x fiber grid) through phi^t and measure how far they land from U."""
    if not isinstance(U, BallCylinder):
        raise UnsupportedError("displacement is checked on ball cylinders only")
    base, spacing = U.sample(grid_resolution)
    fibers = np.arange(fiber_samples) / fiber_samples
    P0 = np.repeat(base, fiber_samples, axis=0)
    Z0 = np.tile(fibers, len(base))
    if isinstance(H, AutonomousHamiltonian) and t > 0:
        P, _ = flow_map(H, P0, t, step)
    else:
        _, P, _, _ = _rk4_contact(as_path(H).hamiltonian, P0, Z0, t, step, store=False)
    dist = U.distance(P)
    min_sep = float(dist.min())
    displaced = bool(min_sep > 0.0)
    return DisplacementReport(displaced, min_sep, spacing, bool(min_sep > 2.0 * spacing), len(P0))


def make_displacing_shear(U: BallCylinder, c: float = 1.2, width: float = 2.5, margin: float = 0.1,
                          ) -> tuple[ShearHamiltonian, BallCylinder]:
    """A cutoff of c y_1 whose core flow moves x_1 by -c t, and U recentred at x_1 = c/2.

    The core box holds U and its image; with c > 2r the time-one map
    displaces U by a gap of c - 2r.
    """
    r = U.radius
    n = U.n
    center = np.zeros(2 * n)
    center[0] = c / 2
    lo = np.full(2 * n, -(r + margin))
    hi = np.full(2 * n, r + margin)
    lo[0], hi[0] = -c / 2 - r - margin, c / 2 + r + margin
    return ShearHamiltonian(c, lo, hi, width), BallCylinder(r, tuple(center))


@dataclass
class CapacityAudit:
    domain: dict
    capacity: float
    displacement: DisplacementReport
    norms: dict
    slacks: dict
    selector_inequality: dict | None
    gap: str | None = None

    def to_dict(self) -> dict:
        return {"U": self.domain, "capacity": self.capacity, "displaced": self.displacement.displaced,
                "min_separation": self.displacement.min_separation,
                "grid_spacing": self.displacement.grid_spacing, "certified_displacement": self.displacement.certified,
                "norms": self.norms, "slacks": self.slacks, "selector_inequality": self.selector_inequality,
                "gap": self.gap}


def capacity_energy_audit(H: AutonomousHamiltonian, U: BallCylinder, grid_resolution: int = 41,
                          hamiltonian_grid: int | None = None) -> CapacityAudit:
    """Audit ceil(nu) >= ceil(c(U))/2 for every certified norm and the selector inequality."""
    disp = displacement_check(H, U, grid_resolution)
    if not disp.certified:
        raise HypothesisError(f"U is not displaced with margin (min separation {disp.min_separation:.4g}, "
                              f"needed > {2 * disp.grid_spacing:.4g})")
    cap = cylinder_capacity(U)
    need = 0.5 * math.ceil(cap)
    rep = norm_report(H, hamiltonian_grid)
    values = {"nu_S": rep.shelukhin_norm, "nu_FPR": rep.fpr_norm, "nu_d": rep.discriminant_norm,
              "nu_osc": rep.oscillation_norm}
    norms, slacks = {}, {}
    for name, v in values.items():
        norms[name] = v
        if isinstance(v, str):
            continue
        slack = math.ceil(v) - need
        slacks[name] = slack
        if slack < 0:
            raise IntegrityError(f"ceil({name}) = {math.ceil(v)} is below ceil(c(U))/2 = {need}")
    gap = None
    selector_inequality = None
    if rep.hypotheses.admissible:
        c = translation_selector(H, 1.0)
        ci = translation_selector_inverse(H, 1.0)
        lhs, rhs = math.ceil(cap), math.ceil(c) + math.ceil(ci)
        if lhs > rhs:
            raise IntegrityError(f"selector inequality fails: ceil(c(U)) = {lhs} > {rhs}")
        selector_inequality = {"ceil_capacity": lhs, "c": c, "c_inverse": ci, "rhs": rhs, "slack": rhs - lhs}
    else:
        # no certified norm: the length is still a valid upper bound for every norm
        norms["shelukhin_length"] = rep.shelukhin_length
        slacks["shelukhin_length"] = math.ceil(rep.shelukhin_length) - need
        gap = "displacing Hamiltonian exceeds the Hessian bound; only the Shelukhin length is reported"
    return CapacityAudit(U.to_dict(), cap, disp, norms, slacks, selector_inequality, gap)


# ---------------------------------------------------------------------------
# products and conjugation


def poisson_bracket_max(H1: AutonomousHamiltonian, H2: AutonomousHamiltonian, grid_resolution: int = 128) -> float:
    box = H1.support_box.union(H2.support_box)
    pts = box.grid(grid_resolution)
    n = H1.n
    g1, g2 = H1.gradient(pts), H2.gradient(pts)
    return float(np.max(np.abs(np.sum(g1[:, :n] * g2[:, n:] - g1[:, n:] * g2[:, :n], axis=-1))))


@dataclass(frozen=True)
class ComposedCheck:
    c_first: float
    c_second: float
    c_composed: float
    c_composed_oracle: float
    triangle_lhs: int
    triangle_rhs: int


def composed_selector_check(H1: AutonomousHamiltonian, H2: AutonomousHamiltonian,
                            grid_resolution: int = 96) -> ComposedCheck:
    """ceil(c(phi_1)) >= ceil(c(phi_2 phi_1) - c(phi_2)) for commuting admissible flows.

    Commuting flows compose to the flow of H1 + H2, whose selector has a
    closed form when the sum is admissible; brute force confirms it.
    """
    if poisson_bracket_max(H1, H2) > 1e-10:
        raise UnsupportedError("the flows do not commute; the composed selector has no closed form")
    S = SumHamiltonian([H1, H2])
    c1 = translation_selector(H1)
    c2 = translation_selector(H2)
    c12 = translation_selector(S)
    pts = brute_force_translated_points(S, 1.0, grid_resolution)
    oracle = max(tp.translation for tp in pts if tp.resolved)
    if abs(oracle - c12) > 1e-4:
        raise IntegrityError(f"composed selector {c12} disagrees with the brute-force maximum {oracle}")
    lhs, rhs = math.ceil(c1), math.ceil(c12 - c2)
    if lhs < rhs:
        raise IntegrityError(f"triangle inequality fails: {lhs} < {rhs}")
    return ComposedCheck(c1, c2, c12, oracle, lhs, rhs)


@dataclass(frozen=True)
class ConjugationCheck:
    max_h: float
    min_h: float
    max_conjugated: float
    min_conjugated: float
    nu_d: int
    nu_d_conjugated: int


def conjugation_spot_check(H: AutonomousHamiltonian, G: AutonomousHamiltonian, grid_resolution: int = 128,
                           tol: float = 1e-3) -> ConjugationCheck:
    """The conjugate of phi_H by the strict contactomorphism phi_G^1 is generated by H o psi_G^{-1}.

    Its extrema, sampled on a grid pushed through psi_G^{-1}, must match those
    of H, and so must the certified discriminant value built from them.
    """
    if not admissibility_check(G).admissible:
        raise HypothesisError("the conjugating flow must come from an admissible Hamiltonian")
    box = H.support_box.union(G.support_box)
    pts = box.grid(grid_resolution)
    back, _ = flow_map(G, pts, -1.0)
    vals = H.value(back)
    hi, lo = extreme_values(H)
    mx, mn = max(0.0, float(vals.max())), min(0.0, float(vals.min()))
    if abs(mx - hi) > tol or abs(mn - lo) > tol:
        raise IntegrityError(f"conjugation changed the extrema: ({hi}, {lo}) -> ({mx}, {mn})")
    nd = max(floor_plus_one(hi), floor_plus_one(-lo))
    nd_c = max(floor_plus_one(mx), floor_plus_one(-mn))
    if nd != nd_c:
        raise IntegrityError(f"discriminant value changed under conjugation: {nd} -> {nd_c}")
    return ConjugationCheck(hi, lo, mx, mn, nd, nd_c)
