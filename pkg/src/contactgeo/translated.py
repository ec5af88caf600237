"""Translated points of time-t maps of autonomous contact Hamiltonians.

For a z-independent h = H the time-t map is ``(p, z) -> (psi^t p, z + F^t(p))``
with zero conformal factor, so a translated point is a fixed point p of
psi^t and its translation is F^t(p).  Under the Hessian bound the only such
points are critical points (plus the support complement), which gives the
closed-form spectrum and selector; ``brute_force_translated_points`` finds them
directly from the flow and serves as the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HypothesisError
from .flow import DEFAULT_STEP, flow_map
from .hamiltonian import (AutonomousHamiltonian, CriticalPoint, CylinderPoint, admissibility_check,
                          critical_points, extreme_values, grid_scan, _dedup)

VALUE_MERGE_TOL = 1e-9
INTEGER_TOL = 1e-6


def require_admissible(H: AutonomousHamiltonian, what: str) -> None:
    rep = admissibility_check(H)
    if not rep.admissible:
        raise HypothesisError(
            f"{what} needs sup |Hess H| < 2*pi; the certified bound is {rep.bound:.6g}")


@dataclass
class SpectrumReport:
    values: tuple[float, ...]
    witnesses: dict[float, list[CriticalPoint]]
    time_scale: float

    def to_dict(self) -> dict:
        return {
            "time_scale": self.time_scale,
            "values": list(self.values),
            "witnesses": [
                {"value": v, "points": [
                    {"location": cp.location.tolist(), "critical_value": cp.value,
                     "gradient_residual": cp.gradient_residual, "synthetic": cp.synthetic}
                    for cp in self.witnesses[v]]}
                for v in self.values
            ],
        }


def merged_critical_values(H: AutonomousHamiltonian, grid_resolution: int | None = None):
    """Critical values merged within 1e-9, each with its witnesses."""
    pts = sorted((cp for cp in critical_points(H, grid_resolution) if cp.resolved), key=lambda c: c.value)
    groups: list[list[CriticalPoint]] = []
    for cp in pts:
        if groups and abs(cp.value - groups[-1][0].value) <= VALUE_MERGE_TOL:
            groups[-1].append(cp)
        else:
            groups.append([cp])
    out = []
    for g in groups:
        # the synthetic entry carries the exact 0; otherwise the best-refined witness
        rep = next((c for c in g if c.synthetic), min(g, key=lambda c: c.gradient_residual))
        out.append((rep.value, g))
    return out


def spectrum_autonomous(H: AutonomousHamiltonian, t: float, grid_resolution: int | None = None) -> SpectrumReport:
    """{t v : v a critical value of H}, the support complement included."""
    require_admissible(H, "the spectrum formula")
    witnesses: dict[float, list[CriticalPoint]] = {}
    for v, group in merged_critical_values(H, grid_resolution):
        witnesses.setdefault(t * v, []).extend(group)
    return SpectrumReport(tuple(sorted(witnesses)), witnesses, float(t))


def _check_time(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"selector time must lie in [0, 1], got {t}")


def translation_selector(H: AutonomousHamiltonian, t: float = 1.0) -> float:
    """c(phi_H^t) = t max H on the admissible class."""
    _check_time(t)
    require_admissible(H, "the selector formula")
    return t * extreme_values(H)[0]


def translation_selector_inverse(H: AutonomousHamiltonian, t: float = 1.0) -> float:
    """c((phi_H^t)^{-1}) = -t min H on the admissible class."""
    _check_time(t)
    require_admissible(H, "the selector formula")
    return -t * extreme_values(H)[1] + 0.0


# ---------------------------------------------------------------------------
# brute force


@dataclass(frozen=True)
class TranslatedPoint:
    location: CylinderPoint
    translation: float
    fixed_point_residual: float
    conformal_residual: float
    resolved: bool = True
    exterior: bool = False
    count: int = 1

    def to_dict(self) -> dict:
        return {
            "base": self.location.base.tolist(),
            "translation": self.translation,
            "fixed_point_residual": self.fixed_point_residual,
            "conformal_residual": self.conformal_residual,
            "resolved": self.resolved,
            "exterior": self.exterior,
            "count": self.count,
        }


def _fixed_point_newton(H, P, t, step, tol, max_iter=30, fd=1e-6):
    """Batched least-squares Newton on psi^t(p) - p = 0 with a finite-difference Jacobian."""
    d = P.shape[-1]
    span = float(np.max(H.support_box.hi - H.support_box.lo))
    P = np.array(P, dtype=float, copy=True)
    img, _ = flow_map(H, P, t, step)
    res = np.linalg.norm(img - P, axis=-1)
    eye = np.eye(d)
    for _ in range(max_iter):
        act = np.flatnonzero(res >= tol)
        if act.size == 0:
            break
        Q = P[act]
        R = img[act] - Q
        stencil = np.concatenate([Q[:, None, :] + fd * eye, Q[:, None, :] - fd * eye], axis=1)
        moved, _ = flow_map(H, stencil.reshape(-1, d), t, step)
        moved = moved.reshape(len(act), 2 * d, d)
        J = (moved[:, :d, :] - moved[:, d:, :]).transpose(0, 2, 1) / (2 * fd) - eye
        # orbits of periodic families are never isolated, hence the pseudo-inverse
        delta = -np.einsum("kij,kj->ki", np.linalg.pinv(J, rcond=1e-10), R)
        norm = np.linalg.norm(delta, axis=-1, keepdims=True)
        delta = np.where(norm > 0.1 * span, delta * (0.1 * span / np.maximum(norm, 1e-300)), delta)
        P[act] = Q + delta
        img[act], _ = flow_map(H, P[act], t, step)
        res[act] = np.linalg.norm(img[act] - P[act], axis=-1)
    return P, res


def _exterior_entry(H, count: int) -> TranslatedPoint:
    return TranslatedPoint(CylinderPoint(H.support_box.outside_point(), 0.0), 0.0, 0.0, 0.0,
                           exterior=True, count=count)


def brute_force_translated_points(H: AutonomousHamiltonian, t: float, grid_resolution: int | None = None,
                                  tol: float = 1e-9, step: float = DEFAULT_STEP,
                                  seed_step: float = 1e-2) -> list[TranslatedPoint]:
    """Translated points of phi_H^t found from the flow alone.

    Grid seeds with ``|psi^t p - p|`` below two cells are Newton-refined; the
    translation is the Reeb shift F^t at the refined point.  Seeds in the
    numerically flat region joined to the box boundary, and refinements that
    end there, are the support complement and are collapsed into a single
    exterior entry (translation 0) whose ``count`` is the number of such seeds.
    """
    res = grid_resolution or (128 if H.n == 1 else 24)
    box = H.support_box
    if box.is_empty or t == 0:
        n_seeds = res ** (2 * H.n)
        return [_exterior_entry(H, n_seeds)]
    scan = grid_scan(H, res)
    seeds = scan.points
    ext = scan.exterior.copy()
    live = np.flatnonzero(~ext)
    count_ext = int(ext.sum())
    out: list[TranslatedPoint] = []
    if live.size:
        img, _ = flow_map(H, seeds[live], t, seed_step)
        disp = np.linalg.norm(img - seeds[live], axis=-1)
        cand = live[disp < 2.0 * scan.spacing]
        if cand.size:
            # solve on the coarse-step map first: most boundary-layer seeds drain
            # into the flat exterior there, and only the rest are polished
            P, resid = _fixed_point_newton(H, seeds[cand], t, seed_step, 1e-8, max_iter=20)
            in_ext = scan.is_exterior(P, box)
            polish = np.flatnonzero(~in_ext)
            if polish.size:
                P[polish], resid[polish] = _fixed_point_newton(H, P[polish], t, step, tol)
                in_ext[polish] = scan.is_exterior(P[polish], box)
            ok = resid < tol
            count_ext += int(np.sum(in_ext))
            keep = np.flatnonzero(ok & ~in_ext)
            if keep.size:
                Pk = P[keep]
                _, F = flow_map(H, Pk, t, step)
                for k in _dedup(Pk, resid[keep], 2 * scan.spacing):
                    out.append(TranslatedPoint(CylinderPoint(Pk[k], 0.0), float(F[k]), float(resid[keep][k]), 0.0))
            bad = np.flatnonzero(~ok & ~in_ext)
            if bad.size:
                for k in _dedup(seeds[cand][bad], resid[bad], 2 * scan.spacing):
                    p = seeds[cand][bad][k]
                    _, F = flow_map(H, p[None], t, step)
                    out.append(TranslatedPoint(CylinderPoint(p, 0.0), float(F[0]), float(resid[bad][k]), 0.0,
                                               resolved=False))
    out.sort(key=lambda tp: (tp.translation, tuple(tp.location.base)))
    out.append(_exterior_entry(H, count_ext))
    return out


def translation_values(points: list[TranslatedPoint], decimals: int = 6) -> list[float]:
    """Distinct translations of resolved points (the exterior contributes 0)."""
    vals = sorted({round(tp.translation, decimals) for tp in points if tp.resolved})
    return [v + 0.0 for v in vals]


def discriminant_points(H: AutonomousHamiltonian, t: float, grid_resolution: int | None = None,
                        tol: float = INTEGER_TOL) -> list[TranslatedPoint]:
    """Translated points with integer translation inside the open support box."""
    return [tp for tp in brute_force_translated_points(H, t, grid_resolution)
            if tp.resolved and not tp.exterior
            and abs(tp.translation - round(tp.translation)) < tol and tp.conformal_residual < tol]


def first_discriminant_time(H: AutonomousHamiltonian, t_max: float = 1.0, samples: int = 16,
                            grid_resolution: int | None = None, t_tol: float = 1e-5) -> float | None:
    """Smallest t in (0, t_max] where phi_H^t has an interior discriminant point.

    Scans t for the first sample where some interior translated point reaches
    |translation| >= 1, then bisects in t re-refining that point.
    """
    res = grid_resolution or (64 if H.n == 1 else 16)
    ts = np.linspace(0.0, t_max, samples + 1)[1:]
    prev = 0.0
    for tb in ts:
        pts = [tp for tp in brute_force_translated_points(H, float(tb), res) if tp.resolved and not tp.exterior]
        if pts and max(abs(tp.translation) for tp in pts) >= 1.0:
            best = max(pts, key=lambda tp: abs(tp.translation))
            p = best.location.base[None, :]
            lo, hi = prev, float(tb)
            while hi - lo > t_tol:
                mid = 0.5 * (lo + hi)
                P, _ = _fixed_point_newton(H, p, mid, DEFAULT_STEP, 1e-10)
                _, F = flow_map(H, P, mid, DEFAULT_STEP)
                if abs(F[0]) >= 1.0:
                    hi, p = mid, P
                else:
                    lo = mid
            return hi
        prev = float(tb)
    return None
