"""Short periodic orbits of autonomous Hamiltonian flows.

If sup |Hess H| < 2 pi, every orbit of period at most 1 is constant.  The
search below looks for nonconstant closed orbits directly, so the statement
can only be contradicted (orbit found while the bound holds), never proved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrityError
from .flow import symplectic_vector_field
from .hamiltonian import TWO_PI, AutonomousHamiltonian, global_hessian_bound, grid_scan

CONSTANT_GRAD = 1e-8
CLOSURE_TOL = 1e-8
REL_CLOSURE = 0.2


@dataclass(frozen=True)
class OrbitCandidate:
    seed: np.ndarray
    period: float
    closure_residual: float
    nonconstant_flag: bool
    max_displacement: float
    resolved: bool = True

    def to_dict(self) -> dict:
        return {"seed": self.seed.tolist(), "period": self.period, "closure_residual": self.closure_residual,
                "nonconstant": self.nonconstant_flag, "max_displacement": self.max_displacement,
                "resolved": self.resolved}


def _scaled_flow(H, P, T, steps: int, record: int = 0):
    """psi^{T_i}(P_i) for per-row periods, by RK4 on ds = T_i X_H over s in [0, 1].

    With ``record > 0`` also returns ``record`` evenly spaced samples of each orbit.
    """
    P = np.array(P, dtype=float, copy=True)
    T = np.asarray(T, dtype=float)[:, None]
    ds = 1.0 / steps
    samples = []
    every = max(1, steps // record) if record else 0
    for k in range(steps):
        k1 = T * symplectic_vector_field(H, P)
        k2 = T * symplectic_vector_field(H, P + ds / 2 * k1)
        k3 = T * symplectic_vector_field(H, P + ds / 2 * k2)
        k4 = T * symplectic_vector_field(H, P + ds * k3)
        P = P + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if every and (k + 1) % every == 0:
            samples.append(P.copy())
    if record:
        return P, np.stack(samples, axis=1)
    return P


def _refine(H, P, T, steps, tol, max_iter=25, fd=1e-7):
    """Least-squares Newton on psi^T(p) - p = 0 in the unknowns (p, T)."""
    d = P.shape[-1]
    P = P.copy()
    T = T.copy()
    img = _scaled_flow(H, P, T, steps)
    res = np.linalg.norm(img - P, axis=-1)
    eye = np.eye(d)
    for _ in range(max_iter):
        act = np.flatnonzero(res >= tol)
        if act.size == 0:
            break
        m = len(act)
        Q, Ta = P[act], T[act]
        stencil = np.concatenate([Q[:, None, :] + fd * eye, Q[:, None, :] - fd * eye], axis=1).reshape(-1, d)
        moved = _scaled_flow(H, stencil, np.repeat(Ta, 2 * d), steps).reshape(m, 2 * d, d)
        J = np.empty((m, d, d + 1))
        J[:, :, :d] = (moved[:, :d, :] - moved[:, d:, :]).transpose(0, 2, 1) / (2 * fd) - eye
        J[:, :, d] = symplectic_vector_field(H, img[act])
        delta = -np.einsum("kij,kj->ki", np.linalg.pinv(J, rcond=1e-10), img[act] - Q)
        P[act] = Q + delta[:, :d]
        T[act] = Ta + delta[:, d]
        img[act] = _scaled_flow(H, P[act], T[act], steps)
        res[act] = np.linalg.norm(img[act] - P[act], axis=-1)
    return P, T, res


def find_periodic_orbits(H: AutonomousHamiltonian, T_max: float = 1.0, grid_resolution: int = 128,
                         period_samples: int = 256, tol: float = CLOSURE_TOL) -> list[OrbitCandidate]:
    """Nonconstant orbits with period in (0, T_max] started from grid seeds.

    Every seed is flowed once and its closure distance is recorded at the
    sampled periods; local minima of the closure that are small relative to
    the orbit's excursion are refined jointly in (p, T).  Seeds with
    |grad H| < 1e-8 and orbits whose excursion stays within 10 grid cells are
    treated as constant.
    """
    if not 0.0 < T_max <= 1.0:
        raise DomainError("T_max must lie in (0, 1]")
    if period_samples < 64:
        raise DomainError("period_samples must be >= 64")
    box = H.support_box
    if box.is_empty:
        return []
    scan = grid_scan(H, grid_resolution)
    live = np.flatnonzero(~scan.exterior & (scan.grad_norms >= CONSTANT_GRAD))
    if live.size == 0:
        return []
    seeds = scan.points[live]
    threshold = 10.0 * scan.spacing
    sub = 4
    dt = T_max / (sub * period_samples)
    P = seeds.copy()
    closure = np.empty((period_samples, len(seeds)))
    for k in range(sub * period_samples):
        k1 = symplectic_vector_field(H, P)
        k2 = symplectic_vector_field(H, P + dt / 2 * k1)
        k3 = symplectic_vector_field(H, P + dt / 2 * k2)
        k4 = symplectic_vector_field(H, P + dt * k3)
        P = P + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (k + 1) % sub == 0:
            closure[(k + 1) // sub - 1] = np.linalg.norm(P - seeds, axis=-1)
    excursion = closure.max(axis=0)
    prev = np.vstack([np.full((1, len(seeds)), -np.inf), closure[:-1]])
    nxt = np.vstack([closure[1:], np.full((1, len(seeds)), np.inf)])
    # a return: the orbit went away (running max) and came back close to the seed
    went = np.vstack([np.zeros((1, len(seeds))), np.maximum.accumulate(closure, axis=0)[:-1]])
    dips = ((closure <= prev) & (closure <= nxt) & (closure < REL_CLOSURE * went)
            & (went > threshold))
    rows, cols = np.nonzero(dips)
    if rows.size == 0:
        return []
    # one candidate per seed: its first dip (the minimal period)
    first = {}
    for r, c in zip(rows, cols):
        if c not in first:
            first[c] = r
    cand = np.array(sorted(first))
    k_idx = np.array([first[c] for c in cand])
    T0 = (k_idx + 1) * (T_max / period_samples)
    quality = closure[k_idx, cand] / excursion[cand]
    steps = max(256, int(math.ceil(4 * period_samples * T0.max() / T_max)))
    return _refine_families(H, seeds[cand], T0, quality, scan, steps, tol, T_max, period_samples)


def _refine_families(H, seeds, T0, quality, scan, steps, tol, T_max, period_samples, rounds: int = 12):
    """Refine one representative per (energy, period) bucket, drop seeds lying on refined orbits, repeat.

    Neighbouring grid seeds usually sit on neighbouring orbits of one family,
    so this keeps the number of Newton solves near the number of distinct
    orbits at grid resolution rather than the number of seeds.
    """
    threshold = 10.0 * scan.spacing
    energy = H.value(seeds)
    grad = np.linalg.norm(H.gradient(seeds), axis=-1)
    de = max(float(np.median(grad)) * scan.spacing, 1e-12)
    dT = 2.0 * T_max / period_samples
    pending = np.ones(len(seeds), dtype=bool)
    out: list[OrbitCandidate] = []
    orbits: list[tuple[np.ndarray, float]] = []
    for r in range(rounds + 1):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            break
        if r < rounds:
            buckets = {}
            for i in idx[np.argsort(quality[idx], kind="stable")]:
                key = (int(np.floor(energy[i] / de)), int(np.floor(T0[i] / dT)))
                buckets.setdefault(key, i)
            reps = np.array(sorted(buckets.values()))
        else:
            # whatever is still pending is solved in one final batch
            reps = idx
        P, T, res = _refine(H, seeds[reps], T0[reps], steps, tol)
        pending[reps] = False
        in_range = (T > 0) & (T <= T_max * (1 + 1e-9))
        ok = (res < tol) & in_range
        good = np.flatnonzero(ok)
        if good.size:
            _, samp = _scaled_flow(H, P[good], T[good], steps, record=256)
        for j, g in enumerate(good):
            S = samp[j]
            disp = float(np.max(np.linalg.norm(S - P[g], axis=-1)))
            if disp <= threshold:
                continue  # Newton slid onto a (numerically) constant orbit
            if any(abs(T[g] - Tk) < dT and np.min(np.linalg.norm(Sk - P[g], axis=-1)) < 2 * scan.spacing
                   for Sk, Tk in orbits):
                continue
            orbits.append((S, T[g]))
            out.append(OrbitCandidate(P[g].copy(), float(T[g]), float(res[g]), disp > threshold, disp))
        # Newton leaving (0, T_max] means the dip was not a return within the window
        for k in np.flatnonzero(~ok & in_range):
            i = reps[k]
            out.append(OrbitCandidate(seeds[i].copy(), float(T0[i]), float(res[k]), True, float("nan"),
                                      resolved=False))
        # seeds already covered by a refined orbit need no solve of their own
        rest = np.flatnonzero(pending)
        for Sk, Tk in orbits:
            if rest.size == 0:
                break
            d = np.min(np.linalg.norm(seeds[rest][:, None, :] - Sk[None, :, :], axis=-1), axis=1)
            hit = (d < 2 * scan.spacing) & (np.abs(T0[rest] - Tk) < dT)
            pending[rest[hit]] = False
            rest = rest[~hit]
    out.sort(key=lambda o: (o.period, tuple(o.seed)))
    return out


@dataclass(frozen=True)
class PeriodCertificate:
    bound: float
    orbits_found: int
    consistent: bool
    status: str
    grid_resolution: int
    period_samples: int


def hessian_period_certificate(H: AutonomousHamiltonian, T_max: float = 1.0, grid_resolution: int = 128,
                               period_samples: int = 256) -> PeriodCertificate:
    """Check that a nonconstant orbit of period <= T_max only appears when the bound is >= 2 pi."""
    bound = global_hessian_bound(H).value
    orbits = [o for o in find_periodic_orbits(H, T_max, grid_resolution, period_samples)
              if o.nonconstant_flag and o.resolved]
    consistent = not (bound < TWO_PI and orbits)
    if not consistent:
        raise IntegrityError(f"nonconstant orbit of period {orbits[0].period:.6g} found with Hessian bound {bound:.6g} < 2*pi")
    status = "orbits found, bound >= 2*pi" if orbits else "consistent at resolution"
    return PeriodCertificate(bound, len(orbits), consistent, status, grid_resolution, period_samples)


# ---------------------------------------------------------------------------
# Parseval loop inequality


@dataclass(frozen=True)
class ParsevalReport:
    lhs: float
    rhs: float
    ok: bool
    single_mode: bool


def sample_loop(fn, samples: int = 512) -> np.ndarray:
    """Samples of a loop gamma: [0, 1] -> R^d at samples + 1 equispaced times."""
    t = np.linspace(0.0, 1.0, samples + 1)
    return np.asarray(fn(t), dtype=float).reshape(samples + 1, -1)


def loop_parseval_check(loop, tol: float = 1e-9) -> ParsevalReport:
    """Compare ||gamma'|| with ||gamma''|| / (2 pi) in L^2([0, 1]) by spectral differentiation.

    ``loop`` holds N + 1 samples at t = k / N with the last repeating the first.
    """
    g = np.asarray(loop, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    N = g.shape[0] - 1
    if N < 128 or N & (N - 1):
        raise DomainError("the loop needs 2^k + 1 samples with 2^k >= 128")
    if np.max(np.abs(g[-1] - g[0])) > 1e-10:
        raise DomainError("curve is not closed (endpoint gap above 1e-10)")
    c = np.fft.fft(g[:-1], axis=0) / N
    k = np.fft.fftfreq(N, d=1.0 / N)
    c[N // 2] = 0.0  # the Nyquist mode has no consistent derivative
    w = 2.0 * np.pi * k[:, None]
    lhs = float(np.sqrt(np.sum(np.abs(w * c) ** 2)))
    rhs = float(np.sqrt(np.sum(np.abs(w**2 * c) ** 2))) / TWO_PI
    amp = np.sum(np.abs(c) ** 2, axis=1)
    scale = max(float(amp[1:].max(initial=0.0)), 1e-300)
    active = np.flatnonzero(amp[1:] > 1e-24 * max(1.0, scale)) + 1
    single = bool(active.size and np.all(np.abs(k[active]) == 1.0))
    ok = lhs <= rhs + tol
    if single and abs(lhs - rhs) > tol * max(1.0, rhs):
        raise IntegrityError(f"single-mode loop misses equality: {lhs!r} vs {rhs!r}")
    return ParsevalReport(lhs, rhs, ok, single)
