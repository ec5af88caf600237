"""Symplectic flows on R^{2n} and contact flows on R^{2n} x S^1.

The contact form is ``dz - sum y_i dx_i``.  A contact Hamiltonian ``h(t, p, z)``
generates the vector field X with ``alpha(X) = h`` and
``i_X d alpha = dh(R) alpha - dh``; in coordinates

    x' = -h_y,   y' = h_x + y h_z,   z' = h + <y, x'>,

and the conformal factor obeys ``g' = h_z`` along the flow.  For z-independent
h this reduces to the lift of the symplectic flow of H with z' = H + lambda(X_H).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import AccuracyError, DomainError, IntegrityError, UnsupportedError
from .hamiltonian import AutonomousHamiltonian, CylinderPoint, SupportBox, as_point

# i_X omega = -dH with omega = sum dx_i ^ dy_i, hence x' = -dH/dy, y' = dH/dx.
# SYMPLECTIC_SIGN multiplies the pair (-dH/dy, dH/dx); flipping it reverses every flow.
SYMPLECTIC_SIGN = 1.0
SIGN_CONVENTION = "i_X omega = -dH, omega = sum dx^dy: x' = -H_y, y' = H_x"

DEFAULT_STEP = 1e-3
HALVING_TOL = 1e-5
CONFORMAL_TOL = 1e-8
LIFT_TOL = 1e-6


def _split(v: np.ndarray, n: int):
    return v[..., :n], v[..., n:]


def symplectic_vector_field(H: AutonomousHamiltonian, p) -> np.ndarray:
    """X_H at p (vectorised), with the sign fixed by ``SYMPLECTIC_SIGN``."""
    g = H.gradient(np.asarray(p, dtype=float))
    gx, gy = _split(g, H.n)
    return SYMPLECTIC_SIGN * np.concatenate([-gy, gx], axis=-1)


def liouville_pairing(p, v) -> np.ndarray:
    """lambda_st(v) at p, i.e. sum y_i v_{x_i}."""
    p = np.asarray(p)
    n = p.shape[-1] // 2
    return np.sum(p[..., n:] * np.asarray(v)[..., :n], axis=-1)


# ---------------------------------------------------------------------------
# contact Hamiltonians


class ContactHamiltonian:
    """h(t, p, z) on R^{2n} x S^1, compactly supported in p uniformly in t."""

    z_independent = False
    autonomous = False

    def __init__(self, n: int, support_box: SupportBox):
        self.n = n
        self.support_box = support_box

    def value(self, t, p, z):
        raise NotImplementedError

    def grad_p(self, t, p, z):
        raise NotImplementedError

    def d_z(self, t, p, z):
        return np.zeros(np.shape(p)[:-1])


class AutonomousLift(ContactHamiltonian):
    """The z-independent lift h(p, z) = H(p)."""

    z_independent = True
    autonomous = True

    def __init__(self, H: AutonomousHamiltonian):
        self.H = H
        super().__init__(H.n, H.support_box)

    def value(self, t, p, z):
        return self.H.value(p)

    def grad_p(self, t, p, z):
        return self.H.gradient(p)


class ScheduledHamiltonian(ContactHamiltonian):
    """h^t = rate(t) H: the path t -> phi_H^{a(t)} with a' = rate."""

    z_independent = True

    def __init__(self, H: AutonomousHamiltonian, rate: Callable[[float], float]):
        self.H = H
        self.rate = rate
        super().__init__(H.n, H.support_box)

    def value(self, t, p, z):
        return self.rate(t) * self.H.value(p)

    def grad_p(self, t, p, z):
        return self.rate(t) * self.H.gradient(p)


class FunctionHamiltonian(ContactHamiltonian):
    """h given as a vectorised callable ``fn(t, p, z)``; derivatives by central differences."""

    def __init__(self, fn: Callable, n: int, support_box: SupportBox, z_independent: bool = False,
                 fd_step: float = 1e-6):
        self.fn = fn
        self.fd_step = fd_step
        self.z_independent = z_independent
        super().__init__(n, support_box)

    def value(self, t, p, z):
        return np.asarray(self.fn(t, p, z), dtype=float)

    def grad_p(self, t, p, z):
        p = np.asarray(p, dtype=float)
        h = self.fd_step
        cols = []
        for k in range(2 * self.n):
            e = np.zeros(2 * self.n)
            e[k] = h
            cols.append((self.fn(t, p + e, z) - self.fn(t, p - e, z)) / (2 * h))
        return np.stack(cols, axis=-1)

    def d_z(self, t, p, z):
        if self.z_independent:
            return np.zeros(np.shape(p)[:-1])
        h = self.fd_step
        return (self.fn(t, p, z + h) - self.fn(t, p, z - h)) / (2 * h)


@dataclass
class ContactPathSpec:
    hamiltonian: ContactHamiltonian
    T: float = 1.0
    scheme: str = "rk4"
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if isinstance(self.hamiltonian, AutonomousHamiltonian):
            self.hamiltonian = AutonomousLift(self.hamiltonian)
        if not (self.T > 0 and self.step > 0):
            raise DomainError("time horizon and step must be positive")
        if self.scheme not in ("rk4", "verlet"):
            raise DomainError(f"unknown integrator scheme {self.scheme!r}")

    @property
    def n(self) -> int:
        return self.hamiltonian.n


def as_path(h, **kw) -> ContactPathSpec:
    return h if isinstance(h, ContactPathSpec) else ContactPathSpec(h, **kw)


@dataclass(frozen=True)
class LiftState:
    base: np.ndarray
    reeb_lift: float
    conformal: float

    @property
    def fiber(self) -> float:
        return self.reeb_lift % 1.0


@dataclass
class Trajectory:
    times: np.ndarray
    base: np.ndarray
    reeb_lift: np.ndarray
    conformal: np.ndarray
    energy_drift: float | None = None
    drift_series: np.ndarray | None = None

    @property
    def states(self) -> list[LiftState]:
        return [LiftState(b, float(z), float(g)) for b, z, g in zip(self.base, self.reeb_lift, self.conformal)]

    def final(self) -> LiftState:
        return LiftState(self.base[-1].copy(), float(self.reeb_lift[-1]), float(self.conformal[-1]))

    def write_csv(self, path) -> None:
        n = self.base.shape[1] // 2
        head = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + ["z_lift", "g", "H_drift"]
        drift = self.drift_series if self.drift_series is not None else np.full(len(self.times), np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for k, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in self.base[k]]
                           + [repr(float(self.reeb_lift[k])), repr(float(self.conformal[k])), repr(float(drift[k]))])


def contact_vector_field(h, q, t: float = 0.0, debug: bool = False):
    """Base and z components of X_h at ``q`` (a CylinderPoint or arrays (p, z))."""
    ham = as_path(h).hamiltonian
    if isinstance(q, CylinderPoint):
        p, z = q.base, q.fiber
    else:
        p, z = q
    p = np.asarray(p, dtype=float)
    z = np.asarray(z, dtype=float)
    vp, vz, _ = _contact_rhs(ham, t, p, z)
    if debug:
        _verify_defining_relations(ham, t, p, z, vp, vz)
    return vp, vz


def _contact_rhs(ham: ContactHamiltonian, t, p, z):
    n = ham.n
    val = ham.value(t, p, z)
    gx, gy = _split(ham.grad_p(t, p, z), n)
    y = p[..., n:]
    if ham.z_independent:
        hz = np.zeros_like(val)
        vx = -SYMPLECTIC_SIGN * gy
        vy = SYMPLECTIC_SIGN * gx
    else:
        hz = ham.d_z(t, p, z)
        vx = -gy
        vy = gx + y * hz[..., None]
    vz = val + np.sum(y * vx, axis=-1)
    return np.concatenate([vx, vy], axis=-1), vz, hz


def _verify_defining_relations(ham, t, p, z, vp, vz, tol: float = 1e-9):
    """Check alpha(X) = h and i_X d alpha = h_z alpha - dh componentwise."""
    n = ham.n
    val = ham.value(t, p, z)
    gx, gy = _split(ham.grad_p(t, p, z), n)
    hz = ham.d_z(t, p, z)
    y = p[..., n:]
    vx, vy = _split(vp, n)
    r_alpha = vz - np.sum(y * vx, axis=-1) - val
    # d alpha = dx ^ dy, so i_X d alpha = X_x dy - X_y dx
    r_dx = -vy - (-hz[..., None] * y - gx)
    r_dy = vx - (-gy)
    # the dz components agree identically: h_z * 1 - h_z on the right, 0 on the left
    worst = max(float(np.max(np.abs(r_alpha))), float(np.max(np.abs(r_dx))), float(np.max(np.abs(r_dy))))
    if worst > tol:
        raise IntegrityError(f"contact vector field violates its defining relations (residual {worst:.3e})")


# ---------------------------------------------------------------------------
# integrators


def _grid(T: float, step: float, even: bool = True) -> tuple[int, float]:
    N = max(2, int(math.ceil(T / step - 1e-12)))
    if even and N % 2:
        N += 1
    return N, T / N


def _rk4_contact(ham: ContactHamiltonian, P0, Z0, T: float, step: float, store: bool):
    """RK4 on (p, z, g); batched over leading axes of P0."""
    N, dt = _grid(T, step)
    P = np.array(P0, dtype=float, copy=True)
    Z = np.array(Z0, dtype=float, copy=True) * np.ones(P.shape[:-1])
    G = np.zeros(P.shape[:-1])
    if store:
        hist_p = np.empty((N + 1,) + P.shape)
        hist_z = np.empty((N + 1,) + Z.shape)
        hist_g = np.empty((N + 1,) + G.shape)
        hist_p[0], hist_z[0], hist_g[0] = P, Z, G
    t = 0.0
    for k in range(N):
        a1 = _contact_rhs(ham, t, P, Z)
        a2 = _contact_rhs(ham, t + dt / 2, P + dt / 2 * a1[0], Z + dt / 2 * a1[1])
        a3 = _contact_rhs(ham, t + dt / 2, P + dt / 2 * a2[0], Z + dt / 2 * a2[1])
        a4 = _contact_rhs(ham, t + dt, P + dt * a3[0], Z + dt * a3[1])
        P = P + dt / 6 * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
        Z = Z + dt / 6 * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
        G = G + dt / 6 * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2])
        t = (k + 1) * dt
        if store:
            hist_p[k + 1], hist_z[k + 1], hist_g[k + 1] = P, Z, G
    times = np.linspace(0.0, T, N + 1)
    if store:
        return times, hist_p, hist_z, hist_g
    return times, P, Z, G


def _verlet_base(ham: ContactHamiltonian, P0, T: float, step: float, max_iter: int = 50, tol: float = 1e-14):
    """Generalised Stormer-Verlet with q = y, momentum = x (z-independent h only)."""
    if not ham.z_independent:
        raise UnsupportedError("the Stormer-Verlet scheme handles z-independent Hamiltonians only")
    n = ham.n
    N, dt = _grid(T, step)
    P = np.array(P0, dtype=float, copy=True)
    hist = np.empty((N + 1,) + P.shape)
    hist[0] = P

    def grads(t, x, y):
        g = ham.grad_p(t, np.concatenate([x, y], axis=-1), 0.0)
        return _split(SYMPLECTIC_SIGN * g, n)

    for k in range(N):
        tm = (k + 0.5) * dt
        x, y = _split(P, n)
        # y' = H_x, x' = -H_y: y plays position, x plays momentum
        xh = x.copy()
        for _ in range(max_iter):
            _, gy = grads(tm, xh, y)
            new = x - dt / 2 * gy
            done = np.max(np.abs(new - xh)) < tol
            xh = new
            if done:
                break
        gx0, _ = grads(tm, xh, y)
        y1 = y + dt * gx0
        for _ in range(max_iter):
            gx1, _ = grads(tm, xh, y1)
            new = y + dt / 2 * (gx0 + gx1)
            done = np.max(np.abs(new - y1)) < tol
            y1 = new
            if done:
                break
        _, gy1 = grads(tm, xh, y1)
        x1 = xh - dt / 2 * gy1
        P = np.concatenate([x1, y1], axis=-1)
        hist[k + 1] = P
    return np.linspace(0.0, T, N + 1), hist


def _integrand_series(ham: ContactHamiltonian, times, hist_p):
    """h + lambda(X_h) sampled along a stored base trajectory (z-independent h)."""
    vals = np.empty(len(times))
    for k, t in enumerate(times):
        _, vz, _ = _contact_rhs(ham, t, hist_p[k], np.zeros(()))
        vals[k] = vz
    return vals


def integrate_path(path: ContactPathSpec, p0, z0: float = 0.0) -> Trajectory:
    """Full trajectory of the lift (base, un-wrapped z, conformal factor)."""
    ham = path.hamiltonian
    p0 = as_point(p0, ham.n)
    if path.scheme == "rk4":
        times, hp, hz, hg = _rk4_contact(ham, p0, z0, path.T, path.step, store=True)
    else:
        times, hp = _verlet_base(ham, p0, path.T, path.step)
        series = _integrand_series(ham, times, hp)
        hz = z0 + _cumulative_simpson(series, times)
        hg = np.zeros(len(times))
    drift = drift_series = None
    if ham.autonomous:
        e = ham.value(0.0, hp, 0.0)
        drift_series = np.abs(e - e[0])
        drift = float(drift_series.max())
    return Trajectory(times, hp, hz, hg, drift, drift_series)


def _cumulative_simpson(vals: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Running integral: Simpson at even nodes, Simpson plus a cubic end panel at odd ones."""
    out = np.zeros(len(vals))
    for k in range(1, len(vals)):
        out[k] = simpson(vals[: k + 1], x=times[: k + 1])
    return out


def _flow_endpoint(H: AutonomousHamiltonian, p0, t: float, step: float, scheme: str):
    path = ContactPathSpec(H, T=t, scheme=scheme, step=step)
    if scheme == "rk4":
        _, P, _, _ = _rk4_contact(path.hamiltonian, p0, 0.0, t, step, store=False)
        return P
    return _verlet_base(path.hamiltonian, p0, t, step)[1][-1]


@dataclass(frozen=True)
class FlowResult:
    point: np.ndarray
    energy_drift: float
    error_estimate: float


def integrate_symplectic(H: AutonomousHamiltonian, p0, t: float, step: float = DEFAULT_STEP,
                         scheme: str = "rk4", check: bool = True) -> FlowResult:
    """psi_H^t(p0) with energy drift and a step-halving error estimate.

    Negative t integrates the reversed field.
    """
    p0 = as_point(p0, H.n)
    if t == 0:
        return FlowResult(p0.copy(), 0.0, 0.0)
    G = H if t > 0 else -H
    T = abs(t)
    traj = integrate_path(ContactPathSpec(G, T=T, scheme=scheme, step=step), p0)
    end = traj.base[-1]
    err = 0.0
    if check:
        fine = _flow_endpoint(G, p0, T, step / 2, scheme)
        err = float(np.max(np.abs(fine - end)))
        if err > HALVING_TOL:
            raise AccuracyError(f"step halving changes the endpoint by {err:.3e}; reduce the step below {step}")
    return FlowResult(end.copy(), traj.energy_drift, err)


def flow_map(H: AutonomousHamiltonian, P0, t: float, step: float = DEFAULT_STEP):
    """Batched psi_H^t together with the Reeb shift F^t; no diagnostics."""
    G = H if t >= 0 else -H
    if t == 0:
        P0 = np.asarray(P0, dtype=float)
        return P0.copy(), np.zeros(P0.shape[:-1])
    _, P, Z, _ = _rk4_contact(AutonomousLift(G), P0, 0.0, abs(t), step, store=False)
    return P, (Z if t > 0 else -Z)


def reeb_shift(H: AutonomousHamiltonian, p0, t: float, step: float = DEFAULT_STEP, scheme: str = "rk4",
               check: bool = True) -> float:
    """F^t(p0) = int_0^t lambda(X_H)(psi^s p0) ds + t H(p0), Simpson on the flow grid."""
    p0 = as_point(p0, H.n)
    if t == 0:
        return 0.0
    if t < 0:
        return _reeb_backward(H, p0, t, step, scheme)
    traj = integrate_path(ContactPathSpec(H, T=t, scheme=scheme, step=step), p0)
    lam = liouville_pairing(traj.base, symplectic_vector_field(H, traj.base))
    val = float(simpson(lam, x=traj.times)) + t * float(H.value(p0))
    if check:
        fine = integrate_path(ContactPathSpec(H, T=t, scheme=scheme, step=step / 2), p0)
        lam2 = liouville_pairing(fine.base, symplectic_vector_field(H, fine.base))
        val2 = float(simpson(lam2, x=fine.times)) + t * float(H.value(p0))
        if abs(val2 - val) > HALVING_TOL:
            raise AccuracyError(f"Reeb shift changes by {abs(val2 - val):.3e} under step halving")
    return val


def _reeb_backward(H, p0, t, step, scheme):
    # negative times flow -H forward; the lift of that flow is the negative-time lift
    G = -H
    T = -t
    traj = integrate_path(ContactPathSpec(G, T=T, scheme=scheme, step=step), p0)
    lam = liouville_pairing(traj.base, symplectic_vector_field(G, traj.base))
    return float(simpson(lam, x=traj.times)) + T * float(G.value(p0))


def reeb_shift_series(H: AutonomousHamiltonian, p0, T: float, step: float = DEFAULT_STEP):
    """(times, F^t(p0)) for every node of the flow grid on [0, T]."""
    p0 = as_point(p0, H.n)
    traj = integrate_path(ContactPathSpec(H, T=T, step=step), p0)
    lam = liouville_pairing(traj.base, symplectic_vector_field(H, traj.base))
    return traj.times, _cumulative_simpson(lam, traj.times) + traj.times * float(H.value(p0))


def integrate_contact(h, q0, t: float, step: float | None = None, scheme: str | None = None,
                      check: bool = True, return_trajectory: bool = False):
    """phi_h^t(q0) as a LiftState (base, un-wrapped z, conformal factor).

    For z-independent h the conformal factor must vanish and the z-lift must
    match an independent Simpson quadrature of h + lambda(X_h) on the same grid.
    """
    path = as_path(h)
    if step is not None or scheme is not None:
        path = ContactPathSpec(path.hamiltonian, T=path.T, scheme=scheme or path.scheme, step=step or path.step)
    if isinstance(q0, CylinderPoint):
        p0, z0 = q0.base, q0.fiber
    else:
        p0, z0 = q0
    if not t > 0:
        if t == 0:
            st = LiftState(as_point(p0).copy(), float(z0), 0.0)
            return (st, None) if return_trajectory else st
        raise DomainError("integrate_contact integrates forward in time only")
    run = ContactPathSpec(path.hamiltonian, T=t, scheme=path.scheme, step=path.step)
    traj = integrate_path(run, p0, float(z0))
    ham = run.hamiltonian
    if check and ham.z_independent:
        g_max = float(np.max(np.abs(traj.conformal)))
        if g_max > CONFORMAL_TOL:
            raise IntegrityError(f"conformal factor {g_max:.3e} for a z-independent Hamiltonian")
        quad = float(z0) + float(simpson(_integrand_series(ham, traj.times, traj.base), x=traj.times))
        if abs(quad - traj.reeb_lift[-1]) > LIFT_TOL:
            raise IntegrityError(f"z-lift disagrees with the Reeb-shift quadrature by {abs(quad - traj.reeb_lift[-1]):.3e}")
    st = traj.final()
    return (st, traj) if return_trajectory else st
