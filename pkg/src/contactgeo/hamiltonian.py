"""Compactly supported autonomous Hamiltonians on R^{2n}.

Every evaluator is vectorised over leading axes: ``value`` maps ``(..., 2n)``
to ``(...)``, ``gradient`` to ``(..., 2n)`` and ``hessian`` to
``(..., 2n, 2n)``.  Coordinates are ordered ``(x_1..x_n, y_1..y_n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, optimize

from .errors import BracketError, DomainError, IntegrityError

TWO_PI = 2.0 * math.pi
DEFAULT_SAFETY_MARGIN = 1e-3
EXPONENT_FLOOR = -700.0
SYMMETRY_TOL = 1e-10
NEWTON_TOL = 1e-10
EPS_VALUE = 1e-6
EPS_GRAD = 1e-5


def default_resolution(n: int) -> int:
    return 256 if n == 1 else 64


# ---------------------------------------------------------------------------
# points and boxes


def as_point(p, n: int | None = None) -> np.ndarray:
    """Validate a phase-space point (or a stack of them)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] % 2 or arr.shape[-1] == 0:
        raise DomainError(f"phase-space points need an even, positive length; got shape {arr.shape}")
    if n is not None and arr.shape[-1] != 2 * n:
        raise DomainError(f"expected points of length {2 * n}, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("phase-space point has non-finite entries")
    return arr


@dataclass(frozen=True)
class CylinderPoint:
    """A point of R^{2n} x S^1; ``fiber`` is kept in [0, 1)."""

    base: np.ndarray
    fiber: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        object.__setattr__(self, "fiber", float(self.fiber) % 1.0)


@dataclass(frozen=True)
class SupportBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise DomainError("support box corners have different shapes")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, center, half_width: float) -> "SupportBox":
        c = np.asarray(center, dtype=float)
        return cls(c - half_width, c + half_width)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.hi <= self.lo))

    def contains(self, p, open_: bool = False) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if open_:
            return np.all((p > self.lo) & (p < self.hi), axis=-1)
        return np.all((p >= self.lo) & (p <= self.hi), axis=-1)

    def axes(self, resolution: int) -> list[np.ndarray]:
        return [np.linspace(a, b, resolution) for a, b in zip(self.lo, self.hi)]

    def spacing(self, resolution: int) -> float:
        return float(np.max(self.hi - self.lo)) / (resolution - 1)

    def grid(self, resolution: int) -> np.ndarray:
        """Grid points in lexicographic order, shape ``(resolution**d, d)``."""
        mesh = np.meshgrid(*self.axes(resolution), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def union(self, other: "SupportBox") -> "SupportBox":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return SupportBox(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def outside_point(self, offset: float = 1.0) -> np.ndarray:
        """A point strictly outside the box, where every supported H vanishes."""
        if self.is_empty:
            return np.full(self.dim, offset)
        return self.lo - offset


def empty_box(n: int) -> SupportBox:
    return SupportBox(np.zeros(2 * n), np.zeros(2 * n))


# ---------------------------------------------------------------------------
# smooth profiles


def smooth_step(s):
    """C-infinity step 0 -> 1 on [0, 1] with its first two derivatives."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    u = np.where(inside, s, 0.5)
    v = 1.0 - u
    a = np.exp(-1.0 / u)
    b = np.exp(-1.0 / v)
    da = a / u**2
    db = -b / v**2
    dda = a * (1.0 / u**4 - 2.0 / u**3)
    ddb = b * (1.0 / v**4 - 2.0 / v**3)
    d = a + b
    step = a / d
    d1 = (da * b - a * db) / d**2
    d2 = (dda * b - a * ddb) / d**2 - 2.0 * d1 * (da + db) / d
    step = np.where(inside, step, np.where(s >= 1.0, 1.0, 0.0))
    d1 = np.where(inside, d1, 0.0)
    d2 = np.where(inside, d2, 0.0)
    return step, d1, d2


def plateau(v, lo: float, hi: float, width: float):
    """Cutoff equal to 1 on [lo, hi], 0 outside [lo - width, hi + width]."""
    s1, d1, dd1 = smooth_step((np.asarray(v) - (lo - width)) / width)
    s2, d2, dd2 = smooth_step(((hi + width) - np.asarray(v)) / width)
    d1, dd1 = d1 / width, dd1 / width**2
    d2, dd2 = -d2 / width, dd2 / width**2
    return s1 * s2, d1 * s2 + s1 * d2, dd1 * s2 + 2.0 * d1 * d2 + s1 * dd2


def eval_bump_profile(B: float, x):
    """The one-variable bump ``exp(-B^2 (x^2 - B)^-2)`` supported on |x| <= sqrt(B)."""
    if not B > 0:
        raise DomainError(f"bump parameter B must be positive, got {B}")
    x = np.asarray(x, dtype=float)
    gap = x * x - B
    inside = gap < 0.0
    safe = np.where(inside, gap, -1.0)
    expo = -(B * B) / safe**2
    out = np.where(inside & (expo > EXPONENT_FLOOR), np.exp(np.maximum(expo, EXPONENT_FLOOR)), 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Hamiltonians


class AutonomousHamiltonian:
    """Base class: a smooth H: R^{2n} -> R vanishing outside ``support_box``."""

    derivative_mode = "analytic"

    def __init__(self, n: int, support_box: SupportBox):
        if n < 1:
            raise DomainError("dimension n must be >= 1")
        if support_box.dim != 2 * n:
            raise DomainError("support box dimension does not match 2n")
        self.n = n
        self.support_box = support_box
        self._cache: dict = {}

    def value(self, p):
        raise NotImplementedError

    def gradient(self, p):
        raise NotImplementedError

    def hessian(self, p):
        raise NotImplementedError

    def __call__(self, p):
        return self.value(p)

    def __neg__(self):
        return SumHamiltonian([self], [-1.0])

    def __add__(self, other):
        return SumHamiltonian([self, other])

    def __rmul__(self, coeff):
        return SumHamiltonian([self], [float(coeff)])


class ZeroHamiltonian(AutonomousHamiltonian):
    def __init__(self, n: int = 1, support_box: SupportBox | None = None):
        super().__init__(n, support_box if support_box is not None else empty_box(n))

    def value(self, p):
        return np.zeros(np.shape(p)[:-1])

    def gradient(self, p):
        return np.zeros(np.shape(p))

    def hessian(self, p):
        shape = np.shape(p)
        return np.zeros(shape + (shape[-1],))


class RadialHamiltonian(AutonomousHamiltonian):
    """H(p) = F(|p - c|^2) for a profile F given with F' and F''."""

    def __init__(self, n: int, profile: Callable, center=None, radius: float = 1.0):
        self.center = np.zeros(2 * n) if center is None else np.asarray(center, dtype=float)
        self.radius = float(radius)
        self._profile = profile
        super().__init__(n, SupportBox.cube(self.center, self.radius))

    def profile(self, u):
        """Return ``(F, F', F'')`` at ``u = |p - c|^2``."""
        return self._profile(u)

    def value(self, p):
        d = np.asarray(p, dtype=float) - self.center
        return self.profile(np.sum(d * d, axis=-1))[0]

    def gradient(self, p):
        d = np.asarray(p, dtype=float) - self.center
        _, f1, _ = self.profile(np.sum(d * d, axis=-1))
        return 2.0 * f1[..., None] * d

    def hessian(self, p):
        d = np.asarray(p, dtype=float) - self.center
        _, f1, f2 = self.profile(np.sum(d * d, axis=-1))
        eye = np.eye(2 * self.n)
        return 2.0 * f1[..., None, None] * eye + 4.0 * f2[..., None, None] * d[..., :, None] * d[..., None, :]


class RadialBump(RadialHamiltonian):
    """``(A / f_B(0)) f_B(|p|)``: maximum A at the center, support radius sqrt(B)."""

    def __init__(self, B: float, A: float, n: int = 1, center=None):
        if not (B > 0 and A > 0):
            raise DomainError(f"bump parameters must be positive (B={B}, A={A})")
        self.B = float(B)
        self.A = float(A)
        super().__init__(n, self._bump_profile, center=center, radius=math.sqrt(self.B))

    def _bump_profile(self, u):
        B, A = self.B, self.A
        u = np.asarray(u, dtype=float)
        gap = u - B
        inside = gap < 0.0
        g = np.where(inside, gap, -1.0)
        # exp(1 - B^2/(u-B)^2) so that the value at the center is exactly A
        expo = 1.0 - (B * B) / g**2
        live = inside & (expo > EXPONENT_FLOOR)
        f = np.where(live, A * np.exp(np.maximum(expo, EXPONENT_FLOOR)), 0.0)
        r1 = 2.0 * B * B / g**3
        f1 = np.where(live, f * r1, 0.0)
        f2 = np.where(live, f * (r1 * r1 - 6.0 * B * B / g**4), 0.0)
        return f, f1, f2

    def __repr__(self):
        return f"RadialBump(B={self.B!r}, A={self.A!r}, n={self.n})"


def make_radial_bump(B: float, A: float, n: int = 1, center=None) -> RadialBump:
    return RadialBump(B, A, n=n, center=center)


class QuadraticCore(RadialHamiltonian):
    """``(a/2)|p|^2`` for |p| <= R, cut off smoothly to zero at radius R + width."""

    def __init__(self, a: float, cutoff_radius: float = 1.0, transition_width: float = 1.0, n: int = 1, center=None):
        if not (cutoff_radius > 0 and transition_width > 0):
            raise DomainError("cutoff radius and transition width must be positive")
        self.a = float(a)
        self.cutoff_radius = float(cutoff_radius)
        self.transition_width = float(transition_width)
        outer = self.cutoff_radius + self.transition_width
        self._u0 = self.cutoff_radius**2
        self._du = outer**2 - self._u0
        super().__init__(n, self._core_profile, center=center, radius=outer)

    def _core_profile(self, u):
        u = np.asarray(u, dtype=float)
        s, s1, s2 = smooth_step((u - self._u0) / self._du)
        chi, chi1, chi2 = 1.0 - s, -s1 / self._du, -s2 / self._du**2
        half = 0.5 * self.a
        return half * u * chi, half * (chi + u * chi1), half * (2.0 * chi1 + u * chi2)

    def __repr__(self):
        return f"QuadraticCore(a={self.a!r}, cutoff_radius={self.cutoff_radius!r}, transition_width={self.transition_width!r}, n={self.n})"


class SeparableProduct(AutonomousHamiltonian):
    """``coeff * prod_j g_j(p_j)``; each factor returns ``(g, g', g'')``."""

    def __init__(self, factors: Sequence[Callable], coeff: float, support_box: SupportBox):
        self.factors = list(factors)
        self.coeff = float(coeff)
        super().__init__(len(self.factors) // 2, support_box)

    def _tables(self, p):
        p = np.asarray(p, dtype=float)
        cols = [f(p[..., j]) for j, f in enumerate(self.factors)]
        g = np.stack([c[0] for c in cols], axis=-1)
        g1 = np.stack([c[1] for c in cols], axis=-1)
        g2 = np.stack([c[2] for c in cols], axis=-1)
        return g, g1, g2

    @staticmethod
    def _prod_except(g, skip):
        keep = [j for j in range(g.shape[-1]) if j not in skip]
        return np.prod(g[..., keep], axis=-1)

    def value(self, p):
        g, _, _ = self._tables(p)
        return self.coeff * np.prod(g, axis=-1)

    def gradient(self, p):
        g, g1, _ = self._tables(p)
        d = g.shape[-1]
        return self.coeff * np.stack([g1[..., k] * self._prod_except(g, {k}) for k in range(d)], axis=-1)

    def hessian(self, p):
        g, g1, g2 = self._tables(p)
        d = g.shape[-1]
        out = np.empty(g.shape + (d,))
        for k in range(d):
            out[..., k, k] = g2[..., k] * self._prod_except(g, {k})
            for m in range(k + 1, d):
                out[..., k, m] = out[..., m, k] = g1[..., k] * g1[..., m] * self._prod_except(g, {k, m})
        return self.coeff * out


class ShearHamiltonian(SeparableProduct):
    """Cutoff of ``c * y_1``: on the core box its flow translates x_1 by ``-c t``.

    ``core_lo``/``core_hi`` bound the plateau where the cutoff equals 1;
    the cutoff decays to zero over ``width`` beyond it in every coordinate.
    """

    def __init__(self, c: float, core_lo, core_hi, width: float):
        lo = np.asarray(core_lo, dtype=float)
        hi = np.asarray(core_hi, dtype=float)
        if lo.shape != hi.shape or lo.size % 2 or np.any(hi <= lo) or not width > 0:
            raise DomainError("shear core box must be non-empty, even-dimensional, with positive width")
        n = lo.size // 2
        self.c, self.core_lo, self.core_hi, self.width = float(c), lo, hi, float(width)

        def cutoff(j):
            return lambda v: plateau(v, lo[j], hi[j], width)

        def linear_cutoff(j):
            def g(v):
                s, s1, s2 = plateau(v, lo[j], hi[j], width)
                return v * s, s + v * s1, 2.0 * s1 + v * s2
            return g

        factors = [linear_cutoff(j) if j == n else cutoff(j) for j in range(2 * n)]
        super().__init__(factors, c, SupportBox(lo - width, hi + width))

    def __repr__(self):
        return f"ShearHamiltonian(c={self.c!r}, core_lo={self.core_lo.tolist()}, core_hi={self.core_hi.tolist()}, width={self.width!r})"


class SumHamiltonian(AutonomousHamiltonian):
    def __init__(self, terms: Sequence[AutonomousHamiltonian], coeffs: Sequence[float] | None = None):
        terms = list(terms)
        if not terms:
            raise DomainError("a sum needs at least one term")
        n = terms[0].n
        if any(t.n != n for t in terms):
            raise DomainError("all terms of a sum must share the dimension")
        self.terms = terms
        self.coeffs = [1.0] * len(terms) if coeffs is None else [float(c) for c in coeffs]
        box = terms[0].support_box
        for t in terms[1:]:
            box = box.union(t.support_box)
        super().__init__(n, box)

    def value(self, p):
        return sum(c * t.value(p) for c, t in zip(self.coeffs, self.terms))

    def gradient(self, p):
        return sum(c * t.gradient(p) for c, t in zip(self.coeffs, self.terms))

    def hessian(self, p):
        return sum(c * t.hessian(p) for c, t in zip(self.coeffs, self.terms))

    def __repr__(self):
        return f"SumHamiltonian({self.terms!r}, {self.coeffs!r})"


class FiniteDifferenceHamiltonian(AutonomousHamiltonian):
    """Derivatives of ``base.value`` by central differences of size ``step``."""

    derivative_mode = "finite-difference"

    def __init__(self, base: AutonomousHamiltonian, step: float = 1e-4):
        if not step > 0:
            raise DomainError("finite-difference step must be positive")
        self.base = base
        self.step = float(step)
        super().__init__(base.n, base.support_box)

    def value(self, p):
        return self.base.value(p)

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        h = self.step
        cols = []
        for k in range(2 * self.n):
            e = np.zeros(2 * self.n)
            e[k] = h
            cols.append((self.base.value(p + e) - self.base.value(p - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def hessian(self, p):
        p = np.asarray(p, dtype=float)
        h = self.step
        d = 2 * self.n
        f0 = self.base.value(p)
        out = np.empty(p.shape + (d,))
        for k in range(d):
            ek = np.zeros(d)
            ek[k] = h
            out[..., k, k] = (self.base.value(p + ek) - 2 * f0 + self.base.value(p - ek)) / h**2
            for m in range(k + 1, d):
                em = np.zeros(d)
                em[m] = h
                v = (self.base.value(p + ek + em) - self.base.value(p + ek - em)
                     - self.base.value(p - ek + em) + self.base.value(p - ek - em)) / (4 * h * h)
                out[..., k, m] = out[..., m, k] = v
        return out


# ---------------------------------------------------------------------------
# Hessian bounds


def _operator_norms(hess: np.ndarray) -> np.ndarray:
    asym = np.max(np.abs(hess - np.swapaxes(hess, -1, -2)), axis=(-1, -2))
    scale = np.maximum(1.0, np.max(np.abs(hess), axis=(-1, -2)))
    if np.any(asym > SYMMETRY_TOL * scale):
        raise IntegrityError(f"Hessian not symmetric (max asymmetry {float(np.max(asym)):.3e})")
    return np.max(np.abs(np.linalg.eigvalsh(hess)), axis=-1)


def hessian_operator_norm(H: AutonomousHamiltonian, p) -> float:
    """Largest absolute eigenvalue of the symmetric matrix Hess_p(H)."""
    p = as_point(p, H.n)
    return float(_operator_norms(H.hessian(p)))


def _grid_eval(fn, box: SupportBox, resolution: int, chunk: int = 1 << 16) -> np.ndarray:
    pts = box.grid(resolution)
    parts = [fn(pts[i:i + chunk]) for i in range(0, len(pts), chunk)]
    return pts, np.concatenate(parts)


@dataclass(frozen=True)
class HessianBound:
    value: float
    witness: np.ndarray | None
    grid_spacing: float


def global_hessian_bound(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> HessianBound:
    """Max of the Hessian operator norm over the support box.

    Grid sweep, then local maximisation from the five best separated cells.
    The result is exact only up to the grid resolution reported alongside.
    """
    res = grid_resolution or default_resolution(H.n)
    if res < 16:
        raise DomainError("grid_resolution must be >= 16")
    key = ("hbound", res)
    if key in H._cache:
        return H._cache[key]
    box = H.support_box
    if box.is_empty:
        out = HessianBound(0.0, None, 0.0)
        H._cache[key] = out
        return out
    floor = [0.0]

    def pruned_norms(q):
        # Frobenius norm brackets the operator norm within sqrt(d); only cells
        # that could beat the running lower bound get an eigen-decomposition
        hess = H.hessian(q)
        frob = np.sqrt(np.sum(hess * hess, axis=(-1, -2)))
        floor[0] = max(floor[0], float(frob.max(initial=0.0)) / math.sqrt(hess.shape[-1]))
        out = np.zeros(len(q))
        live = frob >= floor[0]
        if np.any(live):
            out[live] = _operator_norms(hess[live])
        return out

    pts, norms = _grid_eval(pruned_norms, box, res)
    spacing = box.spacing(res)
    order = np.argsort(-norms, kind="stable")
    starts = []
    for idx in order:
        if len(starts) == 5 or norms[idx] == 0.0:
            break
        if all(np.max(np.abs(pts[idx] - pts[j])) > 2 * spacing for j in starts):
            starts.append(idx)
    best = float(norms[order[0]]) if len(order) else 0.0
    witness = pts[order[0]].copy() if len(order) else None
    bounds = list(zip(box.lo, box.hi))
    for idx in starts:
        sol = optimize.minimize(
            lambda q: -float(_operator_norms(H.hessian(q))),
            pts[idx], method="Nelder-Mead", bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000},
        )
        if -sol.fun > best:
            best, witness = float(-sol.fun), np.asarray(sol.x)
    out = HessianBound(best, witness, spacing)
    H._cache[key] = out
    return out


@dataclass(frozen=True)
class AdmissibilityReport:
    bound: float
    admissible: bool
    margin: float
    witness: np.ndarray | None
    grid_spacing: float


def admissibility_check(H: AutonomousHamiltonian, safety_margin: float = DEFAULT_SAFETY_MARGIN,
                        grid_resolution: int | None = None) -> AdmissibilityReport:
    hb = global_hessian_bound(H, grid_resolution)
    margin = TWO_PI - hb.value
    return AdmissibilityReport(hb.value, bool(hb.value < TWO_PI - safety_margin), margin, hb.witness, hb.grid_spacing)


# ---------------------------------------------------------------------------
# critical points


@dataclass(frozen=True)
class CriticalPoint:
    location: np.ndarray
    value: float
    gradient_residual: float
    hessian_signature: tuple[int, int, int]
    synthetic: bool = False
    resolved: bool = True


def hessian_signature(hess: np.ndarray, rel_tol: float = 1e-8) -> tuple[int, int, int]:
    w = np.linalg.eigvalsh(hess)
    tol = rel_tol * max(1.0, float(np.max(np.abs(w))))
    return int(np.sum(w > tol)), int(np.sum(np.abs(w) <= tol)), int(np.sum(w < -tol))


@dataclass
class GridScan:
    """Values and gradient norms of H on a uniform grid of its support box."""

    shape: tuple[int, ...]
    points: np.ndarray
    values: np.ndarray
    grad_norms: np.ndarray
    spacing: float
    exterior: np.ndarray

    def nearest_index(self, p, box: SupportBox) -> np.ndarray:
        res = self.shape[0]
        idx = np.rint((np.asarray(p) - box.lo) / (box.hi - box.lo) * (res - 1)).astype(int)
        return np.clip(idx, 0, res - 1)

    def is_exterior(self, p, box: SupportBox) -> np.ndarray:
        p = np.atleast_2d(p)
        outside = ~box.contains(p, open_=True)
        idx = self.nearest_index(p, box)
        flat = self.exterior.reshape(self.shape)[tuple(idx.T)]
        return outside | flat


def grid_scan(H: AutonomousHamiltonian, grid_resolution: int | None = None,
              eps_value: float = EPS_VALUE, eps_grad: float = EPS_GRAD) -> GridScan:
    """Sample H on its box and mark the numerically flat region joined to the box boundary.

    That region is indistinguishable from the support complement at double
    precision (the bump tail underflows), so it is treated as exterior.
    """
    res = grid_resolution or default_resolution(H.n)
    key = ("scan", res, eps_value, eps_grad)
    if key in H._cache:
        return H._cache[key]
    box = H.support_box
    d = 2 * H.n
    shape = (res,) * d
    pts, vg = _grid_eval(lambda q: np.column_stack([H.value(q), np.linalg.norm(H.gradient(q), axis=-1)]), box, res)
    values, gnorm = vg[:, 0], vg[:, 1]
    flat = ((np.abs(values) < eps_value) & (gnorm < eps_grad)).reshape(shape)
    labels, count = ndimage.label(flat, structure=np.ones((3,) * d))
    border = set()
    for axis in range(d):
        for end in (0, res - 1):
            border.update(np.unique(np.take(labels, end, axis=axis)).tolist())
    border.discard(0)
    exterior = np.isin(labels, list(border)).ravel()
    scan = GridScan(shape, pts, values, gnorm, box.spacing(res), exterior)
    H._cache[key] = scan
    return scan


def _pinv_solve(hess: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(hess)
    cut = 1e-12 * np.maximum(1.0, np.max(np.abs(w), axis=-1, keepdims=True))
    inv = np.where(np.abs(w) > cut, 1.0 / np.where(w == 0, 1.0, w), 0.0)
    coef = np.einsum("...ji,...j->...i", V, rhs) * inv
    return np.einsum("...ij,...j->...i", V, coef)


def newton_critical(H: AutonomousHamiltonian, seeds: np.ndarray, tol: float = NEWTON_TOL,
                    max_iter: int = 60) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched Newton on grad H = 0. Returns (points, residuals, converged)."""
    P = np.array(seeds, dtype=float, copy=True)
    box = H.support_box
    span = np.max(box.hi - box.lo)
    res = np.linalg.norm(H.gradient(P), axis=-1)
    for _ in range(max_iter):
        active = res >= tol
        if not np.any(active):
            break
        Q = P[active]
        step = _pinv_solve(H.hessian(Q), H.gradient(Q))
        # cap the step to a fraction of the box to keep flat-region seeds local
        norm = np.linalg.norm(step, axis=-1, keepdims=True)
        step = np.where(norm > 0.25 * span, step * (0.25 * span / np.maximum(norm, 1e-300)), step)
        P[active] = Q - step
        res[active] = np.linalg.norm(H.gradient(P[active]), axis=-1)
    return P, res, res < tol


def _dedup(points: np.ndarray, scores: np.ndarray, radius: float) -> list[int]:
    """Cluster within ``radius`` (sup-norm), keeping the best score; lexicographic order."""
    order = np.lexsort(points.T[::-1])
    reps = np.empty_like(points)
    kept: list[int] = []
    for i in order:
        if kept:
            near = np.flatnonzero(np.max(np.abs(reps[:len(kept)] - points[i]), axis=1) <= radius)
            if near.size:
                j_pos = int(near[0])
                if scores[i] < scores[kept[j_pos]]:
                    kept[j_pos] = int(i)
                    reps[j_pos] = points[i]
                continue
        reps[len(kept)] = points[i]
        kept.append(int(i))
    kept.sort(key=lambda k: tuple(points[k]))
    return kept


def critical_points(H: AutonomousHamiltonian, grid_resolution: int | None = None,
                    tol: float = NEWTON_TOL) -> list[CriticalPoint]:
    """Interior critical points by grid scan plus Newton refinement.

    The returned list always ends with a synthetic value-0 entry standing for
    the support complement.  Seeds whose Newton iteration fails are kept
    with ``resolved=False``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    res = grid_resolution or default_resolution(H.n)
    key = ("crit", res, tol)
    if key in H._cache:
        return H._cache[key]
    box = H.support_box
    d = 2 * H.n
    synthetic = CriticalPoint(box.outside_point(), 0.0, 0.0, (0, d, 0), synthetic=True)
    if box.is_empty:
        H._cache[key] = [synthetic]
        return [synthetic]
    scan = grid_scan(H, res)
    gn = scan.grad_norms.reshape(scan.shape)
    local_min = (gn <= ndimage.minimum_filter(gn, size=3, mode="nearest")).ravel()
    cand = np.flatnonzero(local_min & ~scan.exterior)
    if cand.size:
        # a critical point within one cell keeps |grad| below |Hess| * cell diagonal
        hn = _operator_norms(H.hessian(scan.points[cand]))
        near = scan.grad_norms[cand] <= 2.0 * hn * scan.spacing * math.sqrt(d) + 1e-12
        cand = cand[near]
    out: list[CriticalPoint] = []
    if cand.size:
        P, resid, ok = newton_critical(H, scan.points[cand], tol)
        ext = scan.is_exterior(P, box)
        good = ok & ~ext
        idx = np.flatnonzero(good)
        if idx.size:
            for k in _dedup(P[idx], resid[idx], 2 * scan.spacing):
                i = idx[k]
                p = P[i]
                out.append(CriticalPoint(p, float(H.value(p)), float(resid[i]),
                                         hessian_signature(H.hessian(p))))
        bad = np.flatnonzero(~ok & ~ext)
        if bad.size:
            seeds = scan.points[cand[bad]]
            for k in _dedup(seeds, resid[bad], 2 * scan.spacing):
                i = bad[k]
                out.append(CriticalPoint(scan.points[cand[i]], float(H.value(scan.points[cand[i]])),
                                         float(resid[i]), (0, 0, 0), resolved=False))
    out.append(synthetic)
    H._cache[key] = out
    return out


def critical_values(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> np.ndarray:
    """Sorted resolved critical values, the synthetic 0 included."""
    vals = sorted({cp.value for cp in critical_points(H, grid_resolution) if cp.resolved})
    return np.array(vals)


def extreme_values(H: AutonomousHamiltonian, grid_resolution: int | None = None) -> tuple[float, float]:
    """(max H, min H) over R^{2n}; the support complement contributes 0."""
    vals = critical_values(H, grid_resolution)
    return max(0.0, float(vals.max())), min(0.0, float(vals.min()))


def regular_zero_check(H: AutonomousHamiltonian, grid_resolution: int | None = None,
                       eps_value: float = EPS_VALUE, eps_grad: float = EPS_GRAD) -> bool:
    """True iff no point of the open support has H = 0 and dH = 0 simultaneously.

    Near-flat cells joined to the box boundary are the numerical tail of the
    support complement and are not counted.  Every other suspicious cluster is
    refined by least squares on (H, grad H) before it is declared a violation.
    """
    box = H.support_box
    if box.is_empty:
        return True
    scan = grid_scan(H, grid_resolution, eps_value, eps_grad)
    flat = ((np.abs(scan.values) < eps_value) & (scan.grad_norms < eps_grad)).reshape(scan.shape)
    interior = flat & ~scan.exterior.reshape(scan.shape)
    if not interior.any():
        return True
    d = 2 * H.n
    labels, count = ndimage.label(interior, structure=np.ones((3,) * d))
    flat_idx = labels.ravel()
    score = np.abs(scan.values) + scan.grad_norms
    for lab in range(1, count + 1):
        members = np.flatnonzero(flat_idx == lab)
        seed = scan.points[members[np.argmin(score[members])]]
        fit = optimize.least_squares(
            lambda q: np.concatenate([[H.value(q)], H.gradient(q)]),
            seed, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200,
        )
        resid = float(np.max(np.abs(fit.fun)))
        if resid < 1e-10 and box.contains(fit.x, open_=True) and not scan.is_exterior(fit.x, box)[0]:
            return False
    return True


# ---------------------------------------------------------------------------
# the bump family threshold


@lru_cache(maxsize=64)
def _b0_cached(A: float, lo: float, hi: float, n: int, res: int, margin: float, rel_tol: float) -> float:
    threshold = TWO_PI - margin
    history: list[tuple[float, float]] = []

    def bound(B):
        v = global_hessian_bound(make_radial_bump(B, A, n), res).value
        history.append((B, v))
        return v

    if bound(lo) < threshold or bound(hi) >= threshold:
        raise BracketError(f"Hessian bound does not cross 2*pi on [{lo}, {hi}] for A={A}")
    while (hi - lo) / hi > rel_tol:
        mid = math.sqrt(lo * hi)
        if bound(mid) < threshold:
            hi = mid
        else:
            lo = mid
    history.sort()
    vals = np.array([v for _, v in history])
    if np.any(np.diff(vals) > 1e-6 * max(1.0, vals.max())):
        raise IntegrityError("Hessian bound is not monotone in B on the sampled bracket")
    return hi


def compute_B0(A: float, search_range: tuple[float, float] | None = None, n: int = 1,
               grid_resolution: int | None = None, safety_margin: float = DEFAULT_SAFETY_MARGIN,
               rel_tol: float = 1e-3) -> float:
    """Smallest B (to ``rel_tol``) for which the bump of height A is admissible."""
    if not A > 0:
        raise DomainError("A must be positive")
    lo, hi = search_range if search_range is not None else (0.25 * A, 8.0 * A)
    if not 0 < lo < hi:
        raise BracketError("search range must satisfy 0 < B_lo < B_hi")
    res = grid_resolution or default_resolution(n)
    return _b0_cached(float(A), float(lo), float(hi), n, res, float(safety_margin), float(rel_tol))
