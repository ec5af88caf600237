import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import special_ortho_group

from conftest import QuadraticForm, ring_hamiltonian
from contactgeo.errors import BracketError, DomainError, IntegrityError
from contactgeo.hamiltonian import (TWO_PI, FiniteDifferenceHamiltonian, QuadraticCore, ShearHamiltonian,
                                    SumHamiltonian, SupportBox, ZeroHamiltonian, admissibility_check, compute_B0,
                                    critical_points, critical_values, eval_bump_profile, global_hessian_bound,
                                    hessian_operator_norm, make_radial_bump, regular_zero_check)

coord = st.floats(-3.0, 3.0, allow_nan=False)


# --- bump profile and bump family

def test_bump_profile_center():
    assert eval_bump_profile(4.0, 0.0) == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_bump_profile_vanishes_at_edge():
    assert eval_bump_profile(4.0, 2.0) == 0.0
    assert eval_bump_profile(4.0, 2.5) == 0.0


def test_bump_profile_high_precision():
    mpmath.mp.dps = 50
    exact = mpmath.exp(-mpmath.mpf(1) / (mpmath.mpf("0.25") - 1) ** 2)
    assert eval_bump_profile(1.0, 0.5) == pytest.approx(float(exact), rel=1e-14)
    assert float(exact) == pytest.approx(0.169013, abs=1e-6)


def test_bump_profile_rejects_nonpositive_B():
    with pytest.raises(DomainError):
        eval_bump_profile(0.0, 0.1)


def test_radial_bump_examples(bump_b4):
    assert bump_b4.value(np.zeros(2)) == pytest.approx(2.5, rel=1e-15)
    assert bump_b4.value(np.array([2.0, 0.0])) == 0.0
    assert bump_b4.value(np.array([math.sqrt(2), math.sqrt(2)])) == 0.0
    np.testing.assert_array_equal(bump_b4.gradient(np.zeros(2)), 0.0)
    np.testing.assert_allclose(bump_b4.support_box.lo, [-2, -2])
    np.testing.assert_allclose(bump_b4.support_box.hi, [2, 2])


def test_radial_bump_matches_profile(bump_b4):
    r = np.linspace(0, 1.99, 50)
    pts = np.stack([r * 0.6, r * 0.8], axis=-1)
    expected = 2.5 * eval_bump_profile(4.0, r) / eval_bump_profile(4.0, 0.0)
    np.testing.assert_allclose(bump_b4.value(pts), expected, rtol=1e-11, atol=1e-300)


# --- Hessian norm

def test_hessian_norm_diagonal():
    H = QuadraticForm(np.diag([3.0, -5.0]))
    assert hessian_operator_norm(H, [0.1, 0.2]) == pytest.approx(5.0, rel=1e-12)


def test_hessian_norm_core(core2):
    for p in ([0.0, 0.0], [0.5, -1.0], [1.2, 0.3]):
        assert hessian_operator_norm(core2, p) == pytest.approx(2.0, rel=1e-12)


def test_hessian_norm_bump_center_fd(bump_b4):
    analytic = hessian_operator_norm(bump_b4, [0.0, 0.0])
    fd = hessian_operator_norm(FiniteDifferenceHamiltonian(bump_b4, 1e-4), [0.0, 0.0])
    assert abs(analytic - fd) < 1e-5


def test_hessian_norm_rejects_asymmetric():
    with pytest.raises(IntegrityError):
        hessian_operator_norm(QuadraticForm(np.array([[1.0, 2.0], [0.0, 1.0]])), [0.0, 0.0])


@given(st.integers(0, 10_000))
def test_hessian_norm_orthogonal_invariance(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4))
    M = A + A.T
    Q = special_ortho_group.rvs(4, random_state=rng)
    a = hessian_operator_norm(QuadraticForm(M), np.zeros(4))
    b = hessian_operator_norm(QuadraticForm(Q @ M @ Q.T), np.zeros(4))
    assert abs(a - b) < 1e-9 * max(1.0, a)


def test_hessian_scales_linearly_in_A():
    H1, H2 = make_radial_bump(6.0, 1.3), make_radial_bump(6.0, 2.6)
    for p in ([0.0, 0.0], [0.7, 0.4], [1.5, -0.9]):
        assert hessian_operator_norm(H2, p) == pytest.approx(2 * hessian_operator_norm(H1, p), rel=1e-12)


# --- global bound and admissibility

def test_global_bound_zero():
    assert global_hessian_bound(ZeroHamiltonian(1)).value == 0.0
    rep = admissibility_check(ZeroHamiltonian(1))
    assert rep.admissible and rep.bound == 0.0


def test_global_bound_core_patch():
    H = QuadraticCore(2.0, 1.0, 4.0)
    hb = global_hessian_bound(H)
    assert hb.value >= 2.0 - 1e-12
    assert hb.grid_spacing > 0


def test_core7_not_admissible(core7):
    rep = admissibility_check(core7)
    assert not rep.admissible and rep.bound >= 7.0 - 1e-9


def test_bump_b0_admissible_and_resolution_stable(bump25):
    rep = admissibility_check(bump25)
    assert rep.admissible and rep.bound < TWO_PI
    fine = global_hessian_bound(make_radial_bump(bump25.B, 2.5), 512).value
    assert abs(fine - rep.bound) < 1e-3
    assert rep.witness is not None


# --- compute_B0

def test_b0_bound_window(bump25):
    bound = global_hessian_bound(bump25).value
    assert TWO_PI - 0.05 <= bound < TWO_PI


def test_b0_increasing():
    vals = [compute_B0(A) for A in (0.5, 1.0, 2.5, 7.3)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_b0_bracket_error():
    with pytest.raises(BracketError):
        compute_B0(2.5, search_range=(50.0, 60.0))


def test_b0_is_minimal(bump25):
    below = make_radial_bump(bump25.B * (1 - 3e-3), 2.5)
    assert global_hessian_bound(below).value >= TWO_PI - 1e-3


# --- critical points

def test_critical_points_bump(bump_b4):
    cps = critical_points(bump_b4)
    interior = [c for c in cps if not c.synthetic]
    synthetic = [c for c in cps if c.synthetic]
    assert len(interior) == 1 and len(synthetic) == 1
    assert np.linalg.norm(interior[0].location) < 1e-8
    assert interior[0].value == pytest.approx(2.5, abs=1e-12)
    assert interior[0].hessian_signature == (0, 0, 2)
    assert synthetic[0].value == 0.0


def test_bump_profile_monotone_oracle():
    # dense 1-d scan: the profile strictly decreases on (0, sqrt(B)), so the center is the only critical point
    x = np.linspace(1e-3, 2.0 - 1e-3, 20001)
    f = eval_bump_profile(4.0, x)
    live = f > 1e-300
    assert np.all(np.diff(f[live]) < 0)


def test_critical_points_zero():
    cps = critical_points(ZeroHamiltonian(1))
    assert len(cps) == 1 and cps[0].synthetic and cps[0].value == 0.0


def test_critical_points_two_bump(two_bump):
    interior = sorted(c.value for c in critical_points(two_bump) if not c.synthetic)
    assert interior == pytest.approx([1.2, 2.5], abs=1e-9)
    np.testing.assert_allclose(critical_values(two_bump), [0.0, 1.2, 2.5], atol=1e-9)


def test_critical_points_against_dense_scan(two_bump):
    # spacing 0.01 on [-6, 6]^2 contains both centres exactly
    ax = np.linspace(-6.0, 6.0, 1201)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    g = np.linalg.norm(two_bump.gradient(pts), axis=-1)
    dense = np.unique(np.round(two_bump.value(pts[(g < 1e-6) & (two_bump.value(pts) != 0.0)]), 6))
    for cp in critical_points(two_bump):
        if not cp.synthetic:
            assert cp.gradient_residual < 1e-10
            assert np.min(np.abs(dense - cp.value)) < 1e-6


# --- regular zero

def test_regular_zero_bump(bump25):
    assert regular_zero_check(bump25)


def test_regular_zero_flat_interior():
    assert not regular_zero_check(ring_hamiltonian())


def test_regular_zero_transverse_crossing():
    H = SumHamiltonian([make_radial_bump(9.0, 1.0), make_radial_bump(1.0, 2.0)], [1.0, -1.0])
    assert regular_zero_check(H)
    # 1-d slice oracle: exactly one sign change along a ray, with nonzero slope
    r = np.linspace(0.0, 2.99, 30001)
    v = H.value(np.stack([r, 0 * r], axis=-1))
    k = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    assert len(k) == 1
    assert abs(H.gradient(np.array([r[k[0]], 0.0]))[0]) > 1e-3


# --- structural invariants

@pytest.mark.parametrize("make", [
    lambda: make_radial_bump(4.0, 2.5),
    lambda: QuadraticCore(7.0, 1.0, 4.0),
    lambda: ShearHamiltonian(1.2, [-1.2, -0.6], [1.2, 0.6], 2.5),
    lambda: SumHamiltonian([make_radial_bump(2.0, 1.0, center=[-2, 0]), make_radial_bump(2.0, 1.0, center=[2, 0])],
                           [1.0, -1.0]),
])
def test_zero_outside_support(make):
    H = make()
    box = H.support_box
    rng = np.random.default_rng(0)
    d = rng.standard_normal((500, 2))
    d /= np.max(np.abs(d), axis=1, keepdims=True)
    center = 0.5 * (box.lo + box.hi)
    half = 0.5 * (box.hi - box.lo)
    shell = center + d * half * rng.uniform(1.0, 1.5, (500, 1))
    assert np.all(H.value(shell) == 0.0)
    assert np.all(H.gradient(shell) == 0.0)
    assert np.all(H.hessian(shell) == 0.0)


def test_finite_difference_mode_outside_support(bump_b4):
    F = FiniteDifferenceHamiltonian(bump_b4, 1e-4)
    p = np.array([[2.5, 0.0], [0.0, -3.0], [2.1, 2.1]])
    assert np.all(np.abs(F.gradient(p)) < 1e-12)
    assert np.all(np.abs(F.hessian(p)) < 1e-12)


PROBES = {
    "bump": lambda: make_radial_bump(4.0, 2.5),
    "core": lambda: QuadraticCore(7.0, 1.0, 4.0),
    "shear": lambda: ShearHamiltonian(1.2, [-1.2, -0.6], [1.2, 0.6], 2.5),
}


@pytest.mark.parametrize("name", sorted(PROBES))
@given(x=coord, y=coord)
def test_fd_gradient_matches_analytic(name, x, y):
    H = PROBES[name]()
    p = np.array([x, y])
    fd = FiniteDifferenceHamiltonian(H, 1e-5).gradient(p)
    scale = 1.0 + float(np.max(np.abs(H.hessian(p))))
    assert np.max(np.abs(fd - H.gradient(p))) < 1e-6 * scale


@pytest.mark.parametrize("name", sorted(PROBES))
def test_fd_hessian_second_order(name):
    H = PROBES[name]()
    rng = np.random.default_rng(1)
    lo, hi = H.support_box.lo, H.support_box.hi
    P = lo + (hi - lo) * rng.uniform(0.1, 0.9, (40, 2))
    exact = H.hessian(P)
    e1 = np.max(np.abs(FiniteDifferenceHamiltonian(H, 2e-3).hessian(P) - exact))
    e2 = np.max(np.abs(FiniteDifferenceHamiltonian(H, 1e-3).hessian(P) - exact))
    # halving the step should cut an O(step^2) error by about 4
    assert e2 < 10 * e1 / 4 + 1e-9
    assert e2 < 1e-3


def test_hessian_symmetric_everywhere(core7):
    P = core7.support_box.grid(64)
    Hs = core7.hessian(P)
    assert np.max(np.abs(Hs - np.swapaxes(Hs, -1, -2))) < 1e-10


def test_support_box_validation():
    with pytest.raises(DomainError):
        SupportBox(np.array([0.0, 0.0]), np.array([1.0]))
