import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contactgeo.errors import AccuracyError, DomainError
from contactgeo.flow import (SIGN_CONVENTION, SYMPLECTIC_SIGN, ContactPathSpec, CylinderPoint, FunctionHamiltonian,
                             contact_vector_field, flow_map, integrate_contact, integrate_path, integrate_symplectic,
                             liouville_pairing, reeb_shift, symplectic_vector_field)
from contactgeo.hamiltonian import SupportBox, ZeroHamiltonian, make_radial_bump

unit = st.floats(-1.0, 1.0, allow_nan=False)


# --- vector fields

def test_sign_convention_rotation(core2):
    # x' = -H_y, y' = H_x: counter-clockwise rotation at angular speed a
    assert SYMPLECTIC_SIGN == 1.0 and "x' = -H_y" in SIGN_CONVENTION
    X = symplectic_vector_field(core2, [1.0, 0.0])
    np.testing.assert_allclose(X, [0.0, 2.0], atol=1e-14)
    assert np.linalg.norm(X) == pytest.approx(2.0)


def test_field_vanishes_at_critical_point(bump25):
    np.testing.assert_array_equal(symplectic_vector_field(bump25, [0.0, 0.0]), 0.0)


def test_field_is_rotated_gradient(bump25):
    p = np.array([0.7, -0.4])
    X = symplectic_vector_field(bump25, p)
    g = bump25.gradient(p)
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert abs(X @ g) < 1e-14 * (1 + np.linalg.norm(g) ** 2)
    np.testing.assert_allclose(X, J @ g, atol=1e-14)


def test_contact_field_zero():
    vp, vz = contact_vector_field(ZeroHamiltonian(1), (np.array([0.3, 0.2]), 0.1))
    np.testing.assert_array_equal(vp, 0.0)
    assert vz == 0.0


def test_contact_field_z_component(bump25):
    p = np.array([0.9, 0.5])
    vp, vz = contact_vector_field(bump25, CylinderPoint(p, 0.3), debug=True)
    X = symplectic_vector_field(bump25, p)
    np.testing.assert_allclose(vp, X, atol=1e-15)
    assert vz == pytest.approx(bump25.value(p) + liouville_pairing(p, X), abs=1e-14)


def test_contact_field_pure_reeb_at_critical_point(bump25):
    vp, vz = contact_vector_field(bump25, (np.zeros(2), 0.0))
    np.testing.assert_array_equal(vp, 0.0)
    assert vz == pytest.approx(2.5)


def _z_dependent(bump):
    fn = lambda t, p, z: bump.value(p) * (1.0 + 0.4 * np.sin(2 * np.pi * np.asarray(z)))
    return FunctionHamiltonian(fn, 1, bump.support_box)


def test_contact_field_defining_relations_z_dependent(bump25):
    h = _z_dependent(bump25)
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = rng.uniform(-2, 2, 2)
        contact_vector_field(h, (p, rng.uniform()), debug=True)


# --- symplectic flow

def test_flow_of_zero():
    r = integrate_symplectic(ZeroHamiltonian(1), [0.4, -0.2], 0.8)
    np.testing.assert_array_equal(r.point, [0.4, -0.2])


def test_half_period_antipode(core2):
    # angular speed a = 2: period 2 pi / a = pi, antipode at pi / 2
    p0 = np.array([0.8, 0.6])
    r = integrate_symplectic(core2, p0, math.pi / 2)
    np.testing.assert_allclose(r.point, -p0, atol=1e-8)
    assert r.error_estimate < 1e-8
    np.testing.assert_allclose(integrate_symplectic(core2, p0, math.pi).point, p0, atol=1e-8)


def test_critical_point_fixed(bump25):
    for t in (0.3, 1.0):
        np.testing.assert_array_equal(integrate_symplectic(bump25, [0.0, 0.0], t).point, 0.0)


def test_step_halving_detects_coarse_step(core7):
    with pytest.raises(AccuracyError):
        integrate_symplectic(core7, [2.0, 0.5], 1.0, step=0.25)


def test_negative_time_inverts(bump25):
    p0 = np.array([0.6, 1.1])
    fwd = integrate_symplectic(bump25, p0, 0.7).point
    back = integrate_symplectic(bump25, fwd, -0.7).point
    np.testing.assert_allclose(back, p0, atol=1e-10)


def test_verlet_agrees_with_rk4(bump25):
    p0 = np.array([1.0, 0.5])
    a = integrate_symplectic(bump25, p0, 1.0, scheme="rk4")
    b = integrate_symplectic(bump25, p0, 1.0, scheme="verlet")
    np.testing.assert_allclose(a.point, b.point, atol=1e-5)
    assert b.energy_drift < 1e-6


# --- Reeb shift

def test_reeb_shift_critical_point(bump25):
    assert reeb_shift(bump25, [0.0, 0.0], 0.6) == pytest.approx(0.6 * 2.5, abs=1e-12)


def test_reeb_shift_zero():
    assert reeb_shift(ZeroHamiltonian(1), [0.5, 0.5], 1.0) == 0.0


def test_reeb_shift_circular_orbit(core2):
    # x = cos 2s, y = sin 2s: int_0^1 y x' ds + H(p0) = sin(4) / 4
    assert reeb_shift(core2, [1.0, 0.0], 1.0) == pytest.approx(math.sin(4.0) / 4.0, abs=1e-8)


# --- contact flow

def test_contact_flow_zero_is_identity():
    st_ = integrate_contact(ZeroHamiltonian(1), (np.array([0.2, 0.1]), 0.35), 1.0)
    np.testing.assert_array_equal(st_.base, [0.2, 0.1])
    assert st_.reeb_lift == 0.35 and st_.conformal == 0.0


def test_contact_flow_critical_point_lift(bump25):
    st_ = integrate_contact(bump25, (np.zeros(2), 0.25), 1.0)
    assert st_.reeb_lift == pytest.approx(0.25 + 2.5, abs=1e-12)
    assert st_.fiber == pytest.approx(0.75, abs=1e-12)
    assert st_.conformal == 0.0


def test_contact_flow_rejects_negative_time(bump25):
    with pytest.raises(DomainError):
        integrate_contact(bump25, (np.zeros(2), 0.0), -0.5)


def test_conformal_factor_z_dependent_matches_pullback(bump25):
    # e^g = alpha(D phi . d/dz), estimated by central differences of the flow in z
    h = _z_dependent(bump25)
    path = ContactPathSpec(h, T=1.0, step=1e-3)
    p0, z0, eps = np.array([0.8, 0.3]), 0.2, 1e-5
    mid = integrate_contact(path, (p0, z0), 0.5)
    hi = integrate_contact(path, (p0, z0 + eps), 0.5)
    lo = integrate_contact(path, (p0, z0 - eps), 0.5)
    dz = (hi.reeb_lift - lo.reeb_lift) / (2 * eps)
    dx = (hi.base[0] - lo.base[0]) / (2 * eps)
    alpha = dz - mid.base[1] * dx
    assert abs(mid.conformal) > 1e-3
    assert alpha == pytest.approx(math.exp(mid.conformal), rel=1e-6)


def test_trajectory_csv(tmp_path, bump25):
    traj = integrate_path(ContactPathSpec(bump25, T=0.1, step=1e-2), np.array([0.5, 0.5]))
    out = tmp_path / "traj.csv"
    traj.write_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "x1", "y1", "z_lift", "g", "H_drift"]
    assert len(rows) == len(traj.times) + 1
    assert float(rows[1][0]) == 0.0


# --- invariants

def _bump_point(bump, u, v):
    return np.array([u, v]) * 0.98 * math.sqrt(bump.B) / math.sqrt(2)


@given(u=unit, v=unit)
def test_energy_conservation(bump25, u, v):
    p0 = _bump_point(bump25, u, v)
    traj = integrate_path(ContactPathSpec(bump25, T=1.0, step=1e-3), p0)
    assert np.max(np.abs(bump25.value(traj.base) - bump25.value(p0))) <= 1e-7
    assert traj.energy_drift <= 1e-7


@given(u=unit, v=unit, s=st.floats(0.0, 0.5), t=st.floats(0.0, 0.5))
def test_group_law(bump25, u, v, s, t):
    p0 = _bump_point(bump25, u, v)[None]
    a, _ = flow_map(bump25, p0, s + t) if s + t > 0 else (p0, None)
    b = flow_map(bump25, p0, t)[0] if t > 0 else p0
    b = flow_map(bump25, b, s)[0] if s > 0 else b
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_support_locality(bump25):
    outside = np.array([[3.0, 0.0], [2.5, -2.5], [0.0, 4.0]])
    P, F = flow_map(bump25, outside, 1.0)
    np.testing.assert_array_equal(P, outside)
    np.testing.assert_array_equal(F, 0.0)
    for p in outside:
        assert reeb_shift(bump25, p, 1.0) == 0.0


@given(u=unit, v=unit, z=st.floats(0.0, 0.999))
def test_exactness_and_lift(bump25, u, v, z):
    p0 = _bump_point(bump25, u, v)
    st_, traj = integrate_contact(bump25, (p0, z), 1.0, return_trajectory=True)
    assert np.max(np.abs(traj.conformal)) < 1e-8
    assert abs(st_.reeb_lift - z - reeb_shift(bump25, p0, 1.0)) < 1e-6
