"""
Short periodic orbits and the 2 pi threshold
============================================

A Hessian bound below 2 pi rules out nonconstant orbits of period at most
one.  The quadratic core (a/2)|p|^2 rotates with period 2 pi / a, so pushing
a past 2 pi makes such orbits appear.
"""
import math

import numpy as np

from contactgeo.hamiltonian import QuadraticCore, compute_B0, global_hessian_bound, make_radial_bump
from contactgeo.orbits import find_periodic_orbits, hessian_period_certificate, loop_parseval_check, sample_loop

bump = make_radial_bump(compute_B0(2.5), 2.5)
cert = hessian_period_certificate(bump, grid_resolution=64)
print(f"bump: bound {cert.bound:.4f}, orbits {cert.orbits_found}, {cert.status}")

# the sharpness family: orbits through the core carry the closed-form period
for a in (2 * math.pi + 0.2, 7.0):
    H = QuadraticCore(a, 1.0, 2.0)
    orbits = find_periodic_orbits(H, 1.0, 64, 256)
    inner = [o for o in orbits if np.linalg.norm(o.seed) < 1.0]
    print(f"a = {a:.4f}: bound {global_hessian_bound(H).value:.2f}, {len(orbits)} orbits, "
          f"core periods {sorted({round(o.period, 6) for o in inner})} vs 2 pi / a = {2 * math.pi / a:.6f}")

# behind the lemma: ||gamma'|| <= ||gamma''|| / (2 pi) on loops of period one
circle = sample_loop(lambda t: np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], -1))
wobble = sample_loop(lambda t: np.stack([np.cos(2 * np.pi * t) + 0.2 * np.cos(6 * np.pi * t),
                                         np.sin(2 * np.pi * t)], -1))
for name, loop in (("circle", circle), ("wobble", wobble)):
    rep = loop_parseval_check(loop)
    print(f"{name}: |gamma'| = {rep.lhs:.6f}, |gamma''| / 2 pi = {rep.rhs:.6f}, single mode {rep.single_mode}")
