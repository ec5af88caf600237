"""
Geodesics, time changes and displacement
========================================

Running the bump flow at a non-uniform speed keeps the selector value but
lengthens the path unless the time change is monotone.  A shear then
displaces a small ball cylinder and the norms pay for it.
"""
import math

from contactgeo.capacity import BallCylinder, capacity_energy_audit, make_displacing_shear
from contactgeo.hamiltonian import compute_B0, make_radial_bump
from contactgeo.norms import (oscillating_schedule, power_schedule, scheduled_path, selector_lower_bound_audit,
                              shelukhin_length)
from contactgeo.translated import translation_selector, translation_selector_inverse

H = make_radial_bump(compute_B0(2.5), 2.5)
c, ci = translation_selector(H), translation_selector_inverse(H)
print(f"c(phi) = {c}, c(phi^-1) = {ci}")

for s in (power_schedule(2.0), oscillating_schedule(0.8), oscillating_schedule(2.0), oscillating_schedule(4.0, 2)):
    path = scheduled_path(H, s)
    audit = selector_lower_bound_audit(path, c, ci)
    print(f"{s.label:28} int max = {audit.integral_max:.6f}  length = {shelukhin_length(path):.6f}"
          f"  slack = {audit.slack:.2e}  geodesic = {audit.equality}")

# displace B(0.5) x S^1 with a sheared cutoff of c y
H_shear, U = make_displacing_shear(BallCylinder(0.5))
audit = capacity_energy_audit(H_shear, U)
d = audit.to_dict()
print()
print(f"capacity pi r^2 = {d['capacity']:.4f}, ceil / 2 = {math.ceil(d['capacity']) / 2}")
print(f"min separation {d['min_separation']:.3f} (grid spacing {d['grid_spacing']})")
print("norms:", d["norms"])
print("slacks:", d["slacks"])
print("selector inequality:", d["selector_inequality"])
