"""
Translated points from the flow alone
=====================================

For an admissible H the spectrum of the time-t map is t times the critical
values of H.  Here the flow is searched directly for points whose image is
a Reeb translate of themselves, and the two answers are compared.
"""
import numpy as np

from contactgeo.hamiltonian import QuadraticCore, compute_B0, critical_values, make_radial_bump
from contactgeo.translated import (brute_force_translated_points, spectrum_autonomous, translation_selector,
                                   translation_values)

H = make_radial_bump(compute_B0(2.5), 2.5)
print("critical values:", critical_values(H))

# closed form against brute force at a few times
for t in (0.25, 0.5, 1.0):
    spec = spectrum_autonomous(H, t)
    pts = brute_force_translated_points(H, t, 64)
    print(f"t = {t}: spectrum {sorted(spec.values)}  brute force {translation_values(pts, 4)}"
          f"  selector {translation_selector(H, t)}")

# the unique interior translated point sits at the top of the bump
top = max((tp for tp in brute_force_translated_points(H, 1.0, 64) if not tp.exterior), key=lambda tp: tp.translation)
print("top point:", top.location.base, "translation", top.translation, "residual", top.fixed_point_residual)

# a steep quadratic core has closed orbits of period < 1, and with them extra translations
core = QuadraticCore(7.0, 1.0, 4.0)
extra = translation_values(brute_force_translated_points(core, 1.0, 48), 3)
print("a = 7 core: critical values", np.unique(critical_values(core).round(6)), "but translations include", extra[:6], "...")
