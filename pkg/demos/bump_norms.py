"""
Norms of the bump family
========================

Build the radial bump of height A whose Hessian sits just under 2 pi,
check the hypotheses and print its four norms next to the closed forms.
"""
import math

import numpy as np

from contactgeo.hamiltonian import admissibility_check, compute_B0, make_radial_bump
from contactgeo.norms import norm_report

# B0(A) is the smallest B that keeps the Hessian bound below 2 pi
for A in (0.5, 1.0, 2.5, 7.3):
    B = compute_B0(A)
    H = make_radial_bump(B, A)
    adm = admissibility_check(H)
    print(f"A = {A:4}  B0 = {B:8.4f}  Hessian bound = {adm.bound:.4f}  admissible = {adm.admissible}")

# the norms follow from max H alone once the hypotheses hold
print()
print(f"{'A':>5} {'nu_S':>8} {'nu_FPR':>7} {'nu_d':>5} {'nu_osc':>7}   ceil(A)  floor(A)+1")
for A in (0.5, 1.0, 2.5, 7.3):
    rep = norm_report(make_radial_bump(compute_B0(A), A))
    print(f"{A:5} {rep.shelukhin_norm:8.4f} {rep.fpr_norm:7} {rep.discriminant_norm:5} {rep.oscillation_norm:7}"
          f"   {math.ceil(A):7}  {math.floor(A) + 1:10}")

# a bump that is too steep keeps its length but loses every certified norm
steep = make_radial_bump(1.0, 2.5)
rep = norm_report(steep)
print()
print("steep bump: bound", round(rep.hypotheses.hessian_bound, 2), "->", rep.shelukhin_norm,
      "| Shelukhin length", round(rep.shelukhin_length, 6))

# the profile itself: flat at the edge of the support
r = np.linspace(0.0, math.sqrt(compute_B0(2.5)), 6)
print("profile samples:", np.round(make_radial_bump(compute_B0(2.5), 2.5).value(np.stack([r, 0 * r], -1)), 4))
