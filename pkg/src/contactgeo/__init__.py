"""Numerical toolkit for contact Hamiltonian flows on R^{2n} x S^1."""
from .capacity import BallCylinder, capacity_energy_audit, cylinder_capacity, displacement_check, make_displacing_shear
from .errors import (AccuracyError, ContactGeoError, DomainError, HypothesisError, IntegrityError,
                     UnsupportedError)
from .flow import ContactPathSpec, contact_vector_field, flow_map, integrate_contact, integrate_symplectic, reeb_shift
from .hamiltonian import (QuadraticCore, RadialBump, ShearHamiltonian, SumHamiltonian, ZeroHamiltonian,
                          admissibility_check, compute_B0, critical_points, global_hessian_bound, make_radial_bump,
                          regular_zero_check)
from .norms import (floor_lower_bound_audit, norm_report, oscillating_schedule, power_schedule, scheduled_path,
                    selector_lower_bound_audit, shelukhin_length, t_zero)
from .orbits import find_periodic_orbits, hessian_period_certificate, loop_parseval_check
from .translated import (brute_force_translated_points, first_discriminant_time, spectrum_autonomous,
                         translation_selector, translation_selector_inverse)

__version__ = "0.1.0"
