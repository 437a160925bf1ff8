"""Simulation and empirical verification toolkit for nonlocal parabolic
equations d_t u + L u = 0 with symmetric kernels comparable to
|x-y|^(-n-2s).

The package solves the evolution at desk scale on a truncated box with
analytic exterior data, computes parabolic tails, and measures the
empirical constants of Harnack-type inequalities together with their
stability under grid refinement.
"""

from .analysis import (EnsembleSpec, VerificationReport,
                       check_algebraic_inequality, check_sobolev,
                       check_weighted_poincare, default_alpha,
                       estimate_constants, run_member,
                       scan_algebraic_constant, sobolev_exponent,
                       tail_necessity_probe, verify_harnack,
                       verify_local_boundedness,
                       verify_local_boundedness_signed, verify_weak_harnack,
                       with_refinement)
from .exterior import (ExteriorData, constant_exterior, heat_kernel_exterior,
                       negative_annulus_exterior, power_decay_exterior,
                       zero_exterior)
from .geometry import (Grid, ParabolicCylinder, SpaceTimeField, cylinder,
                       field_extrema, load_field, save_field, window_extrema)
from .kernels import (KernelSpec, check_ellipticity, eval_kernel,
                      normalization_constant)
from .nonlocal_op import (AssembledOperator, apply_pointwise, assemble,
                          check_phi_eigenbounds, phi, phi_r)
from .oracles import (fractional_heat_kernel, reference_quadrature,
                      symbol_eigencheck)
from .solver import (SolveSpec, make_bump_battery, positive_part, solve,
                     weak_residual, weak_residual_battery)
from .tails import (TailQuery, check_supTail_by_Tail,
                    check_supTail_by_Tail_minus, check_tail_plus_by_minus,
                    tail, tail_sup, tail_with_error)

__version__ = "0.1.0"
