"""Positive periodic solutions of x'' + a x' = r(t) x^alpha - s(t) x^beta.

Green's function of the shifted linear operator, certification of the
existence / non-existence / localization conditions, and numerical solvers,
including the singular one pipe / one tank model through u = x^mu.
"""

from .certify import (CertificateReport, Check, HRoots, Slab, Status, check_corollary_explicit,
                      check_corollary_model, check_h1, check_h2, check_nonexistence,
                      condition_h_roots, suggest_radii)
from .errors import LiebauError
from .green import (GridFunction, KernelParams, Regime, apply_green_operator, build_kernel_params,
                    classify_regime, eval_green, green_row_integral)
from .model import (Constant, ProblemSpec, ShiftedProblem, SingularModelSpec, Table, coeff_extrema,
                    eval_fm, regularize, singularize_solution)
from .solver import (PeriodicSolution, SolverConfig, constant_solution, picard_solve,
                     shooting_solve, verify_localization)

__version__ = "0.1.0"
