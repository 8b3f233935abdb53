"""Desk-scale spectral workbench for homogenization of periodic Levy-type
nonlocal operators: fiber assembly on a Fourier truncation, threshold
spectral projectors by two routes, and operator-norm convergence-rate
measurements against the theoretical envelopes.
"""

from .coefficient import (CoefficientCertificate, ModelParams,
                          PeriodicCoefficient, TheoryConstants, certify,
                          coefficient_from_records, compute_c0,
                          constant_coefficient, delta0_and_d0, effective_mu,
                          mu_star_coefficients, oracle_c0, theory_constants,
                          theta_modulus, v_alpha, validate_coefficient)
from .config import EpsilonSpec, StudyConfig, Tolerances, XiGridSpec
from .errors import (BoundViolated, ContourTooClose, ConvergenceFailure,
                     DegenerateFit, GapViolation, LevyhomError,
                     PositivityUncertified, QuadratureNotConverged,
                     SymmetryViolation, TruncationTooSmall,
                     TruncationUnstable)
from .fiber import (EffectiveFiberMatrix, FiberMatrix, ModeSet, OracleValue,
                    QuadConfig, assemble_effective_fiber,
                    assemble_fiber_matrix, c1_constant,
                    form_difference_checks, oracle_form_element,
                    rho_and_rho_star)
from .homogenization import (RateFit, RateStudyResult, XiGrid, build_xi_grid,
                             discrepancy_study, fiber_resolvent_diff,
                             fit_rate, loglog_slope, rate_bound,
                             slope_widening, threshold_resolvent_diff)
from .spectral import (RieszProjection, SpectralData, StadiumContour,
                       ThresholdReport, eig_hermitian, projector_by_eig,
                       projector_by_riesz, threshold_report)

__version__ = "0.1.0"
