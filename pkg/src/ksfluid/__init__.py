"""Grand-canonical distribution functions of classical fluids at small
activity, computed from the truncated Kirkwood-Salsburg hierarchy on a
fixed grid, together with their derivatives with respect to the pair
potential and an independent brute-force cross-check."""

from .errors import (AdmissibilityError, BudgetError, ConfigError,
                     ConvergenceError, DegenerateConfigurationError,
                     EmbeddingError, GateError, KsfluidError, QuadratureError)
from .potentials import (Envelope, PairPotential, Perturbation, RegularityReport,
                         SamplingConfig, ThermoParams, activity_bound, c_beta,
                         c_beta_tail, check_admissible, custom_perturbation,
                         custom_potential, envelope_from_forms,
                         exp_tail_perturbation, hard_sphere, lennard_jones,
                         mayer_f, perturbed, regularity_report,
                         stability_sample_check, tabulated,
                         truncated_lennard_jones, vu_norm, zero_perturbation,
                         zero_potential)
from .quadrature import (Box, Grid, GridFunction, ImbeddingSpec, build_grid,
                         integrate_n, restrict, tuple_budget, xnorm)
from .ks import (CorrelationVector, DirectionTables, KSConfig, OperatorTables,
                 SolveReport, apply_A, apply_D, apply_K, d_m, jstar, k_n,
                 pair_matrices, project_pi, solve_ks)
from .derivative import (DerivativeRequest, DerivativeResult, FDTable,
                         SweepResult, apply_Aprime, apply_Kprime, d_derivative,
                         derivative_rho, finite_difference_defect,
                         fit_loglog_slope, k_prime, limit_sweep,
                         mayer_derivative)
from .oracle import (GrandCanonicalSums, OracleConfig, brute_rho,
                     comparison_report, compute_grand_sums, deriv_rho1,
                     deriv_rho2, deriv_xi, fd_brute, partition_function,
                     u_total, v_total)

__version__ = "0.1.0"
