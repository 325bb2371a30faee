"""monoflow: P1 finite elements and verification for gradient flows under a
monotonicity-in-time constraint.

The package provides three time-discrete schemes for the constrained flow
(hard-constrained prox steps, a-posteriori truncation, and a quadratic
penalty), the energy-balance diagnostics that single out the physical
evolution among non-unique solutions of the pointwise problem, and a CLI
for reproducible runs, refinement studies, and trajectory certification.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .diagnostics import (EnergyLedger, StudyResult, Thresholds,
                          VerificationReport, check_comparison,
                          check_fixed_obstacle_equivalence,
                          continuous_dependence_study, convergence_study,
                          energy_ledger, obstacle_complementarity,
                          pde_residual_sup, power_balance_residual,
                          pvi_violation, verify_trajectory)
from .evolution import (SchemeConfig, Trajectory, eval_affine, eval_backward,
                        make_trajectory, run)
from .fem import (CoefficientSpec, DiscreteOperator, Grid, NodalField,
                  assemble, build_grid, field, free_energy, interpolate,
                  lumped_norm, mass_norm, penalty_norm, plus_norm,
                  residual_representative, stored_energy, unilateral_slope,
                  zeros_field)
from .forcing import (Forcing, TimeGrid, analytic_forcing, autonomous_forcing,
                      backward_interpolant, discrete_time_difference,
                      interval_average, separable_forcing, table_forcing)
from .scenarios import Scenario, get_scenario, rescaled_trajectory, scenario_catalog
from .steps import (SolverConfig, SolverError, StepReport, kkt_residual,
                    solve_spd, step_constrained, step_fixed_obstacle,
                    step_penalty, step_truncation, step_unconstrained)
