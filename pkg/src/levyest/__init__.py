"""Nonparametric spectral estimation for irregularly sampled Levy processes.

The package estimates the jump function g(x) = x * eta(x) and the marginal
density of the unit-time law from increments observed at deterministic,
irregularly spaced, possibly low-frequency times. Weighted empirical
characteristic-function statistics are inverted with threshold
regularization and kernel smoothing; weights and cutoffs can be chosen by a
data-driven iteration and leave-p-out cross-validation. A benchmark harness
reproduces Monte Carlo risk tables for the bundled models.
"""

__version__ = "0.1.0"

from .errors import (BracketFailure, ConfigError, GapExceedsDeltaMax,
                     GridTooNarrow, LengthMismatch, LevyEstError, NoDensity,
                     NoJumpRepresentation, NonPositiveGap,
                     NoRootInUnitInterval, PlanTooSmall)
from .sampling import (ObservationSet, SamplingScheme, draw_uniform_gaps,
                       read_scheme_csv, scheme_from_gaps, write_scheme_csv)
from .models import (BilateralGammaProcess, BrownianDrift,
                     CompoundPoissonNormal, GammaProcess, LevyModel,
                     parse_model)
from .spectral import (CharFnEstimate, SpectralGrid, SpectralStatistics,
                       clamp_phi, compute_p_hat, compute_q_hat,
                       compute_sigma, compute_statistics, integrate_psi,
                       psi_prime_hat, regularize_inverse)
from .weights import (WeightScheme, binned_weights, equal_weights,
                      iterative_weights, oracle_weights, weights_from_matrix)
from .estimators import (QUARTIC, SINC, DensityEstimate, JumpEstimate,
                         QuarticKernel, SincKernel, estimate_f, estimate_g,
                         l2_risk_density, l2_risk_spectral)
from .selection import (BlockPlan, CutoffMenu, CvResult, build_block_plan,
                        cv_cutoff_density, cv_cutoff_jump)
from .rates import (BandwidthSolution, CompoundPoissonClass, DensityExp,
                    DensityPol, GlobalExp, GlobalPol, LocalHolder,
                    solve_bandwidth, solve_h_cp, solve_h_density,
                    solve_h_global_exp, solve_h_global_pol, solve_h_local)
from .bench import (ExperimentConfig, RiskReport, emit_report,
                    oracle_cutoff_density, oracle_cutoff_jump,
                    run_table_experiment)
