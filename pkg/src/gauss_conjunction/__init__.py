"""Conjunction probabilities of smooth Gaussian processes: closed-form bounds,
Euler-characteristic approximations and Monte Carlo validation."""

from .bounds import (BoundReport, bound_for, correlated_bound, corollary1_bound, ec_heuristic,
                     pickands_constant, theorem1_bound)
from .crossings import (conjunction_exceeds, count_conjunction_upcrossings, count_crossings,
                        euler_characteristic_1d, simultaneous_crossing_cells)
from .errors import CholeskyError, NumericalError, QuadratureError
from .kernels import (Matern52, ProcessSet, QuadraticWarp, SquaredExponential, TimeWarpedSE,
                      cov_matrix, deriv_variance, kernel_eval, validate_kernel)
from .montecarlo import (McEstimate, estimate_conjunction_prob, estimate_crossing_moments,
                         estimate_euler_char, estimate_pickands, extrapolate_pickands, simulate, wilson_ci)
from .sampler import Grid, PathSample, chol_with_jitter, sample_paths
from .scalar_stats import QuadratureSpec, integrate_adaptive, orthant_prob, phi, phi_bar

__version__ = "0.1.0"
