"""Kolmogorov widths of Poisson-kernel classes.

Series and closed forms for the Poisson kernels, the best-approximation
values E_n, the threshold n_q above which they are the widths, and a
numerical check of the alternating-sign condition for fundamental SK-splines.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceeded,
    DegeneratePhase,
    IllConditioned,
    IterationCap,
    NearSingular,
    PoissonWidthsError,
    RootBracketFailure,
    Underflow,
)
from .kernels import (
    KernelParams,
    eval_heat_kernel_elliptic,
    eval_heat_kernel_series,
    eval_phi,
    eval_poisson_kernel,
    eval_poisson_kernel_1,
    heat_kernel_lower_bound,
)
from .precision import PrecisionMode, SeriesBudget
from .skspline import (
    build_fundamental_spline,
    decompose_lambda,
    derivative_at_midpoints_direct,
    derivative_at_midpoints_heat,
    lambda_direct,
    lambda_fourier,
    verify_condition,
)
from .threshold import check_condition_z, check_implications, master_inequality_sides, solve_nq
from .widths import best_approx_value, peak_point, theta_n
