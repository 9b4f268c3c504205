"""Exception hierarchy shared by all modules."""


class PoissonWidthsError(Exception):
    """Base class for every error raised by this package."""


class BudgetExceeded(PoissonWidthsError):
    """The tail bound of a series cannot reach the tolerance within ``max_terms``."""

    def __init__(self, needed, max_terms):
        super().__init__(f"series needs {needed} terms, budget allows {max_terms}")
        self.needed = needed
        self.max_terms = max_terms


class Underflow(PoissonWidthsError):
    """A quantity falls below the binary64 floor and escalation is disabled."""


class RootBracketFailure(PoissonWidthsError):
    """Bisection for the phase root could not bracket a sign change."""


class IterationCap(PoissonWidthsError):
    """The threshold scan passed its cap without the inequality holding."""

    def __init__(self, q, cap, lower_bound=None):
        msg = f"n_q({q}) exceeds cap {cap}"
        if lower_bound is not None:
            msg += f" (necessary lower bound n > {float(lower_bound):.6g})"
        super().__init__(msg)
        self.q = q
        self.cap = cap
        self.lower_bound = lower_bound


class DegeneratePhase(PoissonWidthsError):
    """sin(n*y0 - beta*pi/2) vanishes to working precision."""


class NearSingular(PoissonWidthsError):
    """Some spectral coefficient lambda_j is too small to trust."""

    def __init__(self, min_abs_lambda, tol):
        super().__init__(f"min |lambda_j| = {min_abs_lambda} below tolerance {tol}")
        self.min_abs_lambda = min_abs_lambda
        self.tol = tol


class IllConditioned(PoissonWidthsError):
    """The interpolation system is too ill-conditioned for the working precision."""

    def __init__(self, condition, limit):
        super().__init__(f"condition number ~{condition} exceeds {limit}")
        self.condition = condition
        self.limit = limit
