"""The threshold n_q and the auxiliary inequalities behind it.

n_q is the smallest n >= 9 with

    43 q^sqrt(n) / (10 (1-q)) + 160 q / (57 (n - sqrt n) (1-q)^2)  <=  L(q),

where L(q) is the heat-kernel lower bound. A second, simpler inequality
("condition z") controls the remainder estimates; the helpers here check
how the two relate numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath

from .errors import IterationCap
from .kernels import heat_kernel_lower_bound
from .precision import AUTO_DIGITS, DEFAULT_PRECISION, PrecisionMode, mp_context

N_MIN = 9
DEFAULT_CAP = 10**7
REGION_Q = 9 / 25


@dataclass(frozen=True)
class NqResult:
    q: float
    n_q: int
    lhs_at_nq: object
    rhs: object
    lhs_at_prev: object | None  # None when n_q == 9


def master_rhs(q, precision: PrecisionMode = DEFAULT_PRECISION):
    """Right-hand side of the master inequality; independent of n."""
    return heat_kernel_lower_bound(q, precision)


def master_lhs(q, n, ctx):
    q = ctx.mpf(q)
    root = ctx.sqrt(n)
    return (43 / (10 * (1 - q)) * q ** root
            + 160 / (57 * (n - root)) * q / (1 - q) ** 2)


def master_inequality_sides(q, n: int, precision: PrecisionMode = DEFAULT_PRECISION):
    """Return ``(lhs, rhs)``; the inequality holds when ``lhs <= rhs``."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if n < N_MIN:
        raise ValueError(f"the master inequality is stated for n >= {N_MIN}")
    rhs = master_rhs(q, precision)
    ctx = _number_context(rhs, precision)
    return master_lhs(q, n, ctx), rhs


def _number_context(value, precision):
    if isinstance(value, float):
        return precision.context()
    return precision.context() if precision.is_extended else mp_context(AUTO_DIGITS)


def necessary_lower_bound(q):
    """n must exceed 160 q (1+q)^3 / (57 (1-q)^5) whenever the master inequality holds."""
    return 160 * q / (57 * (1 - q) ** 2) * ((1 + q) / (1 - q)) ** 3


def sufficient_z_bound(q):
    """Condition z holds for n > (9 (1+q) / (4 (1-q)))^2."""
    return (9 * (1 + q) / (4 * (1 - q))) ** 2


def solve_nq(q, cap: int = DEFAULT_CAP, precision: PrecisionMode = DEFAULT_PRECISION) -> NqResult:
    """Smallest n >= 9 satisfying the master inequality.

    The left side is strictly decreasing in n and the right side constant,
    so a doubling search followed by bisection finds the first crossing.
    When the necessary lower bound already exceeds ``cap`` no scan is run.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    bound = necessary_lower_bound(q)
    if bound >= cap:
        raise IterationCap(q, cap, bound)
    rhs = master_rhs(q, precision)
    ctx = _number_context(rhs, precision)

    def holds(n):
        return master_lhs(q, n, ctx) <= rhs

    if holds(N_MIN):
        return NqResult(q, N_MIN, master_lhs(q, N_MIN, ctx), rhs, None)
    lo = N_MIN  # fails
    hi = 2 * N_MIN
    while not holds(hi):
        if hi >= cap:
            raise IterationCap(q, cap, bound)
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return NqResult(q, hi, master_lhs(q, hi, ctx), rhs, master_lhs(q, hi - 1, ctx))


def master_holds(q, n: int, precision: PrecisionMode = DEFAULT_PRECISION) -> bool:
    if n < N_MIN:
        return False
    lhs, rhs = master_inequality_sides(q, n, precision)
    return lhs <= rhs


def width_certified(q, n: int, precision: PrecisionMode = DEFAULT_PRECISION) -> bool:
    """True when n >= n_q, decided without a scan by monotonicity of the left side."""
    if n < N_MIN:
        return False
    if n <= necessary_lower_bound(q):
        return False
    return master_holds(q, n, precision)


def check_condition_z(q, n: int, precision: PrecisionMode = DEFAULT_PRECISION) -> bool:
    """q^n / (1 - q^{2n}) <= 7 q^sqrt(n) / (37 n^2), compared in logarithms."""
    ctx = precision.context()
    q = ctx.mpf(q)
    log_q = ctx.log(q)
    lhs = n * log_q - ctx.log1p(-ctx.exp(2 * n * log_q))
    rhs = ctx.log(ctx.mpf(7) / 37) + ctx.sqrt(n) * log_q - 2 * ctx.log(n)
    return bool(lhs <= rhs)


def xi(n, ctx=mpmath.fp):
    """(n - sqrt n) log(9/25) + 2 log n - log(7/37 (1 - (3/5)^36)); negative for n >= 9."""
    return ((n - ctx.sqrt(n)) * ctx.log(ctx.mpf(9) / 25) + 2 * ctx.log(n)
            - ctx.log(ctx.mpf(7) / 37 * (1 - (ctx.mpf(3) / 5) ** 36)))


@dataclass(frozen=True)
class ImplicationReport:
    """Truth values of each step of the chain master => z at one (q, n).

    Antecedent/consequent flags are stored alongside each implication so a
    vacuous truth is visible. Implications that do not apply to this q are
    ``None``.
    """

    q: float
    n: int
    master: bool
    condition_z: bool
    above_necessary_bound: bool
    above_sufficient_z_bound: bool
    in_region: bool
    xi_negative: bool
    region_implies_z: bool | None
    master_implies_bound: bool
    bound_z_implies_z: bool
    bound_implies_bound_z: bool | None
    master_implies_z: bool | None

    @property
    def implications(self) -> dict:
        return {
            "region_implies_z": self.region_implies_z,
            "master_implies_bound": self.master_implies_bound,
            "bound_z_implies_z": self.bound_z_implies_z,
            "bound_implies_bound_z": self.bound_implies_bound_z,
            "master_implies_z": self.master_implies_z,
            "xi_negative": self.xi_negative,
        }

    @property
    def all_hold(self) -> bool:
        return all(v is not False for v in self.implications.values())


def _implies(a, b):
    return (not a) or b


def check_implications(q, n: int, precision: PrecisionMode = DEFAULT_PRECISION) -> ImplicationReport:
    """Evaluate every implication instance used to reduce master to condition z.

    Any ``False`` entry is a contradiction of the published argument, not a
    numerical corner case.
    """
    if n < N_MIN:
        raise ValueError(f"implications are stated for n >= {N_MIN}")
    master = master_holds(q, n, precision)
    z = check_condition_z(q, n, precision)
    above_n1 = n > necessary_lower_bound(q)
    above_n2 = n > sufficient_z_bound(q)
    in_region = q <= REGION_Q
    return ImplicationReport(
        q=q,
        n=n,
        master=master,
        condition_z=z,
        above_necessary_bound=above_n1,
        above_sufficient_z_bound=above_n2,
        in_region=in_region,
        xi_negative=bool(xi(n) < 0),
        region_implies_z=z if in_region else None,
        master_implies_bound=_implies(master, above_n1),
        bound_z_implies_z=_implies(above_n2, z),
        bound_implies_bound_z=None if in_region else _implies(above_n1, above_n2),
        master_implies_z=None if in_region else _implies(master, z),
    )
