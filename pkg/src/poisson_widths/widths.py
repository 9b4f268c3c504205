"""Phase root theta_n, peak point y0 and the best-approximation value E_n."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RootBracketFailure
from .kernels import KernelParams, phase_factor, to_context
from .precision import DEFAULT_BUDGET, DEFAULT_PRECISION, PrecisionMode, SeriesBudget, context_digits

RESIDUAL_TOL = 1e-12
BISECTION_TOL = 1e-14
BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class ThetaResult:
    theta: object
    residual: object
    method: str  # "closed_form" or "bisection"


@dataclass(frozen=True)
class WidthValue:
    """E_n together with how it was obtained.

    For ``n >= n_q`` the same number is also d_{2n} and d_{2n-1} of the
    class; below that threshold it is only an upper bound for the widths.
    """

    value: object
    n: int
    params: KernelParams
    theta: ThetaResult
    closed_form_tag: str  # "general", "beta_even" or "beta_odd"

    LABELS = ("d_2n", "d_2n-1", "E_n")


def _closed_form_tag(params):
    if params.beta_reduced == 0:
        return "beta_even"
    if params.beta_reduced == 1:
        return "beta_odd"
    return "general"


def _series_terms(params, n, budget):
    log_qn = n * math.log(params.q)
    # normalized series: sum_nu q^{2 nu n} (...), ratio q^{2n}, leading term 1
    return budget.terms(2 * log_qn) + 1


def phase_residual(params: KernelParams, n: int, theta, ctx, budget: SeriesBudget = DEFAULT_BUDGET):
    """sum_nu q^{(2nu+1)n} cos((2nu+1) theta pi - beta pi/2), divided by q^n.

    Dividing by the leading power keeps the residual O(1) so the root test is
    meaningful even when q^n is tiny.
    """
    terms = _series_terms(params, n, budget)
    a2 = ctx.mpf(params.q) ** (2 * n)
    u = ctx.expj(ctx.pi * theta)
    u2 = u * u
    w = u
    total = ctx.mpc(0)
    weight = ctx.mpf(1)
    for _ in range(terms):
        total += weight * w
        w *= u2
        weight *= a2
    return (phase_factor(ctx, params.beta_reduced) * total).real


def _theta_closed(params, n, ctx):
    """1 - [beta] - arcsin(...)/pi, written with atan2.

    The arcsin argument (1-a) cos(beta pi/2) / sqrt(1 - 2a cos(beta pi) + a^2),
    a = q^{2n}, has complementary leg (1+a)|sin(beta pi/2)|; atan2 of the two
    legs avoids the loss of digits of arcsin near +-1.
    """
    a2 = ctx.mpf(params.q) ** (2 * n)
    half = to_context(ctx, params.beta_reduced) / 2
    angle = ctx.atan2((1 - a2) * ctx.cospi(half), (1 + a2) * abs(ctx.sinpi(half)))
    theta = 1 - params.beta_floor - angle / ctx.pi
    if theta >= 1:
        theta -= 1
    return theta


def bisect_theta(params: KernelParams, n: int, ctx, budget: SeriesBudget = DEFAULT_BUDGET):
    """Root of the phase equation on [0, 1) by bisection.

    The normalized residual g satisfies g(theta + 1) = -g(theta), so [0, 1]
    always brackets a sign change unless g(0) = 0.
    """
    lo, hi = ctx.mpf(0), ctx.mpf(1)
    g_lo = phase_residual(params, n, lo, ctx, budget)
    if g_lo == 0:
        return lo
    g_hi = phase_residual(params, n, hi, ctx, budget)
    if g_lo * g_hi > 0:
        raise RootBracketFailure(f"no sign change on [0, 1] for {params}, n={n}")
    digits = context_digits(ctx)
    tol = BISECTION_TOL if digits <= 15 else ctx.mpf(10) ** (1 - digits)
    iterations = max(BISECTION_MAX_ITER, 4 * context_digits(ctx))
    for _ in range(iterations):
        mid = (lo + hi) / 2
        g_mid = phase_residual(params, n, mid, ctx, budget)
        if g_mid == 0:
            return mid
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    theta = (lo + hi) / 2
    return theta - 1 if theta >= 1 else theta


def theta_n(params: KernelParams, n: int, budget: SeriesBudget = DEFAULT_BUDGET,
            precision: PrecisionMode = DEFAULT_PRECISION) -> ThetaResult:
    """Unique root theta_n in [0, 1) of the phase equation.

    Uses the explicit arcsin formula, falling back to bisection whenever its
    normalized residual is not below 1e-12.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    ctx = precision.select(params.log10_q, n)
    theta = _theta_closed(params, n, ctx)
    residual = phase_residual(params, n, theta, ctx, budget)
    if abs(residual) < RESIDUAL_TOL:
        return ThetaResult(theta, residual, "closed_form")
    theta = bisect_theta(params, n, ctx, budget)
    return ThetaResult(theta, phase_residual(params, n, theta, ctx, budget), "bisection")


def peak_point(params: KernelParams, n: int, budget: SeriesBudget = DEFAULT_BUDGET,
               precision: PrecisionMode = DEFAULT_PRECISION):
    """y0 = theta_n pi / n, where |Phi_{q,beta,n}| peaks on [0, pi/n)."""
    ctx = precision.select(params.log10_q, n)
    return theta_n(params, n, budget, precision).theta * ctx.pi / n


def best_approx_value(params: KernelParams, n: int, budget: SeriesBudget = DEFAULT_BUDGET,
                      precision: PrecisionMode = DEFAULT_PRECISION) -> WidthValue:
    """E_n = (4/pi) |sum_nu q^{(2nu+1)n}/(2nu+1) sin((2nu+1) theta_n pi - beta pi/2)|."""
    ctx = precision.select(params.log10_q, n)
    theta = theta_n(params, n, budget, precision)
    terms = _series_terms(params, n, budget)
    qn = ctx.mpf(params.q) ** n
    a2 = qn * qn
    u = ctx.expj(ctx.pi * theta.theta)
    u2 = u * u
    w = u
    weight = qn
    total = ctx.mpc(0)
    for nu in range(terms):
        total += weight * w / (2 * nu + 1)
        w *= u2
        weight *= a2
    value = 4 / ctx.pi * abs((phase_factor(ctx, params.beta_reduced) * total).imag)
    return WidthValue(value, n, params, theta, _closed_form_tag(params))


def closed_form_value(params: KernelParams, n: int, precision: PrecisionMode = DEFAULT_PRECISION):
    """(4/pi) arctan q^n for even beta, (2/pi) log((1+q^n)/(1-q^n)) for odd beta."""
    ctx = precision.select(params.log10_q, n)
    qn = ctx.mpf(params.q) ** n
    tag = _closed_form_tag(params)
    if tag == "beta_even":
        return 4 / ctx.pi * ctx.atan(qn)
    if tag == "beta_odd":
        return 2 / ctx.pi * (ctx.log1p(qn) - ctx.log1p(-qn))
    raise ValueError("closed forms exist only for integer beta")
