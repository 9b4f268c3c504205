"""Poisson kernels and their relatives, each in two independent representations.

The series forms are the contract values; the closed forms (complex
geometric sums, logarithms, the elliptic ``dn`` product) exist so the series
can be cross-checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .errors import Underflow
from .precision import (
    AUTO_DIGITS,
    DEFAULT_BUDGET,
    DEFAULT_PRECISION,
    PrecisionMode,
    SeriesBudget,
    mp_context,
)

FLOAT_TINY = 2.2250738585072014e-308


@dataclass(frozen=True)
class KernelParams:
    """Kernel parameters ``(q, beta)`` with ``0 < q < 1``.

    ``beta_reduced`` is beta mod 2 (magnitudes only depend on it) and
    ``beta_mod4`` is beta mod 4, which still fixes every sign because the
    kernels are 4-periodic in beta. Both are exact fractions: rounding them
    separately would put the phases built from each out of step by an ulp,
    which matters once q^{2n} is far below binary64 resolution.
    """

    q: float
    beta: float
    beta_reduced: Fraction = field(init=False, repr=False)
    beta_mod4: Fraction = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"q must lie strictly inside (0, 1), got {self.q}")
        if not math.isfinite(float(self.beta)):
            raise ValueError("beta must be finite")
        exact = Fraction(self.beta)
        object.__setattr__(self, "beta_reduced", exact % 2)
        object.__setattr__(self, "beta_mod4", exact % 4)

    @property
    def log10_q(self) -> float:
        return math.log10(self.q)

    @property
    def beta_floor(self) -> int:
        """Integer part of ``beta_reduced``, so 0 or 1."""
        return int(math.floor(self.beta_reduced))


def to_context(ctx, x):
    """x as a number of ``ctx``; fractions convert without an intermediate float."""
    if isinstance(x, Fraction):
        if ctx is mpmath.fp:
            return float(x)  # correctly rounded
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def phase_factor(ctx, beta):
    """e^{-i beta pi/2}, exact at integer and half-integer beta."""
    half = to_context(ctx, beta) / 2
    return ctx.mpc(ctx.cospi(half), -ctx.sinpi(half))


def _geometric_cos_sum(ctx, q, t, beta, terms, harmonic):
    """Re sum_{k=1}^{terms} c_k q^k e^{i(kt - beta pi/2)}, c_k = 1/k or 1."""
    z = ctx.mpf(q) * ctx.expj(t)
    w = phase_factor(ctx, beta)
    total = ctx.mpc(0)
    if harmonic:
        for k in range(1, terms + 1):
            w *= z
            total += w / k
    else:
        for k in range(1, terms + 1):
            w *= z
            total += w
    return total.real


def eval_poisson_kernel(params: KernelParams, t, budget: SeriesBudget = DEFAULT_BUDGET,
                        precision: PrecisionMode = DEFAULT_PRECISION):
    """P_{q,beta}(t) = sum_{k>=1} q^k cos(k t - beta pi/2)."""
    ctx = precision.context()
    log_q = math.log(params.q)
    terms = budget.terms(log_q)
    return _geometric_cos_sum(ctx, params.q, ctx.mpf(t), params.beta_mod4, terms, harmonic=False)


def eval_poisson_kernel_1(params: KernelParams, t, budget: SeriesBudget = DEFAULT_BUDGET,
                          precision: PrecisionMode = DEFAULT_PRECISION):
    """P_{q,beta,1}(t) = sum_{k>=1} (q^k / k) cos(k t - (beta+1) pi/2).

    This is the Poisson kernel convolved with the Bernoulli kernel, the
    generator of the SK-spline space.
    """
    ctx = precision.context()
    terms = budget.terms(math.log(params.q), harmonic=True)
    beta1 = (params.beta_mod4 + 1) % 4
    return _geometric_cos_sum(ctx, params.q, ctx.mpf(t), beta1, terms, harmonic=True)


def poisson_kernel_closed(params: KernelParams, t, precision: PrecisionMode = DEFAULT_PRECISION):
    """Closed form Re[e^{-i beta pi/2} q e^{it} / (1 - q e^{it})]."""
    ctx = precision.context()
    z = ctx.mpf(params.q) * ctx.expj(ctx.mpf(t))
    return (phase_factor(ctx, params.beta_mod4) * z / (1 - z)).real


def poisson_kernel_1_closed(params: KernelParams, t, precision: PrecisionMode = DEFAULT_PRECISION):
    """Closed form Re[e^{-i(beta+1) pi/2} (-log(1 - q e^{it}))]."""
    ctx = precision.context()
    z = ctx.mpf(params.q) * ctx.expj(ctx.mpf(t))
    return (-phase_factor(ctx, params.beta_mod4 + 1) * ctx.log(1 - z)).real


def eval_phi(params: KernelParams, n: int, t, budget: SeriesBudget = DEFAULT_BUDGET,
             precision: PrecisionMode = DEFAULT_PRECISION):
    """Phi_{q,beta,n}(t), the kernel convolved with sgn sin(n t).

    (4/pi) sum_{nu>=0} q^{(2nu+1)n} / (2nu+1) * sin((2nu+1) n t - beta pi/2)
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    ctx = precision.select(params.log10_q, n)
    log_qn = n * math.log(params.q)
    # terms nu = 0..V-1; the tail starts at power (2V+1) n
    v = budget.terms(2 * log_qn, log_scale=log_qn + math.log(4 / math.pi))
    z = ctx.mpf(params.q) ** n * ctx.expj(n * ctx.mpf(t))
    z2 = z * z
    w = z
    total = ctx.mpc(0)
    for nu in range(v + 1):
        total += w / (2 * nu + 1)
        w *= z2
    return 4 / ctx.pi * (phase_factor(ctx, params.beta_mod4) * total).imag


def phi_closed(params: KernelParams, n: int, t, precision: PrecisionMode = DEFAULT_PRECISION):
    """Closed form (4/pi) Im[e^{-i beta pi/2} atanh(q^n e^{int})]."""
    ctx = precision.select(params.log10_q, n)
    z = ctx.mpf(params.q) ** n * ctx.expj(n * ctx.mpf(t))
    atanh = (ctx.log1p(z) - ctx.log1p(-z)) / 2
    return 4 / ctx.pi * (phase_factor(ctx, params.beta_mod4) * atanh).imag


def eval_heat_kernel_series(q, x, budget: SeriesBudget = DEFAULT_BUDGET,
                            precision: PrecisionMode = DEFAULT_PRECISION):
    """Heat-conduction Poisson kernel 1/2 + 2 sum_j cos(j x) / (q^j + q^-j)."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    ctx = precision.context()
    terms = budget.terms(math.log(q), log_scale=math.log(2.0))
    return _heat_sum(ctx, q, ctx.mpf(x), 1, terms)


def _heat_sum(ctx, q, x, start, stop):
    """1/2 + 2 sum_{j=start}^{stop} q^j cos(jx) / (1 + q^{2j}) (no 1/2 if start > 1)."""
    q = ctx.mpf(q)
    rot = ctx.expj(x)
    w = ctx.expj(start * x)
    qj = q ** start
    q2 = q * q
    q2j = qj * qj
    total = ctx.mpf(0)
    for _ in range(start, stop + 1):
        total += qj * w.real / (1 + q2j)
        w *= rot
        qj *= q
        q2j *= q2
    total *= 2
    if start == 1:
        total += ctx.mpf(1) / 2
    return total


def heat_kernel_scale(q, budget: SeriesBudget = DEFAULT_BUDGET,
                      precision: PrecisionMode = DEFAULT_PRECISION):
    """K / pi = 1/2 + 2 sum_j q^j / (1 + q^{2j}), the value of the heat kernel at 0."""
    ctx = precision.context()
    terms = budget.terms(math.log(q), log_scale=math.log(2.0))
    q = ctx.mpf(q)
    total = ctx.mpf(0)
    qj = ctx.mpf(1)
    for _ in range(terms):
        qj *= q
        total += qj / (1 + qj * qj)
    return ctx.mpf(1) / 2 + 2 * total


def eval_heat_kernel_elliptic(q, x, budget: SeriesBudget = DEFAULT_BUDGET,
                              precision: PrecisionMode = DEFAULT_PRECISION):
    """Heat kernel in elliptic form (K/pi) dn(K x / pi).

    dn is taken from its nome product expansion
    exp(-8 sum_j q^{2j-1} sin^2((2j-1)x/2) / ((2j-1)(1 - q^{2(2j-1)}))).
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    ctx = precision.context()
    scale = heat_kernel_scale(q, budget, precision)
    log_q = math.log(q)
    # odd powers only: ratio q^2, terms bounded by 8 q^{2j-1} / (1-q^2)
    terms = budget.terms(2 * log_q, log_scale=math.log(8.0) - math.log1p(-q * q) - log_q)
    x = ctx.mpf(x)
    qm = ctx.mpf(q)
    q2 = qm * qm
    qo = qm
    exponent = ctx.mpf(0)
    for j in range(1, terms + 1):
        m = 2 * j - 1
        exponent += qo / (m * (1 - qo * qo)) * ctx.sin(m * x / 2) ** 2
        qo *= q2
    return scale * ctx.exp(-8 * exponent)


def heat_kernel_lower_bound(q, precision: PrecisionMode = DEFAULT_PRECISION):
    """Uniform lower bound (1/2 + 2q/((1+q^2)(1-q))) ((1-q)/(1+q))^{4/(1-q^2)}.

    Binary64 results that underflow are recomputed in extended precision
    unless the mode is strict.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    val = _lower_bound(precision.context(), q)
    if precision.is_extended or val >= FLOAT_TINY:
        return val
    if not precision.auto:
        raise Underflow(f"heat kernel lower bound for q={q} is below the binary64 floor")
    return _lower_bound(mp_context(AUTO_DIGITS), q)


def _lower_bound(ctx, q):
    q = ctx.mpf(q)
    first = ctx.mpf(1) / 2 + 2 * q / ((1 + q * q) * (1 - q))
    return first * ((1 - q) / (1 + q)) ** (4 / (1 - q * q))
