"""Precision modes, arithmetic contexts and series truncation budgets.

Every numerical routine in the package is written against an mpmath-style
context object: ``mpmath.fp`` (plain Python floats) for binary64 work and an
``mpmath.MPContext`` for extended precision.  Both expose the same API
(``mpf``, ``mpc``, ``cos``, ``expj``, ``fdot``, ...), so one code path serves
both modes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import mpmath

from .errors import BudgetExceeded, Underflow

ENV_VAR = "POISSON_WIDTHS_PRECISION"

# below this log10 magnitude (applied to q**(3n)) binary64 is abandoned
ESCALATION_LOG10 = -280.0
# below this log10 magnitude (applied to q**n) binary64 results are meaningless
FLOOR_LOG10 = -300.0
# digits used when standard64 escalates on its own
AUTO_DIGITS = 40


@lru_cache(maxsize=None)
def mp_context(dps: int) -> mpmath.MPContext:
    """Return a shared extended-precision context with ``dps`` decimal digits.

    Contexts are created once and never mutated afterwards, so they can be
    shared freely between threads.
    """
    ctx = mpmath.MPContext()
    ctx.dps = int(dps)
    return ctx


def context_digits(ctx) -> int:
    """Decimal digits carried by ``ctx`` (15 for binary64)."""
    if ctx is mpmath.fp:
        return 15
    return int(ctx.dps)


@dataclass(frozen=True)
class PrecisionMode:
    """Arithmetic mode: binary64 (``digits is None``) or ``digits`` decimal digits.

    ``auto`` lets binary64 escalate to extended precision when powers of q
    leave the binary64 range; with ``auto=False`` such inputs raise
    :class:`Underflow` instead.
    """

    digits: int | None = None
    auto: bool = True

    def __post_init__(self):
        if self.digits is not None and int(self.digits) < 1:
            raise ValueError("extended precision needs a positive digit count")

    @classmethod
    def standard64(cls, auto: bool = True) -> "PrecisionMode":
        return cls(None, auto)

    @classmethod
    def extended(cls, digits: int) -> "PrecisionMode":
        return cls(int(digits), True)

    @classmethod
    def parse(cls, text: str) -> "PrecisionMode":
        """Parse ``standard64``, ``auto`` or ``extended:<digits>``."""
        text = text.strip().lower()
        if text == "standard64":
            return cls(None, auto=False)
        if text == "auto":
            return cls(None, auto=True)
        if text.startswith("extended:"):
            try:
                digits = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad precision setting {text!r}") from None
            return cls.extended(digits)
        raise ValueError(f"bad precision setting {text!r}")

    @classmethod
    def from_env(cls, default: str = "standard64") -> "PrecisionMode":
        return cls.parse(os.environ.get(ENV_VAR, default))

    @property
    def is_extended(self) -> bool:
        return self.digits is not None

    @property
    def label(self) -> str:
        if self.digits is None:
            return "auto" if self.auto else "standard64"
        return f"extended:{self.digits}"

    def context(self):
        if self.digits is None:
            return mpmath.fp
        return mp_context(self.digits)

    def select(self, log10_q: float, n: int):
        """Context for work involving powers up to ``q**(3n)``.

        Binary64 is kept while ``q**(3n)`` stays above 1e-280; otherwise the
        mode escalates (``auto``) or raises once ``q**n`` itself is below the
        binary64 floor.
        """
        if self.digits is not None:
            return mp_context(self.digits)
        if 3 * n * log10_q >= ESCALATION_LOG10:
            return mpmath.fp
        if self.auto:
            return mp_context(AUTO_DIGITS)
        if n * log10_q < FLOOR_LOG10:
            raise Underflow(f"q**n ~ 1e{n * log10_q:.0f} is below the binary64 floor")
        return mpmath.fp


DEFAULT_PRECISION = PrecisionMode()


@dataclass(frozen=True)
class SeriesBudget:
    """Truncation policy: absolute tail tolerance plus a hard cap on terms."""

    eps: float = 1e-15
    max_terms: int = 1_000_000

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")

    @classmethod
    def for_digits(cls, digits: int, max_terms: int = 1_000_000) -> "SeriesBudget":
        return cls(10.0 ** (-digits) if digits < 300 else _tiny(digits), max_terms)

    def log_eps(self) -> float:
        return math.log(self.eps) if isinstance(self.eps, float) else float(mpmath.log(self.eps))

    def terms(self, log_ratio: float, log_scale: float = 0.0, harmonic: bool = False) -> int:
        """Smallest K whose geometric tail bound is below ``eps/2``.

        The bound is ``scale * r**(K+1) / (1 - r)`` (divided by ``K+1`` when
        ``harmonic``), with ``r = exp(log_ratio)``. Logs keep tiny ratios
        such as ``q**(2n)`` from underflowing.
        """
        if log_ratio >= 0:
            raise ValueError("series ratio must be below 1")
        target = self.log_eps() - math.log(2.0)
        log_denom = math.log(-math.expm1(log_ratio))
        base = log_scale - log_denom

        def tail(k):
            val = base + (k + 1) * log_ratio
            if harmonic:
                val -= math.log(k + 1)
            return val

        k = max(0, math.ceil((target - base) / log_ratio) - 1)
        while k > 0 and tail(k - 1) < target:
            k -= 1
        while tail(k) >= target:
            k += 1
        if k > self.max_terms:
            raise BudgetExceeded(k, self.max_terms)
        return k


def _tiny(digits):
    # 10**-digits does not fit a float past ~308 digits
    return mpmath.mpf(10) ** (-digits)


DEFAULT_BUDGET = SeriesBudget()
