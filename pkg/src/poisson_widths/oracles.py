"""Brute-force verifiers that share no code with the formulas they check.

Everything here runs in binary64 with numpy and only ever touches the plain
kernel series; the only import from the package is the parameter type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .kernels import KernelParams

GOLDEN_XTOL = 1e-12
TAIL_EPS = 1e-18


@dataclass(frozen=True)
class GridSpec:
    """Grid sizes for the oracles.

    ``points_per_period`` of ``None`` means max(4096, 64 n) for the n under test.
    """

    points_per_period: int | None = None
    quadrature_points: int = 512

    def points(self, n: int = 1) -> int:
        if self.points_per_period is not None:
            return max(int(self.points_per_period), 64 * n)
        return max(4096, 64 * n)


def _kernel_terms(q, eps=TAIL_EPS):
    # q^{K+1}/(1-q) < eps
    return max(1, math.ceil(math.log(eps * (1 - q)) / math.log(q)))


def _interval_weights(n, k):
    """sum_i sgn_i (e^{-ik a_i} - e^{-ik a_{i+1}}) over the 2n sign-constant pieces of [0, 2 pi]."""
    edges = np.arange(2 * n + 1) * (np.pi / n)
    signs = np.where(np.arange(2 * n) % 2 == 0, 1.0, -1.0)
    ph = np.exp(-1j * np.outer(k, edges))
    return (ph[:, :-1] - ph[:, 1:]) @ signs


def convolution_values(params: KernelParams, n: int, x):
    """(1/pi) integral over a period of P_{q,beta}(x - t) sgn sin(n t) dt.

    Each kernel term is integrated exactly on each interval where
    sgn sin(n t) is constant:
    int_a^b cos(k(x-t) - phi) dt = (sin(k(x-a) - phi) - sin(k(x-b) - phi)) / k.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    q = float(params.q)
    k = np.arange(1, _kernel_terms(q) + 1)
    w = _interval_weights(n, k)
    phase = np.exp(-0.5j * np.pi * float(params.beta_mod4))
    coef = q ** k / k * phase * w
    return (np.exp(1j * np.outer(x, k)) @ coef).imag / np.pi


def _is_vectorized(f, xs):
    try:
        with np.errstate(all="ignore"):
            vals = np.asarray(f(xs), dtype=float)
    except (TypeError, ValueError):
        return False
    return vals.shape == xs.shape


def grid_argmax(f, period: float, grid: GridSpec | int = GridSpec(), n: int = 1):
    """Maximize a ``period``-periodic f on a uniform grid, then golden-section polish.

    ``f`` may be vectorized (accepting an array) or scalar. Returns
    ``(max_value, location)`` with location in [0, period).
    """
    m = grid if isinstance(grid, int) else grid.points(n)
    h = period / m
    xs = np.arange(m) * h
    if _is_vectorized(f, xs[:2]):
        vals = np.asarray(f(xs), dtype=float)

        def neg(x):
            return -float(np.asarray(f(np.array([x])), dtype=float)[0])
    else:
        vals = np.array([float(f(float(x))) for x in xs])

        def neg(x):
            return -float(f(float(x)))
    i = int(np.argmax(vals))
    x0, best = float(xs[i]), float(vals[i])
    try:
        res = minimize_scalar(neg, bracket=(x0 - h, x0, x0 + h), method="golden",
                              options={"xtol": GOLDEN_XTOL})
        if -res.fun >= best:
            x0, best = float(res.x), -float(res.fun)
    except ValueError:
        pass  # flat neighborhood; the grid point stands
    loc = x0 % period
    return best, (0.0 if loc >= period else loc)


def convolution_max_oracle(params: KernelParams, n: int, grid: GridSpec = GridSpec()):
    """Max over a period of |P_{q,beta} * sgn sin(n .)| and one location where it is attained."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return grid_argmax(lambda x: np.abs(convolution_values(params, n, x)), 2 * math.pi, grid, n)


def kernel_1_values(params: KernelParams, t):
    """P_{q,beta,1}(t) summed directly in numpy."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    q = float(params.q)
    k = np.arange(1, _kernel_terms(q) + 1)
    shift = (float(params.beta_mod4) + 1) * np.pi / 2
    return (np.cos(np.outer(t, k) - shift) * (q ** k / k)).sum(axis=1)


def quadrature_fourier_coeff(kernel, k: int, grid: GridSpec = GridSpec()):
    """Trapezoidal estimate of c_k = (1/pi) int kernel(t) e^{-ikt} dt over a period.

    With this normalization kernel(t) = (1/2) sum_{k != 0} c_k e^{ikt}, so
    c_k = q^|k|/|k| e^{-+i(beta+1)pi/2} for P_{q,beta,1}.

    ``kernel`` maps an array of angles to real values. The trapezoid rule is
    spectrally accurate for smooth periodic integrands.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    m = grid.quadrature_points
    t = 2 * np.pi * np.arange(m) / m
    vals = np.asarray(kernel(t), dtype=float)
    return complex(2 * np.mean(vals * np.exp(-1j * k * t)))
