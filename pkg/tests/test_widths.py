import math

import pytest
from hypothesis import given, strategies as st

from poisson_widths.kernels import KernelParams, eval_phi
from poisson_widths.oracles import convolution_max_oracle, grid_argmax
from poisson_widths.precision import PrecisionMode, SeriesBudget
from poisson_widths.widths import (
    RESIDUAL_TOL,
    WidthValue,
    best_approx_value,
    bisect_theta,
    closed_form_value,
    peak_point,
    phase_residual,
    theta_n,
)
import mpmath

params_st = st.builds(KernelParams, st.floats(0.01, 0.99), st.floats(-5, 5))


def test_theta_integer_beta():
    assert theta_n(KernelParams(0.5, 0), 3).theta == 0.5
    assert theta_n(KernelParams(0.7, 1), 2).theta == 0.0
    assert theta_n(KernelParams(0.5, 0), 3).method == "closed_form"


def test_theta_matches_bisection():
    p = KernelParams(0.3, 0.5)
    res = theta_n(p, 2)
    assert abs(res.residual) < 1e-12
    assert abs(res.theta - bisect_theta(p, 2, mpmath.fp)) < 1e-12


@given(params_st, st.integers(1, 40))
def test_theta_root_in_unit_interval(p, n):
    res = theta_n(p, n)
    assert 0 <= res.theta < 1
    assert abs(res.residual) < RESIDUAL_TOL
    assert res.method == "closed_form"


def test_theta_extended():
    p = KernelParams(0.3, 0.3)
    ext = PrecisionMode.extended(50)
    res = theta_n(p, 300, SeriesBudget.for_digits(50), ext)
    assert abs(res.residual) < mpmath.mpf(10) ** -45


def test_peak_point_values():
    assert peak_point(KernelParams(0.5, 0), 2) == pytest.approx(math.pi / 4, abs=1e-15)
    assert peak_point(KernelParams(0.5, 1), 2) == 0.0
    p, n = KernelParams(0.25, 0.8), 4
    _, loc = grid_argmax(lambda t: abs(eval_phi(p, n, t)), math.pi / n, n=n)
    y0 = peak_point(p, n)
    d = (loc - y0) % (math.pi / n)
    assert min(d, math.pi / n - d) < math.pi / (1000 * n)


def test_best_approx_examples():
    v = best_approx_value(KernelParams(0.5, 0), 1)
    assert isinstance(v, WidthValue) and v.closed_form_tag == "beta_even"
    assert v.value == pytest.approx(4 / math.pi * math.atan(0.5), abs=1e-15)
    v = best_approx_value(KernelParams(0.5, 1), 1)
    assert v.closed_form_tag == "beta_odd"
    assert v.value == pytest.approx(2 / math.pi * math.log(3), abs=1e-15)
    p = KernelParams(0.2, 0.5)
    assert abs(best_approx_value(p, 2).value - convolution_max_oracle(p, 2)[0]) < 1e-8


@pytest.mark.parametrize("beta", [0, 1, 2, 3, -1, 6])
@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("n", [1, 3, 8])
def test_closed_form_consistency(beta, q, n):
    p = KernelParams(q, beta)
    assert abs(best_approx_value(p, n).value - closed_form_value(p, n)) < 1e-12


def test_closed_form_general_beta_rejected():
    with pytest.raises(ValueError):
        closed_form_value(KernelParams(0.5, 0.5), 1)


@given(params_st)
def test_value_decreases_in_n(p):
    vals = [best_approx_value(p, n).value for n in range(1, 12)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@given(params_st, st.integers(1, 10))
def test_value_is_peak_of_phi(p, n):
    v = best_approx_value(p, n).value
    y0 = peak_point(p, n)
    assert abs(abs(eval_phi(p, n, y0)) - v) < 1e-14
    # slope of the normalized residual in theta is at most pi (1+a)/(1-a)^2
    a = p.q ** (2 * n)
    slope = math.pi * (1 + a) / (1 - a) ** 2
    assert abs(phase_residual(p, n, theta_n(p, n).theta, mpmath.fp)) < 1e-14 * slope


def test_value_extended_far_below_float_floor():
    p = KernelParams(0.1, 0)
    ext = PrecisionMode.extended(30)
    v = best_approx_value(p, 400, SeriesBudget.for_digits(30), ext).value
    assert abs(v / closed_form_value(p, 400, ext) - 1) < 1e-25
