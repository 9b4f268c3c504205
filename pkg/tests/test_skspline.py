import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from poisson_widths import skspline
from poisson_widths.errors import IllConditioned, NearSingular
from poisson_widths.kernels import KernelParams, to_context
from poisson_widths.precision import PrecisionMode
from poisson_widths.skspline import (
    Partition,
    build_fundamental_spline,
    decompose_lambda,
    derivative_at_midpoints_direct,
    derivative_at_midpoints_heat,
    lambda_direct,
    lambda_fourier,
    remainder_bound,
    sign_pattern,
    verify_condition,
)
from poisson_widths.threshold import check_condition_z
from poisson_widths.widths import peak_point


def rel_err(a, b):
    return max(abs(x - y) for x, y in zip(a, b)) / max(abs(x) for x in a)


@given(st.integers(1, 200))
def test_partition(n):
    part = Partition(n)
    assert part.nodes[0] == 0 and part.nodes[-1] == pytest.approx(2 * math.pi, abs=1e-15)
    assert len(part.nodes) == 2 * n + 1 and len(part.midpoints) == 2 * n
    assert all(a < b for a, b in zip(part.nodes, part.nodes[1:]))
    assert all(a < t < b for a, t, b in zip(part.nodes, part.midpoints, part.nodes[1:]))


def test_partition_rejects_zero():
    with pytest.raises(ValueError):
        Partition(0)


def test_lambda_examples():
    lam = lambda_direct(KernelParams(0.5, 1), 4, 4, 0.0)
    assert abs(lam.imag) < 1e-12
    p = KernelParams(0.5, 1)
    assert abs(lambda_direct(p, 2, 2, 0.0) - lambda_fourier(p, 2, 2, 0.0)) < 1e-12 * abs(lambda_direct(p, 2, 2, 0.0))
    p = KernelParams(0.2, 0.7)
    a, b = lambda_direct(p, 6, 3, 0.1), lambda_fourier(p, 6, 3, 0.1)
    assert abs(a - b) < 1e-10 * abs(a)


def test_lambda_n_near_twice_leading_coefficient():
    p, n, q = KernelParams(0.3, 0), 5, 0.3
    y0 = peak_point(p, n, precision=PrecisionMode.extended(40))
    lam = lambda_direct(p, n, n, y0)
    sign = decompose_lambda(p, n, 0).sign
    assert abs(lam - sign * 2 * q ** n / n) <= 8 * q ** (3 * n) / (3 * n * (1 - q ** (2 * n)))


def _aliased(q, beta, n, l, y, m_max):
    # plain-float sum of c_k e^{iky} over k = 2mn + l, |m| <= m_max
    total = 0j
    for m in range(-m_max, m_max + 1):
        k = 2 * m * n + l
        sgn = 1 if k > 0 else -1
        total += q ** abs(k) / abs(k) * complex(mpmath.expjpi(-sgn * (beta + 1) / 2)) * complex(mpmath.expj(k * y))
    return total


def test_lambda_truncation_tail():
    q, beta, n, l, y = 0.5, 1.0, 2, 2, 0.0
    one, ten = _aliased(q, beta, n, l, y, 1), _aliased(q, beta, n, l, y, 10)
    assert abs(one - ten) < q ** (2 * n) / (n * (1 - q ** (2 * n)))
    full = _aliased(q, beta, n, l, y, 40)
    assert abs(full - complex(lambda_fourier(KernelParams(q, beta), n, l, y))) < 1e-15


@settings(max_examples=25)
@given(st.floats(0.05, 0.9), st.floats(-4, 4), st.integers(1, 16), st.data(), st.floats(-4, 4))
def test_lambda_cross_identity(q, beta, n, data, y):
    l = data.draw(st.integers(1, n))
    p = KernelParams(q, beta)
    a, b = lambda_direct(p, n, l, y), lambda_fourier(p, n, l, y)
    # lambda can vanish outright (e.g. l = n, y = 0, even beta), so allow the
    # cancellation floor of the working precision next to the relative test
    floor = mpmath.mpf(10) ** (20 - a.context.dps)
    assert abs(a - b) <= 1e-10 * abs(b) + floor


def test_decomposition_examples():
    p, n = KernelParams(0.2, 0), 9
    d0 = decompose_lambda(p, n, 0)
    assert d0.r2 == 0
    d1 = decompose_lambda(p, n, 1)
    q = 0.2
    assert abs(d1.r) <= 37 / 18 * q ** (2 * n) / (1 - q ** (2 * n))


@pytest.mark.parametrize("q,beta,n", [(0.2, 0, 9), (0.1, 1.5, 10), (0.3, 0.5, 12), (0.25, 1, 11)])
def test_decomposition_reconstruction(q, beta, n):
    p = KernelParams(q, beta)
    # r sits about q^{2n} below lambda, so resolving it from lambda takes
    # roughly 3 n log10(1/q) digits
    ext = PrecisionMode.extended(math.ceil(-3 * n * math.log10(q)) + 30)
    for j in range(n):
        d = decompose_lambda(p, n, j, precision=ext)
        ctx = d.lam.context
        y0 = peak_point(p, n, precision=PrecisionMode.extended(ctx.dps))
        lhs = ctx.expj(j * y0) * d.lam - d.sign * d.main
        # the remainders are q^{2n} below lambda; compare relative to r itself
        assert abs(lhs - d.r) <= 1e-12 * abs(d.r)
        assert abs(ctx.expj(-j * y0) * (d.sign * d.main + d.r) - d.lam) <= 1e-12 * abs(d.lam)
        assert abs(d.R - (abs(d.lam) - d.main)) <= 1e-12 * abs(d.r)
        assert d.sign == (1 if ctx.sin(n * y0 - to_context(ctx, p.beta_mod4) * ctx.pi / 2) > 0 else -1)
        assert (d.delta is None) == (j == 0 or j > math.isqrt(n))


def test_decomposition_rejects_bad_j():
    with pytest.raises(ValueError):
        decompose_lambda(KernelParams(0.2, 0), 9, 9)


@pytest.mark.parametrize("beta", [0, 0.5, 1, 1.5])
def test_direct_alternation_and_half_period_sign(beta):
    p, n = KernelParams(0.2, beta), 9
    vals = derivative_at_midpoints_direct(p, n, peak_point(p, n))
    s = decompose_lambda(p, n, 0).s
    for k, v in enumerate(vals, start=1):
        assert (v > 0) == ((k + s + 1) % 2 == 0)
    # magnitudes differ across the half period, signs flip by (-1)^n
    for k in range(n):
        assert (vals[k] > 0) != (vals[k + n] > 0)
    assert rel_err(vals[:n], [-v for v in vals[n:]]) > 1e-3


def test_direct_matches_heat_route():
    p, n = KernelParams(0.2, 1), 10
    heat_vals, breakdown = derivative_at_midpoints_heat(p, n)
    direct = derivative_at_midpoints_direct(p, n, peak_point(p, n))
    assert rel_err(direct, heat_vals) < 1e-9
    q = 0.2
    assert breakdown.total <= remainder_bound(q, n)
    assert max(abs(g) for g in breakdown.gamma[4]) <= 2 * q ** math.sqrt(n) / (1 - q)
    assert len(set(breakdown.gamma[2])) == 1


def test_near_singular():
    # lambda_n vanishes at y = 0 for even beta
    p = KernelParams(0.5, 0)
    with pytest.raises(NearSingular):
        derivative_at_midpoints_direct(p, 3, 0.0)
    with pytest.raises(NearSingular):
        build_fundamental_spline(p, 3, 0.0)


def test_verify_examples():
    rep = verify_condition(KernelParams(0.1, 0), 9)
    assert rep.verdict == "verified" and rep.margin > 0
    assert rep.epsilon_sign == (-1) ** (rep.breakdown.s + 1)
    assert all(rep.e_flags) and len(rep.midpoint_values) == 18
    assert verify_condition(KernelParams(0.1, 1.5), 9).verdict == "verified"
    rep = verify_condition(KernelParams(0.5, 0), 2)
    assert rep.verdict in {"verified", "failed", "degenerate"}


def test_verify_degenerate_verdict(monkeypatch):
    monkeypatch.setattr(skspline, "SINGULAR_DIGITS", 10**6)
    rep = verify_condition(KernelParams(0.1, 0), 9)
    assert rep.verdict == "degenerate" and rep.breakdown is None


def test_verify_precision_independent():
    p, n = KernelParams(0.15, 0.3), 9
    a = verify_condition(p, n)
    b = verify_condition(p, n, precision=PrecisionMode.extended(80))
    assert b.digits == 80 and a.verdict == b.verdict
    assert rel_err(b.midpoint_values, a.midpoint_values) < 1e-20


def test_sign_pattern_zero_handling():
    ok, eps, flags = sign_pattern([-1.0, 1e-15, -1.0, 2.0])
    assert ok and eps == 1 and flags == (True, False, True, True)
    ok, _, _ = sign_pattern([-1.0, -1.0])
    assert not ok


@pytest.mark.parametrize("q,n,y", [(0.1, 4, None), (0.2, 8, None), (0.3, 5, 0.37)])
def test_fundamental_spline(q, n, y):
    p = KernelParams(q, 0.6)
    sp = build_fundamental_spline(p, n, y)
    assert sp.residual < 1e-8
    assert abs(sp.alpha_sum) <= 1e-12 * max(abs(a) for a in sp.alphas)
    ctx = sp.y.context
    for k in range(2 * n):
        assert abs(sp(sp.y + k * ctx.pi / n) - (1 if k == 0 else 0)) < 1e-8
    direct = derivative_at_midpoints_direct(p, n, sp.y)
    assert rel_err(direct, sp.derivative_at_midpoints()) < 1e-6


def test_ill_conditioned(monkeypatch):
    monkeypatch.setattr(skspline, "SOLVE_DIGITS", 10**4)
    with pytest.raises(IllConditioned):
        build_fundamental_spline(KernelParams(0.2, 0), 4)


@settings(max_examples=10)
@given(st.floats(0.02, 0.36), st.floats(-2, 2), st.integers(9, 13))
def test_bound_chain_random(q, beta, n):
    assert check_condition_z(q, n)
    p = KernelParams(q, beta)
    for j in range(n):
        d = decompose_lambda(p, n, j)
        r = abs(d.r)
        assert r <= 37 / 18 * q ** (2 * n) / (1 - q ** (2 * n))
        # equality case (r parallel to the main term) holds up to rounding
        assert abs(d.R) <= r + r * mpmath.mpf(10) ** (5 - r.context.dps)
        if j == 0:
            assert r <= 8 / (3 * n) * q ** (3 * n) / (1 - q ** (2 * n))
        if d.delta is not None:
            assert abs(d.delta) <= 4 * j / (3 * (n - j))
