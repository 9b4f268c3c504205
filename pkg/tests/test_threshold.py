import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from poisson_widths.errors import IterationCap
from poisson_widths.precision import PrecisionMode
from poisson_widths.threshold import (
    REGION_Q,
    check_condition_z,
    check_implications,
    master_holds,
    master_inequality_sides,
    necessary_lower_bound,
    solve_nq,
    sufficient_z_bound,
    width_certified,
    xi,
)


def lhs_by_hand(q, n):
    r = math.sqrt(n)
    return 43 / (10 * (1 - q)) * q ** r + 160 / (57 * (n - r)) * q / (1 - q) ** 2


def rhs_by_hand(q):
    return (0.5 + 2 * q / ((1 + q * q) * (1 - q))) * ((1 - q) / (1 + q)) ** (4 / (1 - q * q))


def test_sides_examples():
    lhs, rhs = master_inequality_sides(0.1, 9)
    assert lhs == pytest.approx(0.06253534040863475, rel=1e-14)
    assert rhs == pytest.approx(0.3200544320288819, rel=1e-14)
    lhs, rhs = master_inequality_sides(0.5, 9)
    assert lhs > rhs
    lhs, rhs = master_inequality_sides(1e-9, 9)
    assert lhs < 1e-8 and rhs == pytest.approx(0.5, rel=1e-8)
    with pytest.raises(ValueError):
        master_inequality_sides(0.1, 8)


FROZEN_NQ = {0.05: 9, 0.1: 9, 0.2: 10, 0.25: 16, 0.3: 29, 0.36: 63, 0.4: 120, 0.5: 969, 0.6: 22685,
             0.7: 4870853}


@pytest.mark.parametrize("q", sorted(FROZEN_NQ))
def test_nq_frozen(q):
    res = solve_nq(q)
    assert res.n_q == FROZEN_NQ[q]
    assert res.lhs_at_nq <= res.rhs
    if res.n_q > 9:
        assert res.lhs_at_prev > res.rhs
        assert lhs_by_hand(q, res.n_q - 1) > rhs_by_hand(q)
    else:
        assert res.lhs_at_prev is None
    assert lhs_by_hand(q, res.n_q) <= rhs_by_hand(q)


def test_nq_monotone_in_q():
    vals = [FROZEN_NQ[q] for q in sorted(FROZEN_NQ)]
    assert vals == sorted(vals)


@given(st.floats(0.02, 0.55))
def test_nq_minimal_and_holds_above(q):
    res = solve_nq(q)
    for n in (res.n_q, res.n_q + 1, res.n_q + 17, 2 * res.n_q):
        assert master_holds(q, n)
    if res.n_q > 9:
        assert not master_holds(q, res.n_q - 1)
    assert res.n_q > necessary_lower_bound(q)


def test_iteration_cap():
    with pytest.raises(IterationCap) as info:
        solve_nq(0.999, cap=100000)
    assert info.value.lower_bound == pytest.approx(necessary_lower_bound(0.999))
    assert "exceeds cap" in str(info.value)
    with pytest.raises(IterationCap):
        solve_nq(0.72)


def test_width_certified_matches_nq():
    for q in (0.1, 0.2, 0.3, 0.5):
        nq = FROZEN_NQ[q]
        assert width_certified(q, nq)
        assert width_certified(q, nq + 3)
        assert not width_certified(q, nq - 1)
    assert not width_certified(0.1, 5)
    assert not width_certified(0.99999, 10**6, PrecisionMode.standard64(auto=False))


def test_condition_z_examples():
    assert check_condition_z(0.2, 9)
    assert check_condition_z(0.36, 9)
    assert not check_condition_z(0.9, 9)
    assert all(check_condition_z(0.36, n) for n in range(9, 101))
    assert all(check_condition_z(0.3, n) for n in range(9, 101))


def test_condition_z_extended_agrees():
    ext = PrecisionMode.extended(40)
    for q in (0.2, 0.5, 0.8, 0.95):
        for n in (9, 30, 100, 1000, 5000):
            assert check_condition_z(q, n) == check_condition_z(q, n, ext)


def test_sufficient_bound_implies_z():
    for q in (0.4, 0.6, 0.8, 0.9):
        n = math.floor(sufficient_z_bound(q)) + 1
        assert check_condition_z(q, n)


def test_xi_negative():
    assert all(xi(n) < 0 for n in range(9, 500))
    assert xi(9, mpmath.mp) < 0


def test_implications_examples():
    rep = check_implications(0.5, FROZEN_NQ[0.5])
    assert rep.all_hold and rep.master and rep.condition_z
    rep = check_implications(0.3, 9)
    assert rep.condition_z and not rep.master and rep.all_hold
    assert rep.in_region and rep.master_implies_z is None
    assert 0.36 == REGION_Q


def test_implications_report_contradiction_visible():
    rep = check_implications(0.9, 9)
    assert rep.implications["master_implies_bound"] is True  # vacuous: master fails
    assert not rep.master and not rep.condition_z
