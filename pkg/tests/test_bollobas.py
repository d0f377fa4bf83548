from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from sqbellman.bollobas import (
    CASE3_QUARTIC, BollobasBellman, EndpointRootError, Polynomial, bollobas_B, check_case1_concavity,
    check_main_inequality_B, check_properties_B, check_scalar_inequalities, classify_cases, sturm_chain,
    sturm_root_count, weak_type_constant,
)


def test_unit_point_and_constant():
    psi1 = weak_type_constant()
    assert bollobas_B(0.0, 1.0) * psi1 == pytest.approx(1.0, abs=1e-10)
    assert 29 / 28 < psi1 < 1.5
    assert psi1 >= np.sqrt(2.0)  # the weak-type constant dominates the Khintchine constant


def test_outside_parabola_is_abs_x():
    x = np.array([-2.0, -1.0, 1.0, 1.5])
    assert np.array_equal(bollobas_B(x, 1.0), np.abs(x))
    assert bollobas_B(0.7, 0.0) == 0.7


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        bollobas_B(0.0, -0.1)


@given(st.floats(-2, 2), st.floats(0, 2), st.floats(0.05, 5))
@settings(max_examples=100, deadline=None)
def test_parabolic_scaling(x, lam, t):
    assert bollobas_B(t * x, t * t * lam) == pytest.approx(t * bollobas_B(x, lam), rel=1e-10, abs=1e-13)


@given(st.floats(-1.6, 1.6), st.floats(0.01, 2), st.floats(-0.999, 0.999))
@settings(max_examples=300, deadline=None)
def test_reversed_two_point_inequality(x, lam, s):
    a = s * np.sqrt(lam)
    B = BollobasBellman()
    assert B(x - a, lam - a * a) + B(x + a, lam - a * a) - 2 * B(x, lam) >= -1e-9


def test_main_inequality_every_case_sampled():
    reps = check_main_inequality_B()
    by_name = {r.check_name: r for r in reps}
    for r in reps:
        assert r.passed, r.line()
    for k in (1, 2, 3):
        case = [r for n, r in by_name.items() if f"case{k}" in n][0]
        assert case.samples >= 1000


def test_case_classification():
    # both children inside / near child outside / only far child outside
    assert classify_cases(0.0, 1.0, 0.1) == 1
    assert classify_cases(0.9, 1.0, 0.3) == 3
    assert classify_cases(0.0, 1.0, 0.8) == 2


def test_case1_concavity():
    assert check_case1_concavity().passed


def test_scalar_inequalities():
    for r in check_scalar_inequalities(2000):
        assert r.passed, r.line()


def test_structural_properties():
    for r in check_properties_B():
        assert r.passed, r.line()


# -- Sturm ------------------------------------------------------------------------------

def test_case3_quartic_has_no_roots_in_unit_interval():
    assert sturm_root_count(CASE3_QUARTIC, (0, 1)) == 0
    assert CASE3_QUARTIC(Fraction(0)) == -8 and CASE3_QUARTIC(Fraction(1)) == -27


def test_control_quadratic():
    quad = Polynomial([Fraction(-1, 4), 0, 1])
    assert sturm_root_count(quad, (0, 1)) == 1
    assert sturm_root_count(quad, (-1, 1)) == 2
    assert sturm_root_count(Polynomial([-0.25, 0.0, 1.0]), (0.0, 1.0)) == 1


def test_endpoint_root_raises():
    with pytest.raises(EndpointRootError):
        sturm_root_count(Polynomial([-1, 1]), (1, 2))


def test_exact_chain_stays_rational():
    chain = sturm_chain(CASE3_QUARTIC)
    assert all(isinstance(c, Fraction) for p in chain for c in p.coeffs)


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=6))
@settings(max_examples=150, deadline=None)
def test_root_count_matches_constructed_roots(numerators):
    roots = sorted({Fraction(n, 7) for n in numerators})
    assume(all(r not in (Fraction(-2), Fraction(2)) for r in roots))
    poly = Polynomial([1])
    for r in roots:
        poly = _mul(poly, Polynomial([-r, 1]))
    # repeated roots count once
    poly = _mul(poly, Polynomial([-roots[0], 1]))
    expected = sum(1 for r in roots if -2 < r < 2)
    assert sturm_root_count(poly, (-2, 2)) == expected


def _mul(p, q):
    out = [Fraction(0)] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        for j, b in enumerate(q.coeffs):
            out[i + j] += a * b
    return Polynomial(out)
