import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqbellman.davis import (
    DavisBellman, backward_heat_checker, check_infinitesimal, check_main_inequality, check_obstacle_majorization,
    check_properties, davis_U, u_alpha,
)
from sqbellman.lattice import Axis, Lattice3

SMALL = Lattice3(Axis(-3, 3, 41), Axis(0, 3, 41), Axis(-1.5, 1.5, 41))


@pytest.fixture(scope="module", params=[2.0, 3.0, 4.0])
def bell(request):
    return DavisBellman.for_alpha(request.param)


def test_alpha_two_is_the_heat_polynomial():
    b = DavisBellman.for_alpha(2.0)
    P, Q = np.meshgrid(np.linspace(-3, 3, 31), np.linspace(0, 3, 31))
    assert np.allclose(b(P, Q), Q**2 - P**2, atol=1e-12)


def test_value_at_unit_point_is_kappa(bell):
    assert bell(0.0, 1.0) == pytest.approx(bell.kappa, rel=1e-14)
    assert bell(0.0, 0.0) == 0.0


def test_negative_q_rejected(bell):
    with pytest.raises(ValueError):
        davis_U(bell, 0.0, -1.0)


def test_main_inequality_small_lattice(bell):
    assert check_main_inequality(bell, SMALL).passed


def test_negative_control_fails():
    b = DavisBellman.for_alpha(3.0)
    assert not check_main_inequality(b.with_kappa(-b.kappa), SMALL).passed


def test_majorization_and_exterior_identity(bell):
    r = check_obstacle_majorization(bell, SMALL)
    assert r.passed
    assert r.details["exterior_max_abs"] == 0.0


def test_infinitesimal_form(bell):
    assert check_infinitesimal(bell, Axis(-3, 3, 41), Axis(0.25, 3, 31)).passed


def test_structural_properties(bell):
    for r in check_properties(bell, SMALL):
        assert r.passed, r.line()


def test_c1_matching_at_the_free_boundary(bell):
    c, h = bell.c, 1e-6
    inner = (u_alpha(bell, c) - u_alpha(bell, c - h)) / h
    outer = (u_alpha(bell, c + h) - u_alpha(bell, c)) / h
    assert inner == pytest.approx(outer, abs=1e-4)


@given(st.floats(-3, 3), st.floats(0, 3), st.floats(0.05, 4))
@settings(max_examples=100, deadline=None)
def test_homogeneity_and_evenness(p, q, t):
    b = DavisBellman.for_alpha(3.0)
    assert b(t * p, t * q) == pytest.approx(t**3 * b(p, q), rel=1e-10, abs=1e-12)
    assert b(-p, q) == b(p, q)


@given(st.floats(-3, 3), st.floats(0, 3), st.floats(-2, 2))
@settings(max_examples=200, deadline=None)
def test_two_point_inequality(p, q, a):
    b = DavisBellman.for_alpha(3.0)
    r = np.hypot(q, a)
    assert 2 * b(p, q) >= b(p + a, r) + b(p - a, r) - 1e-9
    assert b(p, q) >= b.obstacle(p, q) - 1e-12


def test_backward_heat_checker_predictions():
    b = DavisBellman.for_alpha(3.0)
    px, qx = Axis(-2, 2, 41), Axis(0.3, 2, 18)
    # the interior piece is caloric for the backward heat operator
    inner = backward_heat_checker(b, px, qx, region=lambda P, Q: np.abs(P) < b.c * Q)
    assert inner["prediction"] and inner["backward_heat_equality"]
    # the bare obstacle is not a supersolution for alpha > 2, but is for alpha = 2
    assert not backward_heat_checker(b.obstacle, px, qx)["prediction"]
    assert backward_heat_checker(DavisBellman.for_alpha(2.0).obstacle, px, qx)["prediction"]
    assert backward_heat_checker(lambda P, Q: Q**2 - P**2, px, qx)["prediction"]
