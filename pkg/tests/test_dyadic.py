import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sqbellman.bollobas import bollobas_B
from sqbellman.davis import DavisBellman
from sqbellman.dyadic import (
    DyadicTestFunction, MAX_ORACLE_DEPTH, check_bellman_induction, empirical_inequality_suite, haar_decompose,
    inf_oracle_bollobas, negative_control_U, rademacher_test_function, random_batch, random_test_function,
    reconstruct, square_function, sup_oracle_davis,
)

leaves_st = st.integers(0, 6).flatmap(
    lambda d: arrays(np.float64, 2**d, elements=st.floats(-100, 100, allow_subnormal=False))
)


@given(leaves_st)
@settings(max_examples=80, deadline=None)
def test_exact_haar_round_trip_is_bit_identical(leaves):
    f = DyadicTestFunction(leaves)
    assert np.array_equal(reconstruct(haar_decompose(f, exact=True)).leaves, f.leaves)


@given(leaves_st)
@settings(max_examples=80, deadline=None)
def test_float_haar_round_trip(leaves):
    f = DyadicTestFunction(leaves)
    assert np.allclose(reconstruct(haar_decompose(f)).leaves, f.leaves, atol=1e-12, rtol=0)


@given(leaves_st, st.floats(-10, 10), st.floats(-10, 10))
@settings(max_examples=80, deadline=None)
def test_square_function_scaling(leaves, t, c):
    f = DyadicTestFunction(leaves)
    S = square_function(f).values
    assert np.allclose(square_function(DyadicTestFunction(t * leaves)).values, abs(t) * S, rtol=1e-9, atol=1e-9)
    assert np.allclose(square_function(DyadicTestFunction(leaves + c)).values, S, rtol=1e-9, atol=1e-9)


@given(st.integers(1, 5), st.integers(0, 31), st.floats(-3, 3), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_square_function_pythagoras(depth, node, d, seed):
    g = random_test_function(np.random.default_rng(seed), depth)
    level = node % depth
    j = node % (2**level)
    width = 2 ** (depth - level)
    atom = np.zeros(2**depth)
    atom[j * width: j * width + width // 2] = d
    atom[j * width + width // 2: (j + 1) * width] = -d
    f = DyadicTestFunction(g.leaves + atom)
    gap = square_function(f).values ** 2 - square_function(g).values ** 2
    dg = haar_decompose(g).diffs[level][j]
    expect = np.zeros(2**depth)
    expect[j * width:(j + 1) * width] = (dg + d) ** 2 - dg**2
    assert np.allclose(gap, expect, atol=1e-9)


def test_rademacher_sum():
    f = rademacher_test_function([1.0, 0.5])
    assert np.allclose(f.leaves, [1.5, 0.5, -0.5, -1.5])
    assert np.allclose(square_function(f).values, np.sqrt(1.25))


def test_bad_leaf_counts_and_text_round_trip():
    with pytest.raises(ValueError):
        DyadicTestFunction(np.zeros(3))
    f = DyadicTestFunction([0.1, -2.5, 3.0, 1e-300])
    assert np.array_equal(DyadicTestFunction.from_text(f.to_text()).leaves, f.leaves)


def test_bellman_induction_and_negative_control():
    bell = DavisBellman.for_alpha(3.0)
    batch = random_batch(np.random.default_rng(1), 200, 8)
    for q in (0.0, 0.5, 1.0):
        assert check_bellman_induction(bell, batch, q).passed
    assert not check_bellman_induction(negative_control_U, batch, 1.0).passed
    with pytest.raises(ValueError):
        check_bellman_induction(bell, batch, -1.0)


def test_empirical_suite_small():
    d, w = empirical_inequality_suite(3.0, n_samples=500, depth=8, seed=3)
    assert d.passed and d.details["violations"] == 0
    assert w.passed


def test_oracle_trivial_cases():
    b = DavisBellman.for_alpha(3.0)
    assert sup_oracle_davis(0.3, 1.0, 0) == pytest.approx(b.obstacle(0.3, 1.0), abs=1e-12)
    assert inf_oracle_bollobas(-0.4, 0.0, 5) == 0.4
    assert inf_oracle_bollobas(1.5, 1.0, 1) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        sup_oracle_davis(0.0, 1.0, MAX_ORACLE_DEPTH + 1)


def test_oracles_monotone_in_depth_and_bounded():
    v, trace = sup_oracle_davis(0.0, 1.0, 4, history=True)
    assert np.all(np.diff(trace) >= -1e-12)
    assert v <= DavisBellman.for_alpha(3.0)(0.0, 1.0) + 1e-2
    w, trace = inf_oracle_bollobas(0.0, 1.0, 4, history=True)
    assert np.all(np.diff(trace) <= 1e-12)
    assert w >= bollobas_B(0.0, 1.0) - 1e-9
