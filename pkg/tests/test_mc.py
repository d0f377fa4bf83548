import numpy as np
import pytest

from sqbellman.davis import DavisBellman
from sqbellman.mc import (
    McConfig, check_hitting_time_moments, hitting_time_moments, jensen_gap_check, simulate_paths_T,
    simulate_T_a, stats_to_csv, supermartingale_check,
)

U3 = DavisBellman.for_alpha(3.0)


def cfg(**kw):
    base = dict(n_paths=2000, dt=1e-3, seed=11, a_values=(0.3, 0.5), n_boot=50)
    base.update(kw)
    return McConfig(**base)


def test_seed_determinism_is_bit_identical():
    a = simulate_T_a(cfg(), 3.0)
    b = simulate_T_a(cfg(), 3.0)
    assert [s.to_row() for s in a] == [s.to_row() for s in b]
    c = simulate_T_a(cfg(seed=12), 3.0)
    assert a[0].ratio != c[0].ratio


def test_paths_do_not_depend_on_batching():
    _, T, W = simulate_paths_T(cfg(n_paths=40))
    _, T2, W2 = simulate_paths_T(cfg(n_paths=40), first_path=25, n=15)
    assert np.array_equal(T[25:], T2) and np.array_equal(W[25:], W2)


def test_boundary_identity_and_trivial_bound():
    for s in simulate_T_a(cfg(n_paths=2000, dt=1e-5), 3.0):
        assert s.censored == 0 and not s.inconclusive
        # |W(T_a)| = a sqrt(T_a + 1) up to the overshoot of one step
        assert s.ratio == pytest.approx(s.ratio_boundary, rel=0.05)
        assert s.ratio > s.a**3


def test_censoring_is_reported():
    s = simulate_T_a(cfg(n_paths=50, t_max=0.01, a_values=(0.5,)), 3.0)[0]
    assert s.censored == 50 and s.inconclusive


def test_csv_rows():
    text = stats_to_csv(simulate_T_a(cfg(n_paths=100), 3.0))
    lines = text.strip().splitlines()
    assert lines[0].startswith("a,alpha,n_paths,censored") and len(lines) == 3


def test_invalid_inputs():
    with pytest.raises(ValueError):
        hitting_time_moments(0.0, cfg())
    with pytest.raises(ValueError):
        simulate_T_a(cfg(a_values=(-0.1,)), 3.0)
    with pytest.raises(ValueError):
        McConfig(n_paths=0)


def test_hitting_time_facts():
    for r in check_hitting_time_moments(0.5, cfg(n_paths=4000, dt=1e-4)):
        assert r.passed, r.line()


def test_supermartingale_and_negative_control():
    c = cfg(n_paths=20000)
    r = supermartingale_check(U3, c, checkpoints=(0.0, 0.25, 0.5, 1.0, 2.0))
    assert r.passed and r.details["means"][0] == 0.0
    assert not supermartingale_check(lambda p, q: -U3(p, q), c).passed
    assert supermartingale_check(lambda p, q: -U3(p, q), c, increasing=True).passed


def test_jensen_chain():
    c = cfg(n_paths=4000, dt=1e-4)
    assert jensen_gap_check(U3, 0.0, 1.0, 0.5, c).passed
    zero = jensen_gap_check(U3, 0.0, 1.0, 0.0, c)
    assert zero.worst_violation == 0.0
    lin = jensen_gap_check(lambda p, q: 2.0 * p + 0.0 * q, 0.3, 1.0, 0.5, c)
    d = lin.details
    assert abs(d["E V(p+W(tau), sqrt(q^2+tau))"] - d["V(p,q)"]) <= 3 * d["se"]
