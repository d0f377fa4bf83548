import io

import numpy as np
import pytest

from sqbellman.bollobas import BollobasBellman
from sqbellman.davis import DavisBellman
from sqbellman.envelope import (
    Direction, Extension, Grid2D, ObstacleSpec, bellman_step, compare_to_closed_form, default_a_set,
    default_extension, reduced_solve_1d, solve_greatest_subsolution, solve_heat_envelope,
)
from sqbellman.lattice import Axis
from sqbellman.specfn import davis_constant

P_AX, Q_AX = Axis(-3, 3, 101), Axis(0, 3, 101)


def davis_window(P, Q):
    return (np.abs(P) <= 2) & (Q >= 0.25) & (Q <= 2)


@pytest.fixture(scope="module")
def davis_solution():
    return solve_heat_envelope(ObstacleSpec.davis_power(3.0), P_AX, Q_AX)


def test_zero_obstacle_converges_at_once():
    zero = ObstacleSpec.from_function(lambda p, q: np.zeros_like(p), Direction.SUP, "Zero")
    grid, rep = solve_heat_envelope(zero, Axis(-1, 1, 21), Axis(0, 1, 21), method="value")
    assert rep.iterations == 1 and rep.converged
    assert np.all(grid.values == 0)


def test_default_extension_choice():
    assert default_extension(ObstacleSpec.davis_power(3.0), P_AX, Q_AX) is Extension.HOMOGENEOUS
    assert default_extension(ObstacleSpec.bollobas_q(2.0), P_AX, Q_AX) is Extension.BY_OBSTACLE


def test_davis_envelope_coarse(davis_solution):
    grid, rep = davis_solution
    assert rep.converged and rep.monotone and not rep.diverged
    assert rep.fixed_point_residual < 1e-7
    cmp = compare_to_closed_form(grid, DavisBellman.for_alpha(3.0), davis_window)
    assert cmp["max_rel"] <= 2e-2


def test_obstacle_sandwich(davis_solution):
    grid, _ = davis_solution
    P, Q = grid.mesh()
    assert np.all(grid.values >= grid.obstacle(P, Q) - 1e-12)


def test_bilinear_operator_is_monotone():
    # with bilinear reads only (no top-row closure) the raw operator is order preserving
    obst = ObstacleSpec.davis_power(3.0)
    g = Grid2D.from_obstacle(obst, Axis(-3, 3, 41), Axis(0, 3, 41), Extension.BY_OBSTACLE)
    a = default_a_set(g.x_axis, 24)
    for _ in range(5):
        nxt = bellman_step(g, obst, a)
        assert np.all(nxt.values >= g.values - 1e-12)
        g = nxt


def test_solver_iterates_are_monotone():
    obst = ObstacleSpec.davis_power(3.0)
    _, rep = solve_heat_envelope(obst, Axis(-3, 3, 41), Axis(0, 3, 41))
    assert rep.monotone and rep.worst_monotone_step >= -1e-12
    assert rep.converged and rep.fixed_point_residual < 1e-7
    # plain value iteration is slow to converge but its iterates never move down
    _, rep = solve_heat_envelope(obst, Axis(-3, 3, 41), Axis(0, 3, 41), method="value", max_iters=40)
    assert rep.monotone and rep.worst_monotone_step >= 0.0


def test_richer_a_set_weakly_increases():
    obst = ObstacleSpec.davis_power(3.0)
    ax, qx = Axis(-3, 3, 41), Axis(0, 3, 41)
    a = default_a_set(ax, 32)
    g1, _ = solve_heat_envelope(obst, ax, qx, a_set=a[::2])
    g2, _ = solve_heat_envelope(obst, ax, qx, a_set=a)
    assert np.all(g2.values >= g1.values - 1e-9)


def test_inflated_constant_diverges():
    obst = ObstacleSpec.davis_power(3.0, 1.05 * davis_constant(3.0).c_alpha)
    _, rep = solve_heat_envelope(obst, P_AX, Q_AX, watch=(0.0, 1.0))
    assert rep.diverged and rep.cap_hit_location is not None


def test_bollobas_subsolution_coarse():
    grid, rep = solve_greatest_subsolution(ObstacleSpec.bollobas_range(), Axis(-2, 2, 101), Axis(0, 2, 101))
    assert rep.converged and rep.monotone
    cmp = compare_to_closed_form(grid, BollobasBellman(), lambda x, l: (x * x <= 0.8 * l) & (l >= 0.25))
    assert cmp["max_rel"] <= 2e-2
    X, L = grid.mesh()
    assert np.all(grid.values <= np.where(X * X >= L, np.abs(X), np.inf) + 1e-12)


def test_compare_trivial_cases():
    grid = Grid2D.from_obstacle(ObstacleSpec.davis_power(3.0), Axis(-1, 1, 11), Axis(0, 1, 11))
    same = compare_to_closed_form(grid, grid.obstacle)
    assert same["max_abs"] == 0.0
    shifted = compare_to_closed_form(grid, lambda p, q: grid.obstacle(p, q) + 1.0)
    assert shifted["max_abs"] == pytest.approx(1.0)


def test_grid_dump_round_trip(davis_solution):
    grid, _ = davis_solution
    buf = io.StringIO()
    text = grid.dump(buf)
    assert text.startswith("# axes: p[") and "direction=least_supersolution" in text.splitlines()[0]
    back = Grid2D.load(io.StringIO(text))
    assert np.array_equal(back.values, grid.values)
    assert back.x_axis == grid.x_axis and back.y_axis == grid.y_axis
    with pytest.raises(ValueError):
        Grid2D.load(io.StringIO("garbage\n1 2\n"))


def test_reduced_profiles():
    prof, rep = reduced_solve_1d(ObstacleSpec.bollobas_range(), Axis(-1.5, 1.5, 401))
    assert rep.converged and rep.monotone
    s = np.linspace(-0.89, 0.89, 41)
    assert np.max(np.abs(prof(s) - BollobasBellman().reduced(s))) < 5e-3
    prof, rep = reduced_solve_1d(ObstacleSpec.davis_power(3.0), Axis(-3, 3, 401))
    assert rep.converged
    assert prof(0.0) == pytest.approx(DavisBellman.for_alpha(3.0).kappa, abs=0.1)
    with pytest.raises(ValueError):
        reduced_solve_1d(ObstacleSpec.bollobas_q(2.0), Axis(-1, 1, 11))
