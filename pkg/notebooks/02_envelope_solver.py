import numpy as np

from sqbellman import DavisBellman, ObstacleSpec, davis_constant, solve_heat_envelope
from sqbellman.envelope import compare_to_closed_form, default_a_set
from sqbellman.lattice import Axis

# The Bellman function is the least supersolution above the obstacle
# c^alpha q^alpha - |p|^alpha. We solve for it on a coarse lattice and compare
# against the closed form. The acceptance suite uses 401 points per axis.
alpha = 3.0
c = davis_constant(alpha).c_alpha
p_axis, q_axis = Axis(-3.0, 3.0, 121), Axis(0.0, 3.0, 121)
obstacle = ObstacleSpec.davis_power(alpha, c)
grid, report = solve_heat_envelope(obstacle, p_axis, q_axis, a_set=default_a_set(p_axis, 32))
print(report.method, report.iterations, report.converged, report.fixed_point_residual)

bell = DavisBellman.for_alpha(alpha)
window = lambda P, Q: (np.abs(P) <= 2.0) & (Q >= 0.25) & (Q <= 2.0)
cmp = compare_to_closed_form(grid, bell, window)
print(cmp["max_abs"], cmp["max_rel"])
print(grid.sample(0.0, 1.0), bell(0.0, 1.0))

# Inflating the constant breaks finiteness: the iteration runs off to the cap.
p_axis, q_axis = Axis(-3.0, 3.0, 81), Axis(0.0, 3.0, 81)
inflated = ObstacleSpec.davis_power(alpha, 1.05 * c)
_, bad = solve_heat_envelope(inflated, p_axis, q_axis, a_set=default_a_set(p_axis, 32), watch=(0.0, 1.0))
print(bad.diverged, bad.iterations, bad.cap_hit_location)
