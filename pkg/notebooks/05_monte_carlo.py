import numpy as np

from sqbellman import DavisBellman, davis_constant
from sqbellman import mc

# Brownian walks on a time lattice. Every path has its own counter-based
# generator, so results do not depend on how paths are batched.
config = mc.McConfig(n_paths=20000, dt=1e-4, t_max=20.0, seed=1)

# exit from (-a, a): P(W = +a) = 1/2 and E[tau | side] = a^2 up to an
# overshoot shift of about 0.58 sqrt(dt)
m = mc.hitting_time_moments(0.5, config)
print(m["p_plus"], m["e_tau_given_plus"], m["target"], m["shifted_target"])
for r in mc.check_hitting_time_moments(0.5, config):
    print(r.line())

# U(W_t, sqrt(q^2 + t)) decreases in expectation
bell = DavisBellman.for_alpha(3.0)
print(mc.supermartingale_check(bell, config).line())

# Jensen chain at the exit time of (-a, a)
print(mc.jensen_gap_check(bell, 0.0, 1.0, 0.5, config).line())

# E|W_T|^3 / E T^{3/2} for T = inf{t : |W_t| >= a sqrt(t + 1)}
c = davis_constant(3.0).c_alpha
config.a_values = (0.5 * c, 0.7 * c, 0.9 * c)
config.t_max = 50.0
config.n_paths = 5000
for s in mc.simulate_T_a(config, 3.0):
    print(f"a={s.a:.4f}  ratio/c^3={s.ratio / c**3:.3f}  censored={s.censored}")
