import numpy as np

from sqbellman import DavisBellman, davis_constant
from sqbellman.specfn import SeriesParams, n_alpha

# c_alpha is the smallest positive zero of the even Hermite-type profile N_alpha.
# For alpha = 2 the profile is 1 - x^2, so the zero sits exactly at 1.
for alpha in (2.0, 3.0, 4.0, 6.0):
    k = davis_constant(alpha)
    print(f"alpha={alpha:g}  c={k.c_alpha:.12f}  kappa={k.kappa_alpha:.6f}  residual={k.residual:.1e}")

# alpha = 4 has a closed form
print(np.sqrt(3 - np.sqrt(6)), davis_constant(4.0).c_alpha)

# the profile changes sign at c_3
params = SeriesParams(3.0)
xs = np.linspace(0, 1.2, 7)
print(np.round(n_alpha(params, xs), 4))

# U(p, q) = q^alpha u(|p|/q): interior profile inside |p| < c q, obstacle outside
bell = DavisBellman.for_alpha(3.0)
p = np.linspace(-2, 2, 9)
print(np.round(bell(p, 1.0), 4))
print(np.round(bell.obstacle(p, 1.0), 4))

# U dominates the obstacle and the two touch outside the free boundary
print(np.all(bell(p, 1.0) >= bell.obstacle(p, 1.0) - 1e-12))

# homogeneity of degree alpha
t = 1.7
print(bell(0.3 * t, 0.8 * t), t**3 * bell(0.3, 0.8))
