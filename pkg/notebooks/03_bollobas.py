import numpy as np

from sqbellman import bollobas_B, psi, weak_type_constant
from sqbellman.bollobas import CASE3_QUARTIC, sturm_root_count

# Psi(t) = t Phi(t) + exp(-t^2/2), with Phi the Gaussian-kernel integral from 0.
# Psi(1) is the sharp weak-type constant.
psi1 = weak_type_constant()
print(psi1)
print(np.round(psi(np.array([0.0, 0.5, 1.0, 2.0])), 6))

# B(x, lam) = sqrt(lam) Psi(|x|/sqrt(lam)) / Psi(1) on x^2 <= lam, and |x| beyond
x = np.linspace(-2, 2, 9)
print(np.round(bollobas_B(x, 1.0), 5))
print(bollobas_B(0.0, 1.0) * psi1)

# B sits above |x| on the whole domain
lam = np.linspace(0.1, 3, 30)
X, L = np.meshgrid(x, lam)
print(np.all(bollobas_B(X, L) >= np.abs(X) - 1e-12))

# the quartic from the third case of the concavity argument has no root in (0, 1)
print(sturm_root_count(CASE3_QUARTIC, (0, 1)))
