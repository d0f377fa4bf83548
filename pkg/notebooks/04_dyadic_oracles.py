import numpy as np

from sqbellman import DavisBellman
from sqbellman.dyadic import (DyadicTestFunction, haar_decompose, inf_oracle_bollobas, random_test_function,
                              reconstruct, square_function, sup_oracle_davis)

rng = np.random.default_rng(7)
f = random_test_function(rng, depth=4)
print(f.leaves.round(3))

# Haar round trip is exact in rational arithmetic
coeffs = haar_decompose(f, exact=True)
print(np.array_equal(reconstruct(coeffs).leaves, f.leaves))

# square function on each leaf
print(square_function(f).values.round(3))

# Davis inequality on this single function, alpha = 3
bell = DavisBellman.for_alpha(3.0)
lhs = bell.c**3 * np.mean(square_function(f).values ** 3)
rhs = np.mean(np.abs(f.leaves) ** 3)
print(lhs, rhs, lhs <= rhs)

# a constant function has zero square function
print(square_function(DyadicTestFunction(np.full(8, 2.5))).values)

# Dynamic-programming oracles: best values over test functions of bounded depth.
# The sup oracle is a lower bound for U and creeps up slowly with depth.
value, trace = sup_oracle_davis(0.0, 1.0, 8, history=True)
print(np.round(trace, 4), bell(0.0, 1.0))

# The inf oracle is an upper bound for the weak-type Bellman function.
value, trace = inf_oracle_bollobas(0.0, 1.0, 8, history=True)
print(np.round(trace, 4))
