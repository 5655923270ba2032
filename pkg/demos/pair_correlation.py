"""
Two-point correlation of real zeros
===================================

The density of pairs of zeros at distance s, normalized by the square of
the one-point density.  Zeros repel at short range, the ratio overshoots
1 slightly at intermediate range and then decays to 1 extremely fast.
"""

import numpy as np

from kostlan import kacrice
from kostlan.kernels import kostlan_kernel

d = 100
K = kostlan_kernel(d)
rho1 = kacrice.density_k(K, [0.0]).value
print(f"one-point density {rho1:.6f}   sqrt(d/pi) = {np.sqrt(d / np.pi):.6f}")

# distances in units of the correlation length 1/sqrt(d)
scaled = np.array([0.05, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0])
excess = kacrice.pair_excess_gaps(K, scaled / np.sqrt(d))
for s, e in zip(scaled, excess):
    rho2 = kacrice.density_k(K, [0.0, s / np.sqrt(d)]).value
    print(f"s*sqrt(d)={s:4.2f}   rho2/rho1^2 = {rho2 / rho1**2:.6f}   excess {e:+.3e}")

# Past the log(d)/sqrt(d) scale the excess is far below double rounding of
# the ratio itself, which is why it is computed without subtraction.
