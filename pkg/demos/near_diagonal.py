"""
Densities on and near the diagonal
==================================

When two points collide the plain Kac-Rice formula degenerates: the
Gram matrix of field values becomes singular.  Replacing the values by
divided differences keeps everything finite, and the pair density goes
to zero linearly in the gap.
"""

import numpy as np

from kostlan import kacrice, multijet
from kostlan.kernels import kostlan_kernel

d = 100
K = kostlan_kernel(d)

for eps in (1e-1, 1e-2, 1e-3, 1e-4, 0.0):
    x = [0.3, 0.3 + eps / np.sqrt(d)]
    r = multijet.near_diagonal_density(K, x, d)
    print(f"gap {eps:7.0e}/sqrt(d)   density {r.value:.6e}")

# Away from the diagonal both routes agree.
x = [0.3, 0.8]
print("multijet   ", multijet.near_diagonal_density(K, x, d).value)
print("closed form", kacrice.density_k(K, x).value)
