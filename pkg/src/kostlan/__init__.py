"""Real and complex zeros of Kostlan random polynomials: exact counting,
Kac-Rice densities, near-diagonal multijet densities and Monte Carlo moments."""

__version__ = "0.1.0"

from .kernels import (bargmann_fock_kernel, bergman_deviation, kostlan_kernel,
                      scaled_kostlan_kernel)
from .ensemble import rng_for, sample_complex, sample_real
from .roots import complex_roots, count_real_roots_rp1, isolate_real_roots
from .kacrice import density_k, integrate_density
from .multijet import near_diagonal_density
from .empirics import (complex_equidistribution, deviation_probability, fit_asymptotics,
                       run_moments)
