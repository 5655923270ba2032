"""
Real roots of random Kostlan polynomials
========================================

Sample a few thousand polynomials, count their roots on the projective
line exactly, and look at how the moments of the count grow with degree.
"""

import numpy as np

from kostlan import empirics

# The mean number of real roots is sqrt(d).  A few thousand samples are
# enough to see that to two digits.
reports = []
for d in (16, 64, 256):
    r = empirics.run_moments(d, 2000, kmax=3, seed=1)
    reports.append(r)
    print(f"d={d:4d}  mean={r.mean:7.3f} +- {r.mean_stderr:.3f}   sqrt(d)={np.sqrt(d):7.3f}")

# The variance also grows like sqrt(d), with a smaller constant.
for r in reports:
    print(f"d={r.degree:4d}  Var/sqrt(d) = {r.central_true[1] / np.sqrt(r.degree):.3f}")

# Large deviations of the count from its mean become rarer as d grows.
for r in reports:
    p, se = empirics.deviation_probability(r.degree, r.samples, 0.5, counts=r.counts)
    print(f"d={r.degree:4d}  P(|N - sqrt d| > sqrt(d)/2) = {p:.4f} +- {se:.4f}")
