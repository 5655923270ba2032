"""Compiled kernels: Aberth-Ehrlich iteration on CP^1 and a rigorous
root-inclusion certificate for real polynomials.

Both work in two charts: a root estimate z with |z| <= 1 is handled through
p itself, one with |z| > 1 through the reversed polynomial q(w) = w^d p(1/w)
at w = 1/z.  This keeps Horner evaluation well scaled on the whole sphere.
"""
import numpy as np
from numba import njit

EPS = 2.0 ** -53


@njit(cache=True)
def _horner2(c, z):
    """p(z), p'(z) for ascending coefficients ``c``."""
    n = c.shape[0]
    p = c[n - 1] + 0j
    dp = 0j
    for k in range(n - 2, -1, -1):
        dp = dp * z + p
        p = p * z + c[k]
    return p, dp


@njit(cache=True)
def _horner2_rev(c, w):
    """q(w), q'(w) for q(w) = sum_k c[k] w^(d-k)."""
    n = c.shape[0]
    q = c[0] + 0j
    dq = 0j
    for k in range(1, n):
        dq = dq * w + q
        q = q * w + c[k]
    return q, dq


@njit(cache=True)
def _abs_horner2(c, r, rev):
    """sum |c_k| r^k and sum k |c_k| r^(k-1) (reversed order if rev)."""
    n = c.shape[0]
    s = 0.0
    ds = 0.0
    if rev:
        s = abs(c[0])
        for k in range(1, n):
            ds = ds * r + s
            s = s * r + abs(c[k])
    else:
        s = abs(c[n - 1])
        for k in range(n - 2, -1, -1):
            ds = ds * r + s
            s = s * r + abs(c[k])
    return s, ds


@njit(cache=True)
def _newton_ratio(c, z):
    """p(z)/p'(z), evaluated in the chart matching |z|."""
    d = c.shape[0] - 1
    if abs(z) <= 1.0:
        p, dp = _horner2(c, z)
        if dp == 0:
            return 0j if p == 0 else 1e300 + 0j
        return p / dp
    w = 1.0 / z
    q, dq = _horner2_rev(c, w)
    if q == 0:
        return 0j
    # p'/p = d/z - w^2 q'/q
    lg = d * w - w * w * dq / q
    if lg == 0:
        return 1e300 + 0j
    return 1.0 / lg


@njit(cache=True)
def initial_guesses(d, offset):
    """Points spread evenly over the Riemann sphere (spiral), mapped to C."""
    z = np.empty(d, np.complex128)
    for i in range(d):
        h = -1.0 + (2.0 * i + 1.0) / d
        r = np.sqrt((1.0 + h) / (1.0 - h))
        ang = 2.399963229728653 * i + offset
        z[i] = r * (np.cos(ang) + 1j * np.sin(ang))
    return z


@njit(cache=True)
def aberth(c, z, maxit):
    """Simultaneous Aberth-Ehrlich iteration; returns (roots, sweeps, ok)."""
    d = z.shape[0]
    done = np.zeros(d, np.bool_)
    prev = np.full(d, np.inf)
    for it in range(maxit):
        nconv = 0
        for i in range(d):
            if done[i]:
                nconv += 1
                continue
            zi = z[i]
            ni = _newton_ratio(c, zi)
            s = 0j
            for j in range(d):
                if j != i:
                    s += 1.0 / (zi - z[j])
            corr = ni / (1.0 - ni * s)
            z[i] = zi - corr
            a = abs(corr)
            # converged, or stalled at rounding level
            if a <= 4.0 * EPS * abs(z[i]) or (a < 1e-10 * abs(z[i]) and a > 0.5 * prev[i]):
                done[i] = True
            if not np.isfinite(z[i].real) or not np.isfinite(z[i].imag):
                return z, it, False
            prev[i] = a
        if nconv == d:
            return z, it, True
    ok = True
    for i in range(d):
        if not done[i]:
            ok = False
    return z, maxit, ok


@njit(cache=True)
def _inclusion_disk(c, z):
    """Rigorous disk (center, radius) in the z-plane containing a root of p.

    Uses |z - root| <= d |p(z)/p'(z)| with Horner rounding bounds on both
    values; radius < 0 signals failure.
    """
    d = c.shape[0] - 1
    slack = 10.0 * (d + 2) * EPS
    if abs(z) <= 1.0:
        p, dp = _horner2(c, z)
        s, ds = _abs_horner2(c, abs(z), False)
        e0 = slack * s
        e1 = slack * ds
        den = abs(dp) - e1
        if den <= e1:
            return z, -1.0
        r = d * (abs(p) + e0) / den * (1.0 + 1e-12)
        return z, r
    w = 1.0 / z
    q, dq = _horner2_rev(c, w)
    s, ds = _abs_horner2(c, abs(w), True)
    e0 = slack * s
    e1 = slack * ds
    den = abs(dq) - e1
    if den <= e1:
        return z, -1.0
    r = d * (abs(q) + e0) / den * (1.0 + 1e-12)
    aw2 = abs(w) ** 2
    if r * r >= 0.25 * aw2:
        return z, -1.0
    g = aw2 - r * r
    cen = np.conj(w) / g
    rad = r / g * (1.0 + 1e-12) + 8.0 * EPS * abs(cen)
    return cen, rad


@njit(cache=True)
def certify_disks(c, z):
    """Rigorous inclusion disks around the approximate roots ``z`` of the
    real polynomial ``c``.

    Each root estimate gets a disk; disks that meet the real axis are replaced
    by a conjugation-symmetric disk containing them.  If all d disks are
    pairwise disjoint each holds exactly one root, the root in a symmetric
    disk equals its own conjugate and is therefore real, and the real count is
    exact.  Returns (nreal, centers, radii, is_real); nreal = -1 when the
    certificate cannot be closed.
    """
    d = z.shape[0]
    cen = np.empty(d, np.complex128)
    rad = np.empty(d)
    isreal = np.zeros(d, np.bool_)
    nreal = 0
    for i in range(d):
        ci, ri = _inclusion_disk(c, z[i])
        if ri < 0 or not np.isfinite(ri):
            return -1, cen, rad, isreal
        if abs(ci.imag) <= ri:
            ri = ri + abs(ci.imag)
            ci = ci.real + 0j
            nreal += 1
            isreal[i] = True
        cen[i] = ci
        rad[i] = ri
    for i in range(d):
        for j in range(i + 1, d):
            if abs(cen[i] - cen[j]) * (1.0 - 4.0 * EPS) <= rad[i] + rad[j]:
                return -1, cen, rad, isreal
    return nreal, cen, rad, isreal


@njit(cache=True)
def count_real_fast(c, maxit):
    """Aberth from the spiral start, then certify; -1 if either step fails."""
    d = c.shape[0] - 1
    cc = c.astype(np.complex128)
    z = initial_guesses(d, 0.3)
    z, its, ok = aberth(cc, z, maxit)
    if not ok:
        return -1
    n, cen, rad, isreal = certify_disks(cc, z)
    return n
