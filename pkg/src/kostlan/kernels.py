"""Covariance kernels and Fubini-Study geometry on RP^1.

Coordinates
-----------
angle      theta in [0, pi), affine chart t = tan(theta)
arc-length u = theta / sqrt(pi), so RP^1 has total length sqrt(pi)

All kernels here are stationary, K(x, y) = g(x - y), and are described by
the profile ``g`` and its derivatives of any order.  Mixed partials follow
from  d_x^a d_y^b K(x, y) = (-1)^b g^(a+b)(x - y).
"""
from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermeval

SQRT_PI = float(np.sqrt(np.pi))
TOTAL_LENGTH = SQRT_PI
DEFAULT_MAX_ORDER = 32


class DegreeTooLargeForOrder(ValueError):
    pass


class ChartOverflow(ValueError):
    pass


# --------------------------------------------------------------------------
# geometry

def arc_to_angle(u):
    return np.asarray(u) * SQRT_PI


def angle_to_arc(theta):
    return np.asarray(theta) / SQRT_PI


def affine_to_arc(t):
    """Arc-length coordinate in [0, sqrt(pi)) of the affine point t."""
    theta = np.mod(np.arctan(np.asarray(t, dtype=float)), np.pi)
    return theta / SQRT_PI


def arc_to_affine(u):
    return np.tan(arc_to_angle(u))


def wrap_arc(u):
    return np.mod(u, TOTAL_LENGTH)


def geodesic_distance(x, y):
    """Distance on RP^1 in the length-sqrt(pi) metric."""
    g = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), TOTAL_LENGTH)
    return np.minimum(g, TOTAL_LENGTH - g)


def far_diagonal_threshold(d: int, cprime: float = 1.0) -> float:
    """log d / (c' sqrt d), the far-from-diagonal cutoff."""
    if cprime <= 0:
        raise ValueError("cprime must be positive")
    return float(np.log(d) / (cprime * np.sqrt(d)))


# --------------------------------------------------------------------------
# oracles

class KernelOracle:
    """Stationary kernel K(x, y) = g(x - y) with derivatives of any order.

    ``profile(s, n)`` returns g^(n)(s); ``s`` may be complex, which the
    contour form of divided differences relies on.
    """

    stationary = True

    def __init__(self, profile: Callable, max_order: int, description: str,
                 length_scale: float, degree: int | None = None):
        self._profile = profile
        self.degree = degree
        self.max_order = int(max_order)
        self.description = description
        # correlation length, used to pick divided-difference contours
        self.length_scale = float(length_scale)

    def profile(self, s, n: int = 0):
        if n > 2 * self.max_order:
            raise DegreeTooLargeForOrder(f"order {n} above oracle limit")
        return self._profile(s, n)

    def eval(self, x, y, a: int = 0, b: int = 0):
        if a > self.max_order or b > self.max_order:
            raise DegreeTooLargeForOrder(f"order ({a},{b}) above {self.max_order}")
        s = np.asarray(x) - np.asarray(y)
        v = self._profile(s, a + b)
        return -v if b % 2 else v

    __call__ = eval

    def __repr__(self):
        return f"KernelOracle({self.description})"


def _cos_power_coeffs(d: int, n: int) -> np.ndarray:
    """Coefficients A[j] with (d/dtheta)^n cos^d = sum_j A[j] cos^(d-j) sin^j."""
    A = np.zeros(min(n, d) + 1)
    A[0] = 1.0
    for _ in range(n):
        B = np.zeros_like(A)
        for j in range(len(A)):
            if A[j] == 0.0:
                continue
            if j + 1 < len(A) and d - j > 0:
                B[j + 1] -= (d - j) * A[j]
            if j > 0:
                B[j - 1] += j * A[j]
        A = B
    return A


def _cos_power_profile(d: int, omega: float, scale: float, max_order: int):
    cache: dict[int, np.ndarray] = {}
    # largest coefficient must stay well inside double range
    for n in range(0, 2 * max_order + 1):
        A = _cos_power_coeffs(d, n)
        if not np.all(np.isfinite(A)) or np.max(np.abs(A)) * omega ** n > 1e280:
            raise DegreeTooLargeForOrder(f"d={d} overflows at derivative order {n}")
        cache[n] = A

    def profile(s, n=0):
        A = cache[n]
        th = omega * np.asarray(s)
        c, sn = np.cos(th), np.sin(th)
        out = np.zeros(np.shape(th), dtype=np.result_type(th, float))
        for j, aj in enumerate(A):
            if aj == 0.0:
                continue
            out = out + aj * c ** (d - j) * sn ** j
        return scale * omega ** n * out

    return profile


def kostlan_kernel(d: int, max_order: int = DEFAULT_MAX_ORDER) -> KernelOracle:
    """Correlation of the unit-variance Kostlan field in arc-length coordinates.

    K(u, v) = cos^d(sqrt(pi) (u - v)).  Coordinates are used as given (no
    wrap), which keeps every Gram matrix a genuine covariance for odd d.
    """
    if d < 1:
        raise ValueError("degree must be >= 1")
    prof = _cos_power_profile(d, SQRT_PI, 1.0, max_order)
    return KernelOracle(prof, max_order, f"kostlan(d={d})", 1.0 / np.sqrt(np.pi * d), d)


def bargmann_fock_kernel(max_order: int = DEFAULT_MAX_ORDER) -> KernelOracle:
    """(1/pi) exp(-(Z-W)^2/2), derivatives through Hermite polynomials."""

    def profile(s, n=0):
        s = np.asarray(s)
        c = np.zeros(n + 1)
        c[n] = 1.0
        return (-1) ** n * hermeval(s, c) * np.exp(-s * s / 2) / np.pi

    return KernelOracle(profile, max_order, "bargmann-fock", 1.0)


def scaled_kostlan_kernel(d: int, max_order: int = DEFAULT_MAX_ORDER) -> KernelOracle:
    """(1/pi) cos^d((Z - W)/sqrt d): the Kostlan kernel in sqrt(d)-rescaled
    angle normal coordinates, on the same footing as the Bargmann-Fock kernel."""
    prof = _cos_power_profile(d, 1.0 / np.sqrt(d), 1.0 / np.pi, max_order)
    return KernelOracle(prof, max_order, f"scaled-kostlan(d={d})", 1.0, d)


def scaled_kernel(d: int, Z, W, base_point: float = 0.0):
    """Scaled Kostlan kernel at (Z, W); the ensemble is rotation invariant so
    the base point only fixes the chart and does not change the value."""
    if d < 4:
        raise ValueError("scaled kernel needs d >= 4")
    lim = np.pi * np.sqrt(d) / 2
    Z, W = np.asarray(Z, dtype=float), np.asarray(W, dtype=float)
    if np.any(np.abs(Z) > lim) or np.any(np.abs(W) > lim):
        raise ChartOverflow("point outside the normal-coordinate chart")
    return np.cos((Z - W) / np.sqrt(d)) ** d / np.pi


def bergman_deviation(d: int, radius: float, grid: int, orders=(0,)):
    """sup over a grid x grid mesh of [-R, R]^2 of |d_Z^m (K_d - K_C)|.

    Returns a float for the default ``orders=(0,)`` and a dict keyed by the
    derivative order otherwise.
    """
    if radius > np.log(d) + 1e-12:
        raise ValueError("radius must be <= log d")
    z = np.linspace(-radius, radius, grid) if grid > 1 else np.zeros(1)
    Z, W = np.meshgrid(z, z, indexing="ij")
    kd = scaled_kostlan_kernel(d, max(max(orders), 1))
    kc = bargmann_fock_kernel(max(max(orders), 1))
    out = {m: float(np.max(np.abs(kd.eval(Z, W, m, 0) - kc.eval(Z, W, m, 0)))) for m in orders}
    return out[0] if tuple(orders) == (0,) else out
