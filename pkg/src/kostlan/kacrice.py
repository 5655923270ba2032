"""k-point zero densities off the diagonal, their integrals, and the
set-partition algebra linking factorial and ordinary moments.

Densities are for the unit-variance field in arc-length coordinates, so they
are per unit length^k on RP^1 (total length sqrt(pi)):

    rho_k(x) = E[prod |f'(x_i)| | f(x) = 0] (2 pi)^(-k/2) det(Sigma_values)^(-1/2)
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, prod
from typing import Callable, Optional

import numpy as np

from . import gaussian
from .kernels import TOTAL_LENGTH, KernelOracle, far_diagonal_threshold

NEAR_DIAG_RCOND = 1e-10


class NearDiagonal(ValueError):
    pass


class QuadratureBudgetExceeded(RuntimeError):
    pass


class MissingTerm(KeyError):
    pass


@dataclass
class DensityValue:
    value: float
    stderr: float = 0.0


@dataclass
class Configuration:
    points: np.ndarray
    degree: int

    def __post_init__(self):
        self.points = np.atleast_1d(np.asarray(self.points, dtype=float))
        if self.points.size < 1:
            raise ValueError("need at least one point")


# --------------------------------------------------------------------------
# densities

def joint_covariance(oracle: KernelOracle, x) -> np.ndarray:
    """Covariance of (f(x_1..x_k), f'(x_1..x_k))."""
    x = np.asarray(x, dtype=float)
    X, Y = np.meshgrid(x, x, indexing="ij")
    k = len(x)
    J = np.empty((2 * k, 2 * k))
    J[:k, :k] = oracle.eval(X, Y, 0, 0)
    J[k:, :k] = oracle.eval(X, Y, 1, 0)
    J[:k, k:] = J[k:, :k].T
    J[k:, k:] = oracle.eval(X, Y, 1, 1)
    return 0.5 * (J + J.T)


def density_k(oracle: KernelOracle, points, mc_budget: int = 100_000, rng=None) -> DensityValue:
    """Off-diagonal k-point density rho_k at ``points`` (arc-length)."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    k = len(x)
    J = joint_covariance(oracle, x)
    Svv = J[:k, :k]
    dsq = np.sqrt(np.diag(Svv))
    ev = np.linalg.eigvalsh(Svv / np.outer(dsq, dsq))
    if ev[0] <= NEAR_DIAG_RCOND * ev[-1]:
        raise NearDiagonal("value Gram is near-singular; use the multijet density")
    cond = gaussian.condition_on_zero(J, range(k, 2 * k), range(k))
    num, se = gaussian.abs_moment_product(cond, mc_budget, rng)
    sign, logdet = np.linalg.slogdet(Svv)
    scale = (2 * np.pi) ** (-k / 2) * np.exp(-0.5 * logdet)
    return DensityValue(num * scale, se * scale)


def pair_density_gaps(oracle: KernelOracle, gaps) -> np.ndarray:
    """Vectorized closed-form rho_2(x, x + g) for a stationary kernel."""
    g = np.atleast_1d(np.asarray(gaps, dtype=float))
    z = np.zeros_like(g)
    k00 = oracle.eval(z, z, 0, 0)
    k01 = oracle.eval(z, g, 0, 0)
    # rows: f(0), f(g), f'(0), f'(g)
    J = np.empty(g.shape + (4, 4))
    J[..., 0, 0] = J[..., 1, 1] = k00
    J[..., 0, 1] = J[..., 1, 0] = k01
    d00 = oracle.eval(z, z, 1, 0)
    J[..., 2, 0] = d00
    J[..., 2, 1] = oracle.eval(z, g, 1, 0)
    J[..., 3, 0] = oracle.eval(g, z, 1, 0)
    J[..., 3, 1] = d00
    J[..., 0:2, 2:4] = np.swapaxes(J[..., 2:4, 0:2], -1, -2)
    J[..., 2, 2] = J[..., 3, 3] = oracle.eval(z, z, 1, 1)
    J[..., 2, 3] = J[..., 3, 2] = oracle.eval(z, g, 1, 1)
    Svv = J[..., :2, :2]
    Sdv = J[..., 2:, :2]
    C = J[..., 2:, 2:] - Sdv @ np.linalg.solve(Svv, np.swapaxes(Sdv, -1, -2))
    s11, s22, s12 = C[..., 0, 0], C[..., 1, 1], 0.5 * (C[..., 0, 1] + C[..., 1, 0])
    s1, s2 = np.sqrt(np.clip(s11, 0, None)), np.sqrt(np.clip(s22, 0, None))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.clip(s12 / (s1 * s2), -1.0, 1.0)
    r = np.where(np.isfinite(r), r, 0.0)
    num = 2 / np.pi * s1 * s2 * (np.sqrt(1 - r * r) + r * np.arcsin(r))
    det = Svv[..., 0, 0] * Svv[..., 1, 1] - Svv[..., 0, 1] ** 2
    return num / (2 * np.pi * np.sqrt(det))


def pair_excess_gaps(oracle: KernelOracle, gaps) -> np.ndarray:
    """rho_2(x, x + g) / rho_1^2 - 1 without the cancellation of subtracting.

    With s^2 the conditional derivative variance, r its correlation and r0
    the value correlation,

        rho_2 / rho_1^2 = (s^2 / s0^2) (sqrt(1 - r^2) + r asin r) / sqrt(1 - r0^2)

    and each factor is written as 1 + (small term) computed directly.
    Meant for separated points; near the diagonal use the multijet density.
    """
    g = np.atleast_1d(np.asarray(gaps, dtype=float))
    z = np.zeros_like(g)
    k00 = oracle.eval(z, z, 0, 0)
    s0 = oracle.eval(z, z, 1, 1)
    c = oracle.eval(z, g, 0, 0) / k00           # value correlation
    a = oracle.eval(g, z, 1, 0)                 # cov(f'(g), f(0))
    b = oracle.eval(z, z, 1, 0)                 # cov(f'(0), f(0)), 0 when stationary
    det = k00 * k00 * (1 - c) * (1 + c)
    # Sdv Svv^-1 Sdv^T for Sdv = [[b, -a], [a, b]] (stationary symmetry)
    inv00, inv01 = k00 / det, -c * k00 / det
    d11 = inv00 * (b * b + a * a) + 2 * inv01 * (-a * b)
    d12 = inv00 * (b * a - a * b) + inv01 * (b * b - a * a)
    s2 = s0 - d11
    r = np.clip((oracle.eval(z, g, 1, 1) - d12) / s2, -1.0, 1.0)
    A = -d11 / s0
    B = r * np.arcsin(r) - r * r / (1 + np.sqrt(1 - r * r))
    C = np.expm1(-0.5 * np.log1p(-c * c))
    return A + B + C + A * B + A * C + B * C + A * B * C


# --------------------------------------------------------------------------
# quadrature

def composite_gauss_legendre(a: float, b: float, n: int, panel: int = 16):
    """n-point composite Gauss-Legendre rule on [a, b] (n a multiple of panel
    when n >= panel)."""
    if n < panel:
        panel = n
    npan = max(1, n // panel)
    t, w = np.polynomial.legendre.leggauss(panel)
    edges = np.linspace(a, b, npan + 1)
    h = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + h[:, None] * t[None, :]).ravel()
    ww = (h[:, None] * w[None, :]).ravel()
    return x, ww


@dataclass
class IntegralResult:
    value: float
    tube_radius: float
    tube_volume: float
    tube_contribution: float
    coarse_value: float

    @property
    def richardson_gap(self) -> float:
        return abs(self.value - self.coarse_value)


def integrate_density(oracle: KernelOracle, d: int, k: int, f: Optional[Callable] = None,
                      grid: int = 512, tube: Optional[float] = None,
                      include_tube: bool = True, mc_budget: int = 20_000,
                      seed: int = 0, max_evals: int = 5_000_000) -> IntegralResult:
    """Integral of f * rho_k over (RP^1)^k.

    The diagonal tube {min pairwise distance < tube} is excluded from the
    tensor rule; for k = 2 its contribution is added from the multijet
    density when ``include_tube``.  ``f`` takes k arrays of arc-length
    coordinates (broadcastable) and defaults to 1.
    """
    if k not in (1, 2, 3):
        raise ValueError("analytic integration supports k <= 3")
    if not getattr(oracle, "stationary", False):
        raise ValueError("integration assumes a stationary kernel")
    if tube is None:
        tube = 0.1 * far_diagonal_threshold(d, 1.0)
    fine = _integrate(oracle, d, k, f, grid, tube, include_tube, mc_budget, seed, max_evals)
    coarse = _integrate(oracle, d, k, f, max(grid // 2, 16), tube, include_tube, mc_budget,
                        seed, max_evals)
    return IntegralResult(fine[0], tube, fine[1], fine[2], coarse[0])


def _tube_volume(k: int, tube: float) -> float:
    L = TOTAL_LENGTH
    if k == 1:
        return 0.0
    if k == 2:
        return L * 2 * tube
    # off-tube triples: both orders of the two gaps, area (L - 3 tube)^2 / 2 each
    return L ** 3 - L * max(L - 3 * tube, 0) ** 2


def _integrate(oracle, d, k, f, grid, tube, include_tube, mc_budget, seed, max_evals):
    L = TOTAL_LENGTH
    if f is None:
        f = _one
    x, wx = composite_gauss_legendre(0.0, L, grid)
    if k == 1:
        rho = density_k(oracle, [0.0]).value  # constant by stationarity
        return float(np.sum(wx * f(x)) * rho), 0.0, 0.0
    if k == 2:
        if grid * grid > max_evals:
            raise QuadratureBudgetExceeded(grid * grid)
        g, wg = composite_gauss_legendre(tube, L - tube, grid)
        rho = pair_density_gaps(oracle, g)
        F = f(x[:, None], np.mod(x[:, None] + g[None, :], L))
        val = float(wx @ (F * rho[None, :]) @ wg)
        tube_val = 0.0
        if include_tube and tube > 0:
            from .multijet import near_diagonal_density
            nt = max(16, grid // 16)
            gt, wt = composite_gauss_legendre(0.0, tube, nt, panel=min(16, nt))
            rt = np.array([near_diagonal_density(oracle, [0.0, gi], d=d).value for gi in gt])
            for gg in (gt, L - gt):  # rho_2 depends on the geodesic gap only
                Ft = f(x[:, None], np.mod(x[:, None] + gg[None, :], L))
                tube_val += float(wx @ (Ft * rt[None, :]) @ wt)
        return val + tube_val, _tube_volume(2, tube), tube_val
    # k = 3: ordered gaps a < b on the circle, all pairwise gaps >= tube
    n = max(8, grid)
    if n ** 2 > max_evals:
        raise QuadratureBudgetExceeded(n ** 2)
    a, wa = composite_gauss_legendre(tube, L - 2 * tube, n, panel=min(16, n))
    total = 0.0
    for ai, wai in zip(a, wa):
        b, wb = composite_gauss_legendre(ai + tube, L - tube, n, panel=min(16, n))
        for bi, wbi in zip(b, wb):
            rng = np.random.default_rng(seed)  # common random numbers across nodes
            rho = density_k(oracle, [0.0, ai, bi], mc_budget, rng).value
            F = f(x, np.mod(x + ai, L), np.mod(x + bi, L)) + f(x, np.mod(x + bi, L), np.mod(x + ai, L))
            total += wai * wbi * rho * float(np.sum(wx * F))
    return total, _tube_volume(3, tube), 0.0


def _one(*xs):
    out = np.ones(np.broadcast(*xs).shape)
    return out


# --------------------------------------------------------------------------
# partitions

def set_partitions(k: int) -> list:
    """All set partitions of {0..k-1}, blocks sorted by least element, in a
    canonical (restricted-growth-string) order."""
    if k < 0 or k > 8:
        raise ValueError("k must be in 0..8")
    if k == 0:
        return [[]]
    out = []

    def rec(i, rgs, m):
        if i == k:
            blocks = [[] for _ in range(m)]
            for idx, b in enumerate(rgs):
                blocks[b].append(idx)
            out.append([tuple(b) for b in blocks])
            return
        for b in range(m + 1):
            rec(i + 1, rgs + [b], max(m, b + 1))

    rec(1, [0], 1)
    return out


def falling_factorial(n: int, k: int) -> int:
    return prod(range(n, n - k, -1)) if k > 0 else 1


def stirling2(k: int, j: int) -> int:
    return sum((-1) ** i * comb(j, i) * (j - i) ** k for i in range(j + 1)) // prod(range(1, j + 1)) if j else int(k == 0)


def moment_from_modified(modified: dict, k: int, partition_terms: bool = False):
    """Ordinary k-th moment from modified (distinct-tuple) moments.

    With ``partition_terms`` the dict is keyed by partitions (tuples of
    blocks) and holds E[nu~^m](j_I^* f) for that partition; otherwise it is
    keyed by the block count m and holds E[nu~^m](1), each partition with m
    blocks contributing that value.
    """
    total = 0
    for P in set_partitions(k):
        key = tuple(P) if partition_terms else len(P)
        if key not in modified:
            raise MissingTerm(key)
        total = total + modified[key]
    return total


def partition_identity(n: int, k: int) -> tuple[int, int]:
    """(n^k, sum over partitions of (n)_{#blocks}) in exact integers."""
    return n ** k, sum(falling_factorial(n, len(P)) for P in set_partitions(k))
