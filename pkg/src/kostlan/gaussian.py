"""Small dense Gaussian linear algebra.

Covariance factorization with an eigen fallback for singular input,
conditioning on a zero block, and E[prod |zeta_i|] for centered Gaussian
vectors (closed forms in dimensions 1 and 2, Monte Carlo above).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYM_TOL = 1e-12
PSD_TOL = 1e-10
COND_TOL = 1e-12
ROUNDOFF_VAR = 1e-13


class NotSymmetric(ValueError):
    pass


class NotPSD(ValueError):
    pass


class SingularConditioning(np.linalg.LinAlgError):
    pass


def check_cov(cov) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise NotSymmetric("covariance must be square")
    scale = max(np.max(np.abs(cov)), 1e-300)
    if np.max(np.abs(cov - cov.T)) > SYM_TOL * scale:
        raise NotSymmetric("covariance not symmetric")
    cov = 0.5 * (cov + cov.T)
    ev = np.linalg.eigvalsh(cov)
    if ev[0] < -PSD_TOL * max(ev[-1], 0.0) and ev[0] < -1e-300:
        raise NotPSD(f"smallest eigenvalue {ev[0]:.3e} vs largest {ev[-1]:.3e}")
    return cov


@dataclass
class GaussianFactor:
    dim: int
    lower: np.ndarray
    logdet: float
    method: str


def factor(cov) -> GaussianFactor:
    """Cholesky factor, or a symmetric square root when cov is singular."""
    cov = check_cov(cov)
    n = cov.shape[0]
    try:
        L = np.linalg.cholesky(cov)
        return GaussianFactor(n, L, float(2 * np.sum(np.log(np.diag(L)))), "cholesky")
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(cov)
        w = np.clip(w, 0.0, None)
        L = V * np.sqrt(w)
        with np.errstate(divide="ignore"):
            logdet = float(np.sum(np.log(w)))
        return GaussianFactor(n, L, logdet, "eigen")


def reconstruct(f: GaussianFactor) -> np.ndarray:
    return f.lower @ f.lower.T


def sample_vector(f: GaussianFactor, rng: np.random.Generator, size=None) -> np.ndarray:
    """Centered Gaussian draw(s) with covariance L L^T."""
    if size is None:
        return f.lower @ rng.standard_normal(f.dim)
    return rng.standard_normal((size, f.dim)) @ f.lower.T


def condition_on_zero(joint, target_idx, cond_idx) -> np.ndarray:
    """Cov of the target block given the conditioning block equals 0.

    Sigma_AA - Sigma_AB Sigma_BB^-1 Sigma_BA, symmetrized and clipped to PSD.
    """
    joint = check_cov(joint)
    A, B = list(target_idx), list(cond_idx)
    Saa = joint[np.ix_(A, A)]
    if not B:
        return Saa
    Sbb = joint[np.ix_(B, B)]
    Sab = joint[np.ix_(A, B)]
    # scale-free reciprocal condition number
    dsq = np.sqrt(np.clip(np.diag(Sbb), 1e-300, None))
    ev = np.linalg.eigvalsh(Sbb / np.outer(dsq, dsq))
    if ev[0] <= COND_TOL * ev[-1]:
        raise SingularConditioning(f"conditioning block rcond {ev[0] / ev[-1]:.2e}")
    X = np.linalg.solve(Sbb, Sab.T)
    out = Saa - Sab @ X
    out = 0.5 * (out + out.T)
    # variances that cancel to rounding level are zero (e.g. a derivative
    # functional that coincides with a conditioned value functional)
    dead = np.diag(out) <= ROUNDOFF_VAR * np.diag(Saa)
    out[dead, :] = 0.0
    out[:, dead] = 0.0
    return psd_clip(out)


def psd_clip(cov: np.ndarray) -> np.ndarray:
    """Zero out round-off negative eigenvalues within tolerance."""
    w, V = np.linalg.eigh(cov)
    if w[0] >= 0:
        return cov
    if w[0] < -PSD_TOL * max(abs(w[-1]), 1e-300) and w[0] < -1e-300:
        raise NotPSD(f"conditional covariance eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.T


def abs_moment_1(var: float) -> float:
    return float(np.sqrt(2.0 * max(var, 0.0) / np.pi))


def abs_moment_2(s11: float, s22: float, s12: float) -> float:
    """E|X Y| for centered (X, Y): (2/pi) s1 s2 (sqrt(1-r^2) + r asin r)."""
    if s11 <= 0 or s22 <= 0:
        return 0.0
    s1, s2 = np.sqrt(s11), np.sqrt(s22)
    r = float(np.clip(s12 / (s1 * s2), -1.0, 1.0))
    return float(2.0 / np.pi * s1 * s2 * (np.sqrt(1.0 - r * r) + r * np.arcsin(r)))


def abs_moment_product(cov, mc_budget: int = 100_000, rng=None, force_mc: bool = False):
    """(E[prod_i |zeta_i|], stderr) for zeta ~ N(0, cov).

    Exact closed forms (stderr 0) in dimensions 1 and 2 unless ``force_mc``.
    """
    cov = check_cov(cov)
    n = cov.shape[0]
    if not np.any(cov):
        return 0.0, 0.0
    if not force_mc:
        if n == 1:
            return abs_moment_1(cov[0, 0]), 0.0
        if n == 2:
            return abs_moment_2(cov[0, 0], cov[1, 1], cov[0, 1]), 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    f = factor(cov)
    vals = np.empty(0)
    out = []
    chunk = 65536
    left = int(mc_budget)
    while left > 0:
        m = min(chunk, left)
        x = sample_vector(f, rng, m)
        out.append(np.prod(np.abs(x), axis=1))
        left -= m
    vals = np.concatenate(out)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))
