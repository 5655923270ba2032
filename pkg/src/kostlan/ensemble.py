"""Random Kostlan polynomials, real and complex.

A degree-``d`` Kostlan polynomial is

    p(t) = sum_k a_k * sqrt(C(d, k)) * t**k

with i.i.d. standard Gaussian ``a_k``.  Samples store the raw Gaussian vector
``a``; the binomial weights are applied on demand.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .kernels import TOTAL_LENGTH, arc_to_angle


@lru_cache(maxsize=64)
def _log_binomial_weights(d: int) -> np.ndarray:
    k = np.arange(d + 1)
    w = 0.5 * (gammaln(d + 1) - gammaln(k + 1) - gammaln(d - k + 1))
    w.setflags(write=False)
    return w


@lru_cache(maxsize=64)
def binomial_weights(d: int) -> np.ndarray:
    """sqrt(C(d, k)) for k = 0..d, built in log domain and cached per degree."""
    w = np.exp(_log_binomial_weights(d))
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class SectionSample:
    """Gaussian coefficient vector of one Kostlan polynomial.

    ``coeffs[k]`` multiplies ``sqrt(C(d, k)) t**k``.
    """

    degree: int
    field: str
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (self.degree + 1,):
            raise ValueError("coefficient vector must have length d+1")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        if self.field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")

    def poly_coeffs(self) -> np.ndarray:
        """Monomial coefficients c_k = a_k sqrt(C(d,k)), ascending powers."""
        return self.coeffs * binomial_weights(self.degree)

    def scaled(self, c: float) -> "SectionSample":
        return SectionSample(self.degree, self.field, self.coeffs * c)


def rng_for(seed: int, index: int) -> np.random.Generator:
    """Counter-based substream for sample ``index`` under master ``seed``.

    Philox is keyed by (seed, index), so every sample has its own stream and
    results do not depend on how the sample loop is split across workers.
    """
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(index)]))


def sample_real(d: int, rng: np.random.Generator) -> SectionSample:
    if d < 1:
        raise ValueError("degree must be >= 1")
    return SectionSample(d, "real", rng.standard_normal(d + 1))


def sample_complex(d: int, rng: np.random.Generator) -> SectionSample:
    """Standard complex Gaussian coefficients, E|a_k|^2 = 1."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    z = rng.standard_normal((2, d + 1)) * np.sqrt(0.5)
    return SectionSample(d, "complex", z[0] + 1j * z[1])


def _horner(c, t):
    acc = np.zeros_like(t * c[-1])
    for ck in c[::-1]:
        acc = acc * t + ck
    return acc


def evaluate(sample: SectionSample, t):
    """p(t), with the chart flip t -> 1/t for |t| > 1."""
    c = sample.poly_coeffs()
    t = np.asarray(t, dtype=np.result_type(t, c, float))
    big = np.abs(t) > 1
    out = np.empty(t.shape, dtype=np.result_type(t, c))
    out[~big] = _horner(c, t[~big])
    if np.any(big):
        tb = t[big]
        out[big] = _horner(c[::-1], 1.0 / tb) * tb ** sample.degree
    return out[()] if out.ndim == 0 else out


def evaluate_deriv(sample: SectionSample, t):
    """p'(t), with the chart flip for |t| > 1.

    With q(w) = w^d p(1/w): p'(t) = t^(d-1) (d q(w) - w q'(w)), w = 1/t.
    """
    c = sample.poly_coeffs()
    d = sample.degree
    dc = c[1:] * np.arange(1, d + 1)
    t = np.asarray(t, dtype=np.result_type(t, c, float))
    big = np.abs(t) > 1
    out = np.empty(t.shape, dtype=np.result_type(t, c))
    out[~big] = _horner(dc, t[~big])
    if np.any(big):
        tb = t[big]
        w = 1.0 / tb
        r = c[::-1]
        q = _horner(r, w)
        dq = _horner(r[1:] * np.arange(1, d + 1), w)
        out[big] = tb ** (d - 1) * (d * q - w * dq)
    return out[()] if out.ndim == 0 else out


def evaluate_normalized(sample: SectionSample, u):
    """Unit-variance field at arc-length ``u``.

    With theta = u*sqrt(pi) the normalized field is p(tan theta) cos^d theta.
    Near theta = pi/2 the reversed polynomial at cot theta is used instead, so
    the value stays bounded on all of RP^1.
    """
    theta = np.atleast_1d(arc_to_angle(np.asarray(u, dtype=float)))
    # lift to (-pi/2, pi/2] so the cos^d factor is positive and signs match p
    theta = np.mod(theta + np.pi / 2, np.pi) - np.pi / 2
    d = sample.degree
    c = sample.poly_coeffs()
    cs, sn = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape, dtype=np.result_type(c, float))
    near = np.abs(sn) <= np.abs(cs)
    out[near] = _horner(c, sn[near] / cs[near]) * cs[near] ** d
    far = ~near
    out[far] = _horner(c[::-1], cs[far] / sn[far]) * sn[far] ** d
    return out[0] if np.ndim(u) == 0 else out


__all__ = [
    "SectionSample",
    "binomial_weights",
    "rng_for",
    "sample_real",
    "sample_complex",
    "evaluate",
    "evaluate_deriv",
    "evaluate_normalized",
    "TOTAL_LENGTH",
]
