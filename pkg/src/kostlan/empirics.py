"""Monte Carlo engine: zero-count moments, concentration, asymptotic fits and
complex equidistribution.

Sample i under master seed s always comes from the Philox stream keyed by
(s, i), so results do not depend on how the loop is split across workers.
Counts are integers and moments are accumulated exactly in integer
arithmetic before the final division.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import stats

from .ensemble import rng_for, sample_complex, sample_real
from .roots import NoConvergence, complex_roots, count_real_roots_rp1

log = logging.getLogger(__name__)

BOOTSTRAP = 1000


class IllConditionedFit(np.linalg.LinAlgError):
    pass


# --------------------------------------------------------------------------
# sampling

def _count_range(args):
    d, seed, lo, hi, method = args
    out = np.empty(hi - lo, dtype=np.int64)
    for i in range(lo, hi):
        out[i - lo] = count_real_roots_rp1(sample_real(d, rng_for(seed, i)), method).total
    return out


def sample_counts(d: int, n: int, seed: int, threads: int = 1, method: str = "auto") -> np.ndarray:
    """Exact real-zero counts of samples 0..n-1, in index order."""
    if threads <= 1 or n < 512:
        return _count_range((d, seed, 0, n, method))
    step = -(-n // (4 * threads))
    jobs = [(d, seed, lo, min(lo + step, n), method) for lo in range(0, n, step)]
    with ProcessPoolExecutor(threads) as ex:
        return np.concatenate(list(ex.map(_count_range, jobs)))


# --------------------------------------------------------------------------
# moments

def _exact_power_means(counts: np.ndarray, center: int | None, kmax: int):
    """Exact integer sums of (n - center)^k; returns float means and stderrs."""
    vals, freq = np.unique(counts, return_counts=True)
    vals = [int(v) - (center or 0) for v in vals]
    freq = [int(f) for f in freq]
    N = sum(freq)
    means, ses = [], []
    for k in range(1, kmax + 1):
        s1 = sum(f * v ** k for v, f in zip(vals, freq))
        s2 = sum(f * v ** (2 * k) for v, f in zip(vals, freq))
        m = s1 / N
        var = (s2 - s1 * s1 / N) / (N - 1) if N > 1 else 0.0
        means.append(m)
        ses.append(np.sqrt(max(var, 0.0) / N))
    return np.array(means, float), np.array(ses, float)


def _central_about(counts: np.ndarray, mean: float, kmax: int):
    x = counts.astype(float) - mean
    return np.array([np.mean(x ** k) for k in range(1, kmax + 1)])


def _unbiased_central(counts: np.ndarray, kmax: int) -> np.ndarray:
    """Central moments about the sample mean; k = 2, 3 bias corrected."""
    n = len(counts)
    m = _central_about(counts, counts.mean(), kmax)
    if kmax >= 2 and n > 1:
        m[1] *= n / (n - 1)
    if kmax >= 3 and n > 2:
        m[2] *= n * n / ((n - 1) * (n - 2))
    return m


@dataclass
class MomentReport:
    degree: int
    samples: int
    seed: int
    kmax: int
    raw: np.ndarray
    raw_stderr: np.ndarray
    central: np.ndarray
    central_stderr: np.ndarray
    central_ci: np.ndarray
    central_true: np.ndarray
    central_true_stderr: np.ndarray
    falling: np.ndarray
    falling_stderr: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(self.raw[0])

    @property
    def mean_stderr(self) -> float:
        return float(self.raw_stderr[0])

    def rows(self):
        for k in range(1, self.kmax + 1):
            yield {
                "d": self.degree, "N": self.samples, "k": k,
                "rawMoment": self.raw[k - 1], "rawStderr": self.raw_stderr[k - 1],
                "centralMoment": self.central[k - 1], "centralStderr": self.central_stderr[k - 1],
                "fallingFactorial": self.falling[k - 1],
            }


def falling_factorial_array(n: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(n, dtype=np.int64)
    for j in range(k):
        out = out * (n - j)
    return out


def run_moments(d: int, n: int, kmax: int = 4, seed: int = 0, threads: int = 1,
                counts: np.ndarray | None = None, bootstrap: int = BOOTSTRAP) -> MomentReport:
    """Raw, central and factorial moments of #Z from n exact counts."""
    if n < 100 and counts is None:
        raise ValueError("need at least 100 samples")
    if not 1 <= kmax <= 5:
        raise ValueError("kmax must be in 1..5")
    if counts is None:
        counts = sample_counts(d, n, seed, threads)
    counts = np.asarray(counts, dtype=np.int64)
    n = len(counts)
    raw, raw_se = _exact_power_means(counts, None, kmax)
    fall = np.empty(kmax)
    fall_se = np.empty(kmax)
    for k in range(1, kmax + 1):
        f = falling_factorial_array(counts, k)
        fall[k - 1] = f.mean()
        fall_se[k - 1] = f.std(ddof=1) / np.sqrt(n)
    # central moments about the true mean sqrt(d): plain means of iid values
    ct = np.empty(kmax)
    ct_se = np.empty(kmax)
    x = counts - np.sqrt(d)
    for k in range(1, kmax + 1):
        v = x ** k
        ct[k - 1] = v.mean()
        ct_se[k - 1] = v.std(ddof=1) / np.sqrt(n)
    central = _unbiased_central(counts, kmax)
    # bootstrap by multinomial resampling of the count histogram
    vals, freq = np.unique(counts, return_counts=True)
    brng = np.random.default_rng([seed, d, 7])
    draws = brng.multinomial(n, freq / n, size=bootstrap)
    boots = np.empty((bootstrap, kmax))
    vf = vals.astype(float)
    for b in range(bootstrap):
        w = draws[b] / n
        mu = w @ vf
        dev = vf - mu
        boots[b] = [w @ dev ** k for k in range(1, kmax + 1)]
    if kmax >= 2:
        boots[:, 1] *= n / (n - 1)
    if kmax >= 3:
        boots[:, 2] *= n * n / ((n - 1) * (n - 2))
    c_se = boots.std(axis=0, ddof=1)
    c_ci = np.percentile(boots, [2.5, 97.5], axis=0).T
    return MomentReport(d, n, seed, kmax, raw, raw_se, central, c_se, c_ci, ct, ct_se,
                        fall, fall_se, counts)


def stirling_consistent(counts: np.ndarray, kmax: int) -> bool:
    """n^k == sum_j S(k, j) (n)_j for every count and k (exact integers)."""
    from .kacrice import stirling2
    for n in np.unique(counts):
        n = int(n)
        for k in range(1, kmax + 1):
            rhs = sum(stirling2(k, j) * _ff(n, j) for j in range(k + 1))
            if n ** k != rhs:
                return False
    return True


def _ff(n: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= n - i
    return out


def deviation_probability(d: int, n: int, c: float, seed: int = 0, threads: int = 1,
                          counts: np.ndarray | None = None):
    """Fraction of samples with |#Z - sqrt d| > c sqrt d, with its stderr."""
    if c <= 0:
        raise ValueError("c must be positive")
    if counts is None:
        counts = sample_counts(d, n, seed, threads)
    hit = np.abs(counts - np.sqrt(d)) > c * np.sqrt(d)
    p = float(hit.mean())
    return p, float(np.sqrt(p * (1 - p) / len(counts)))


# --------------------------------------------------------------------------
# fits

@dataclass
class FitResult:
    k: int
    a: float
    b: float
    a_ci: tuple
    b_ci: tuple
    cov: np.ndarray
    residuals: np.ndarray
    degrees: np.ndarray

    @property
    def C(self) -> float:
        """b_2 / 2 (meaningful for k = 2)."""
        return self.b / 2

    @property
    def C_ci(self) -> tuple:
        return (self.b_ci[0] / 2, self.b_ci[1] / 2)


def fit_asymptotics(reports, k: int, z: float = 1.96) -> FitResult:
    """Weighted least squares E[#Z^k] ~ a sqrt(d)^k + b sqrt(d)^(k-1)."""
    reports = sorted(reports, key=lambda r: r.degree)
    ds = np.array([r.degree for r in reports], float)
    if len(ds) < 4 or ds[-1] / ds[0] < 8:
        raise IllConditionedFit("need >= 4 degrees spanning a factor 8")
    y = np.array([r.raw[k - 1] for r in reports])
    se = np.array([r.raw_stderr[k - 1] for r in reports])
    se = np.where(se > 0, se, np.max(se[se > 0]) if np.any(se > 0) else 1.0)
    s = np.sqrt(ds)
    X = np.column_stack([s ** k, s ** (k - 1)])
    W = 1 / se ** 2
    A = X.T @ (X * W[:, None])
    if np.linalg.cond(A) > 1e14:
        raise IllConditionedFit("normal equations ill-conditioned")
    cov = np.linalg.inv(A)
    beta = cov @ (X.T @ (W * y))
    res = y - X @ beta
    ea, eb = np.sqrt(np.diag(cov))
    return FitResult(k, float(beta[0]), float(beta[1]), (beta[0] - z * ea, beta[0] + z * ea),
                     (beta[1] - z * eb, beta[1] + z * eb), cov, res, ds)


@dataclass
class DecayTrend:
    k: int
    degrees: np.ndarray
    ratio: np.ndarray
    ratio_stderr: np.ndarray
    slope: float


def central_moment_decay(reports, k: int, true_mean: bool = True) -> DecayTrend:
    """E[(#Z - mean)^k] / sqrt(d)^(k-1) across degrees, with log-log slope."""
    if k < 2:
        raise ValueError("k >= 2")
    reports = sorted(reports, key=lambda r: r.degree)
    ds = np.array([r.degree for r in reports], float)
    if true_mean:
        m = np.array([r.central_true[k - 1] for r in reports])
        e = np.array([r.central_true_stderr[k - 1] for r in reports])
    else:
        m = np.array([r.central[k - 1] for r in reports])
        e = np.array([r.central_stderr[k - 1] for r in reports])
    norm = np.sqrt(ds) ** (k - 1)
    ratio = m / norm
    ok = ratio > 0
    slope = float(np.polyfit(np.log(ds[ok]), np.log(ratio[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    return DecayTrend(k, ds, ratio, e / norm, slope)


# --------------------------------------------------------------------------
# complex equidistribution

def equal_area_cells(points: np.ndarray, bins: int) -> np.ndarray:
    """Cell index of unit-sphere points under bands x sectors equal-area cells."""
    nb = max(b for b in range(1, int(np.sqrt(bins)) + 1) if bins % b == 0)
    ns = bins // nb
    z = np.clip(points[..., 2], -1, 1)
    band = np.minimum(((z + 1) / 2 * nb).astype(int), nb - 1)
    phi = np.mod(np.arctan2(points[..., 1], points[..., 0]), 2 * np.pi)
    sector = np.minimum((phi / (2 * np.pi) * ns).astype(int), ns - 1)
    return band * ns + sector


@dataclass
class EquidistReport:
    degree: int
    samples: int
    bins: int
    counts: np.ndarray
    chi2: float
    p_value: float
    cell_error: float
    pair_moment: float
    pair_moment_stderr: float
    pair_target: float
    aborts: int
    total_mean: float


def complex_equidistribution(d: int, n: int, bins: int = 32, seed: int = 0) -> EquidistReport:
    """Pool complex zeros on the sphere; chi-square against equal-area cells.

    ``cell_error`` is the mean over cells of |empirical fraction - 1/bins|.
    The pair check uses f(p, q) = (p.q)^2, whose sphere integral is 1/3.
    """
    counts = np.zeros(bins, dtype=np.int64)
    pair = []
    aborts = 0
    totals = []
    for i in range(n):
        try:
            rl = complex_roots(sample_complex(d, rng_for(seed, i)))
        except NoConvergence:
            aborts += 1
            continue
        P = rl.sphere
        counts += np.bincount(equal_area_cells(P, bins), minlength=bins)
        M = P.T @ P
        pair.append(np.sum(M * M) / d ** 2)
        totals.append(len(P))
    tot = counts.sum()
    expected = np.full(bins, tot / bins)
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    p = float(stats.chi2.sf(chi2, bins - 1))
    pair = np.array(pair)
    return EquidistReport(d, n, bins, counts, chi2, p,
                          float(np.mean(np.abs(counts / tot - 1 / bins))),
                          float(pair.mean()), float(pair.std(ddof=1) / np.sqrt(len(pair))),
                          1 / 3, aborts, float(np.mean(totals)) / d)
