"""Real-root counting on RP^1 and complex root finding on CP^1.

Two exact counters are provided.

* ``sturm``: floating coefficients are converted exactly to integers (every
  double is a dyadic rational), the square-free part is taken with an exact
  gcd and Sturm's theorem is applied to a primitive remainder sequence.
* ``certified``: Aberth-Ehrlich approximations plus rigorous inclusion disks
  (see ``_rootfind.certify_disks``).  When the disks close, the count is a
  proof, not an estimate; otherwise the caller falls back to ``sturm``.

The default ``auto`` method uses the certified path and falls back to Sturm,
so the result is exact either way.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import flint
import numpy as np

from . import _rootfind
from .ensemble import SectionSample
from .kernels import SQRT_PI, TOTAL_LENGTH

log = logging.getLogger(__name__)

ABERTH_SWEEPS = 200


class ZeroPolynomial(ValueError):
    pass


class EndpointIsRoot(ArithmeticError):
    pass


class NoConvergence(ArithmeticError):
    pass


@dataclass
class RootCount:
    total: int
    per_interval: Optional[dict] = None
    method: str = "sturm"


@dataclass
class RootList:
    """Real roots (affine t, increasing) or complex roots on CP^1.

    For complex lists ``points`` holds affine values (``inf`` for a root at
    infinity) and ``sphere`` the unit-sphere image under inverse stereographic
    projection, where the Fubini-Study area is the uniform area.
    """

    points: np.ndarray
    multiple: Optional[np.ndarray] = None
    sphere: Optional[np.ndarray] = None
    real_mask: Optional[np.ndarray] = None
    intervals: list = field(default_factory=list)


# --------------------------------------------------------------------------
# exact arithmetic helpers

def exact_integer_poly(coeffs) -> flint.fmpz_poly:
    """Integer polynomial proportional to the float coefficients (exact)."""
    fr = [Fraction(float(x)) for x in coeffs]
    den = 1
    for f in fr:
        if f.denominator > den:
            den = f.denominator  # all denominators are powers of two
    ints = [int(f * den) for f in fr]
    return flint.fmpz_poly(ints)


def _primitive(P: flint.fmpz_poly) -> flint.fmpz_poly:
    c = P.content()
    return P if c == 1 else flint.fmpz_poly([x // c for x in P.coeffs()])


def square_free_part(P: flint.fmpz_poly) -> flint.fmpz_poly:
    g = P.gcd(P.derivative())
    if g.degree() > 0:
        P = P // g
    return _primitive(P)


def sturm_sequence(P: flint.fmpz_poly) -> list:
    """Sturm sequence with primitive pseudo-remainders.

    Each remainder is rescaled by a positive factor only, which preserves the
    sign pattern of the classical sequence (P, P', -rem, ...).
    """
    A, B = P, P.derivative()
    seq = [A, B]
    while B.degree() > 0:
        delta = A.degree() - B.degree() + 1
        lc = abs(int(B.coeffs()[-1]))
        _, R = divmod(flint.fmpq_poly(A) * (lc ** delta), flint.fmpq_poly(B))
        if R.degree() < 0:
            break
        R = flint.fmpz_poly([int(x) for x in R.numer().coeffs()])
        R = -_primitive(R)
        A, B = B, R
        seq.append(B)
    return seq


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _variations(signs) -> int:
    s = [v for v in signs if v != 0]
    return sum(1 for a, b in zip(s, s[1:]) if a != b)


def _v_at(seq, x) -> int:
    """Sign variations at a rational x, or at +-inf when x is +-1 string."""
    if x == "+inf":
        return _variations([_sign(int(S.coeffs()[-1])) for S in seq])
    if x == "-inf":
        return _variations([_sign(int(S.coeffs()[-1])) * (-1) ** S.degree() for S in seq])
    return _variations([_sign(S(x)) for S in seq])


def _fq(x: float) -> flint.fmpq:
    n, d = float(x).as_integer_ratio()
    return flint.fmpq(n, d)


# --------------------------------------------------------------------------
# counting

def _prepare(sample: SectionSample) -> np.ndarray:
    if sample.field != "real":
        raise ValueError("real-root counting needs a real sample")
    c = np.array(sample.poly_coeffs(), dtype=float)
    if not np.any(c):
        raise ZeroPolynomial("all coefficients are zero")
    nz = np.nonzero(c)[0]
    if nz[-1] < len(c) - 1:
        log.warning("leading coefficient exactly zero: root at infinity excluded")
    return c[: nz[-1] + 1]


def sturm_count(coeffs) -> int:
    """Exact number of distinct real roots of the float polynomial ``coeffs``."""
    P = exact_integer_poly(coeffs)
    if P.degree() < 0:
        raise ZeroPolynomial("all coefficients are zero")
    if P.degree() == 0:
        return 0
    seq = sturm_sequence(square_free_part(P))
    return _v_at(seq, "-inf") - _v_at(seq, "+inf")


def certified_count(coeffs) -> int:
    """Certified count, or -1 when the inclusion certificate fails."""
    c = np.ascontiguousarray(coeffs, dtype=float)
    if c.shape[0] < 2:
        return 0
    if c[0] == 0.0:
        return -1
    return int(_rootfind.count_real_fast(c, ABERTH_SWEEPS))


def count_real_roots_rp1(sample: SectionSample, method: str = "auto") -> RootCount:
    """Exact number of distinct real zeros on RP^1 (root at infinity only
    when the leading coefficient is exactly zero, and then excluded)."""
    c = _prepare(sample)
    if method in ("auto", "certified"):
        n = certified_count(c)
        if n >= 0:
            return RootCount(n, method="certified")
        if method == "certified":
            raise NoConvergence("inclusion certificate did not close")
        log.info("certificate failed at d=%d; exact Sturm fallback", sample.degree)
    elif method != "sturm":
        raise ValueError(f"unknown method {method!r}")
    return RootCount(sturm_count(c), method="sturm")


def _theta_pieces(u0: float, u1: float):
    """Split the arc-length interval (u0, u1] (wrapping allowed) into affine
    half-open pieces (a, b] with a, b floats or the strings +-inf."""
    ta, tb = u0 * SQRT_PI, u1 * SQRT_PI
    if tb - ta >= np.pi:
        return [("-inf", "+inf")]
    if tb <= ta:
        raise ValueError("empty interval")
    a = float(np.mod(ta, np.pi))
    b = a + (tb - ta)
    if b <= np.pi:
        return _angle_piece(a, b)
    return _angle_piece(a, np.pi) + _angle_piece(0.0, b - np.pi)


def _angle_piece(a: float, b: float):
    half = np.pi / 2
    if b <= half:
        return [(float(np.tan(a)), "+inf" if b == half else float(np.tan(b)))]
    if a >= half:
        lo = "-inf" if a == half else float(np.tan(a))
        return [(lo, 0.0 if b >= np.pi else float(np.tan(b)))]
    return [(float(np.tan(a)), "+inf"), ("-inf", 0.0 if b >= np.pi else float(np.tan(b)))]


def count_real_roots_interval(sample: SectionSample, interval) -> int:
    """Exact count of distinct real zeros with arc-length in (u0, u1]."""
    c = _prepare(sample)
    P = square_free_part(exact_integer_poly(c))
    if P.degree() <= 0:
        return 0
    seq = sturm_sequence(P)
    total = 0
    for a, b in _theta_pieces(*interval):
        ends = []
        for e in (a, b):
            if isinstance(e, str):
                ends.append(e)
                continue
            q = _fq(e)
            if P(q) == 0:
                log.info("interval endpoint %r is a root; moved by one ulp", e)
                e2 = np.nextafter(e, np.inf)
                q = _fq(e2)
                if P(q) == 0:
                    raise EndpointIsRoot(e)
            ends.append(q)
        total += _v_at(seq, ends[0]) - _v_at(seq, ends[1])
    return total


def _cauchy_bound(P) -> flint.fmpq:
    cs = [abs(int(x)) for x in P.coeffs()]
    return flint.fmpq(max(cs[:-1] + [0]), cs[-1]) + 1


def isolate_real_roots(sample_or_coeffs, tol: float = 1e-12) -> RootList:
    """Sturm bisection to isolating intervals, then exact-sign bisection to
    width <= tol * max(1, |t|).  One root per interval by construction."""
    if isinstance(sample_or_coeffs, SectionSample):
        c = _prepare(sample_or_coeffs)
    else:
        c = np.asarray(sample_or_coeffs, dtype=float)
    P0 = exact_integer_poly(c)
    if P0.degree() < 0:
        raise ZeroPolynomial("all coefficients are zero")
    if P0.degree() == 0:
        return RootList(np.empty(0), np.zeros(0, bool))
    P = square_free_part(P0)
    G = P0.gcd(P0.derivative())
    seq = sturm_sequence(P)
    B = _cauchy_bound(P)
    # seed with an angle-uniform grid: Kostlan roots are uniform in angle, so
    # most grid cells already hold at most one root
    m = 2 * int(np.ceil(np.sqrt(P.degree()))) + 2
    cuts = [-B] + [c for c in (_fq(np.tan(-np.pi / 2 + j * np.pi / m)) for j in range(1, m))
                   if -B < c < B] + [B]
    vs = [_v_at(seq, c) for c in cuts]
    stack = [(cuts[i], cuts[i + 1], vs[i], vs[i + 1]) for i in range(len(cuts) - 1)]
    isolated = []
    while stack:
        a, b, va, vb = stack.pop()
        n = va - vb
        if n == 0:
            continue
        if n == 1:
            isolated.append((a, b))
            continue
        m = (a + b) / 2
        if P(m) == 0:
            # exact rational root: isolate it as a degenerate interval
            isolated.append((m, m))
            eps = (b - a) / 1024
            while _v_at(seq, m - eps) - _v_at(seq, m + eps) != 1:
                eps /= 2
            vm0, vm1 = _v_at(seq, m - eps), _v_at(seq, m + eps)
            stack.append((a, m - eps, va, vm0))
            stack.append((m + eps, b, vm1, vb))
            continue
        vm = _v_at(seq, m)
        stack.append((a, m, va, vm))
        stack.append((m, b, vm, vb))
    isolated.sort(key=lambda ab: ab[0])
    pts, mult, ivs = [], [], []
    for a, b in isolated:
        a, b = _refine(P, a, b, tol)
        ivs.append((a, b))
        mid = (a + b) / 2
        pts.append(float(Fraction(int(mid.p), int(mid.q))))
        mult.append(G.degree() > 0 and _root_in(G, a, b))
    return RootList(np.array(pts), np.array(mult, dtype=bool), intervals=ivs)


def _refine(P, a, b, tol):
    if a == b:
        return a, b
    sa = _sign(P(a)) if P(a) != 0 else None
    while True:
        w = b - a
        scale = max(abs(a), abs(b), flint.fmpq(1))
        if float(w / scale) <= tol:
            return a, b
        m = (a + b) / 2
        sm = _sign(P(m))
        if sm == 0:
            return m, m
        if sa is None or sm == sa:
            a, sa = m, sm
        else:
            b = m


def _root_in(G, a, b) -> bool:
    Gs = square_free_part(G)
    if Gs.degree() <= 0:
        return False
    seq = sturm_sequence(Gs)
    lo = a - (b - a) if a != b else a - flint.fmpq(1, 2**60)
    hi = b if a != b else b + flint.fmpq(1, 2**60)
    return _v_at(seq, lo) - _v_at(seq, hi) > 0


# --------------------------------------------------------------------------
# complex roots

def to_sphere(z: np.ndarray) -> np.ndarray:
    """Inverse stereographic projection of affine points (inf -> north pole)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (3,))
    inf = ~np.isfinite(z)
    zf = np.where(inf, 0, z)
    r2 = np.abs(zf) ** 2
    out[..., 0] = 2 * zf.real / (1 + r2)
    out[..., 1] = 2 * zf.imag / (1 + r2)
    out[..., 2] = (r2 - 1) / (1 + r2)
    out[inf] = (0.0, 0.0, 1.0)
    return out


def _chart_residual(c, z):
    """|p(z)| / sum |c_k||z|^k in the chart matching |z| (scale free)."""
    d = len(c) - 1
    res = np.empty(len(z))
    for i, zi in enumerate(z):
        if abs(zi) <= 1:
            v = np.polyval(c[::-1], zi)
            s = np.polyval(np.abs(c[::-1]), abs(zi))
        else:
            w = 1 / zi
            v = np.polyval(c, w)
            s = np.polyval(np.abs(c), abs(w))
        res[i] = abs(v) / s if s > 0 else 0.0
    return res


def complex_roots(sample: SectionSample, tol: float = 1e-8) -> RootList:
    """All d roots on CP^1.

    Aberth-Ehrlich from spread-out starting points; if that stalls the
    companion-matrix eigenvalues are polished by the same iteration.  A
    vanishing leading coefficient is deflated and reported as a root at
    infinity.
    """
    c = np.array(sample.poly_coeffs(), dtype=complex)
    if not np.any(c):
        raise ZeroPolynomial("all coefficients are zero")
    d = sample.degree
    n_inf = 0
    # the binomial weights spread coefficient magnitudes over many decades,
    # so only an exactly vanishing leading coefficient puts a root at infinity
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
        n_inf += 1
    n_zero = 0
    while len(c) > 1 and c[0] == 0:
        c = c[1:]
        n_zero += 1
    deg = len(c) - 1
    z = np.empty(0, complex)
    if deg > 0:
        z, _, ok = _rootfind.aberth(c, _rootfind.initial_guesses(deg, 0.3), ABERTH_SWEEPS)
        if not ok or np.max(_chart_residual(c, z)) > tol:
            z0 = np.roots(c[::-1]).astype(complex)
            z0 = z0 + 1e-9 * (1 + np.abs(z0)) * np.exp(1j * np.arange(deg))
            z, _, ok = _rootfind.aberth(c, z0, 4 * ABERTH_SWEEPS)
            if np.max(_chart_residual(c, z)) > tol:
                raise NoConvergence("complex root finder failed")
    z = np.concatenate([z, np.zeros(n_zero, complex), np.full(n_inf, np.inf + 0j)])
    real_mask = None
    if sample.field == "real" and deg > 0 and n_zero == 0:
        nreal, cen, rad, isreal = _rootfind.certify_disks(c, z[:deg])
        if nreal >= 0:
            real_mask = np.concatenate([isreal, np.ones(n_inf, bool)])
            z[:deg] = np.where(isreal, cen.real + 0j, z[:deg])
        else:
            scale = 1 + np.abs(z[:deg]) ** 2
            real_mask = np.concatenate([np.abs(z[:deg].imag) <= 1e-7 * scale, np.ones(n_inf, bool)])
    assert len(z) == d
    return RootList(z, sphere=to_sphere(z), real_mask=real_mask)


def real_and_pair_counts(sample: SectionSample) -> tuple[int, int]:
    """(#real roots, #roots in the open upper half plane) from complex_roots."""
    rl = complex_roots(sample)
    fin = np.isfinite(rl.points)
    real = rl.real_mask & fin
    upper = (~rl.real_mask) & fin & (rl.points.imag > 0)
    return int(real.sum()), int(upper.sum())
