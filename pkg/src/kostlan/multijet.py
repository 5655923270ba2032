"""Divided-difference (multijet) form of the k-point density.

Points closer than 1/sqrt(d) are grouped into components of a proximity
graph.  On a component x_1..x_m the field is read through the value
functionals [x_1], [x_1 x_2], ..., [x_1..x_m] and the derivative functionals
[x_1 x_1], [x_1 x_2 x_2], ..., [x_1..x_m x_m].  Their joint covariance is a
bivariate divided difference of the kernel, which stays well conditioned as
points collide, so the density

    rho = E[prod |D_p| | V = 0] (2 pi)^(-k/2) det(Cov V)^(-1/2)

extends continuously to (and vanishes on) the diagonal.

Linear functionals are carried as point-derivative forms: lists of
(point, derivative order, weight).  A form comes either from the recursive
Hermite table (well separated or exactly coincident nodes) or from the
Cauchy integral over a circle around the nodes (close but distinct nodes),
which avoids the cancellation of the recursive formula.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional

import numpy as np

from . import gaussian
from .kacrice import DensityValue
from .kernels import SQRT_PI, TOTAL_LENGTH, KernelOracle, bargmann_fock_kernel, geodesic_distance

CONTOUR_POINTS = 64
CLOSE_GAP = 0.5  # in units of the kernel correlation length


class InsufficientDerivOrder(ValueError):
    pass


# --------------------------------------------------------------------------
# univariate divided differences

def _hermite_table_form(nodes) -> dict:
    """Coefficients c[(node, r)] with [nodes] f = sum c * f^(r)(node)."""
    z = sorted(float(v) for v in nodes)
    n = len(z) - 1
    prev = [{(zi, 0): 1.0} for zi in z]
    for j in range(1, n + 1):
        cur = []
        for i in range(n - j + 1):
            if z[i + j] == z[i]:
                cur.append({(z[i], j): 1.0 / factorial(j)})
                continue
            h = z[i + j] - z[i]
            out = {key: -v / h for key, v in prev[i].items()}
            for key, v in prev[i + 1].items():
                out[key] = out.get(key, 0.0) + v / h
            cur.append(out)
        prev = cur
    return prev[0]


def _contour_form(nodes, radius: float, m: int = CONTOUR_POINTS):
    """Trapezoidal Cauchy integral: [nodes] f ~ sum_q w_q f(z_q)."""
    x = np.asarray(nodes, dtype=float)
    c = x.mean()
    phi = 2 * np.pi * (np.arange(m) + 0.5) / m
    e = np.exp(1j * phi)
    zq = c + radius * e
    w = radius * e / m / np.prod(zq[:, None] - x[None, :], axis=1)
    return zq, w


def contour_radius(nodes, length_scale: float) -> float:
    x = np.asarray(nodes, dtype=float)
    spread = np.max(np.abs(x - x.mean()))
    return max(2.0 * spread, 0.5 * length_scale)


def _has_close_gap(nodes, length_scale):
    gaps = np.diff(np.sort(np.asarray(nodes, dtype=float)))
    pos = gaps[gaps > 0]
    return bool(pos.size and pos.min() < CLOSE_GAP * length_scale)


def divided_difference(nodes, f: Callable, method: str = "recursive",
                       max_order: Optional[int] = None, length_scale: float = 1.0) -> float:
    """Confluent divided difference [nodes] f.

    ``f(x, r)`` returns the r-th derivative at x.  ``method="contour"`` needs
    ``f`` analytic and evaluable at complex x (only r = 0 is used);
    ``method="auto"`` takes the contour only when two distinct nodes are
    closer than CLOSE_GAP * length_scale, where the table loses digits.
    """
    nodes = list(nodes)
    if not nodes:
        raise ValueError("need at least one node")
    if method not in ("recursive", "contour", "auto"):
        raise ValueError(f"unknown method {method!r}")
    if method == "contour" or (method == "auto" and _has_close_gap(nodes, length_scale)):
        zq, w = _contour_form(nodes, contour_radius(nodes, length_scale))
        return float(np.real(np.sum(w * np.asarray(f(zq, 0)))))
    mult = max(nodes.count(v) for v in set(nodes))
    if max_order is not None and mult - 1 > max_order:
        raise InsufficientDerivOrder(f"multiplicity {mult} needs order {mult - 1}")
    form = _hermite_table_form(nodes)
    return float(sum(c * f(x, r) for (x, r), c in form.items()))


# --------------------------------------------------------------------------
# functionals

@dataclass(frozen=True)
class DividedDifferenceFunctional:
    nodes: tuple
    kind: str = "value"

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("empty node list")
        if self.kind == "derivative" and (len(self.nodes) < 2 or self.nodes[-1] != self.nodes[-2]):
            raise ValueError("derivative functional needs its last node doubled")

    def form(self, length_scale: float):
        """(points, orders, weights) with the functional = sum w f^(o)(p)."""
        x = np.asarray(self.nodes, dtype=float)
        if _has_close_gap(x, length_scale):
            zq, w = _contour_form(x, contour_radius(x, length_scale))
            return zq, np.zeros(len(zq), int), w
        tab = _hermite_table_form(x)
        pts = np.array([k[0] for k in tab], dtype=complex)
        orders = np.array([k[1] for k in tab], dtype=int)
        return pts, orders, np.array(list(tab.values()), dtype=complex)


def _form_covariance(oracle: KernelOracle, fa, fb) -> float:
    pa, oa, wa = fa
    pb, ob, wb = fb
    S = pa[:, None] - pb[None, :]
    N = oa[:, None] + ob[None, :]
    sign = np.where(ob % 2, -1.0, 1.0)[None, :]
    vals = np.empty(S.shape, dtype=complex)
    for n in np.unique(N):
        m = N == n
        vals[m] = oracle.profile(S[m], int(n))
    return float(np.real(wa @ (vals * sign) @ wb))


def functional_covariance(oracle: KernelOracle, a: DividedDifferenceFunctional,
                          b: DividedDifferenceFunctional) -> float:
    """Cov(a(f), b(f)): the bivariate divided difference of the kernel."""
    return _form_covariance(oracle, a.form(oracle.length_scale), b.form(oracle.length_scale))


def gram(oracle: KernelOracle, functionals) -> np.ndarray:
    forms = [F.form(oracle.length_scale) for F in functionals]
    n = len(forms)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = _form_covariance(oracle, forms[i], forms[j])
    return G


# --------------------------------------------------------------------------
# proximity graphs

@dataclass
class GraphAssignment:
    adjacency: np.ndarray
    components: list
    origins: list = field(default_factory=list)

    @property
    def sizes(self):
        return [len(c) for c in self.components]


def _components(adj: np.ndarray) -> list:
    k = adj.shape[0]
    seen = np.zeros(k, bool)
    comps = []
    for s in range(k):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in np.nonzero(adj[v] & ~seen)[0]:
                seen[u] = True
                stack.append(int(u))
        comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def graph_from_threshold(points, threshold: float, periodic: bool = True) -> GraphAssignment:
    x = np.asarray(points, dtype=float)
    if periodic:
        D = geodesic_distance(x[:, None], x[None, :])
    else:
        D = np.abs(x[:, None] - x[None, :])
    adj = D <= threshold
    np.fill_diagonal(adj, False)
    comps = _components(adj)
    return GraphAssignment(adj, comps, [c[0] for c in comps])


def assign_graph(points, d: int) -> GraphAssignment:
    """Edges between points at distance <= 1/sqrt(d) on RP^1."""
    return graph_from_threshold(points, 1.0 / np.sqrt(d))


def is_admissible(g: GraphAssignment) -> bool:
    """Components are consecutive label blocks, in increasing origin order."""
    nxt = 0
    for comp in g.components:
        if comp != list(range(nxt, nxt + len(comp))):
            return False
        nxt += len(comp)
    return True


def admissible_relabel(points, d: int):
    """(relabelled points, permutation) making the graph admissible."""
    x = np.asarray(points, dtype=float)
    g = assign_graph(x, d)
    perm = np.array([i for comp in g.components for i in comp], dtype=int)
    return x[perm], perm


def _lift(x: np.ndarray, comp: list, periodic: bool) -> np.ndarray:
    """Coordinates of a component in one chart around its origin."""
    base = x[comp[0]]
    off = x[comp] - base
    if periodic:
        off = np.mod(off + TOTAL_LENGTH / 2, TOTAL_LENGTH) - TOTAL_LENGTH / 2
    return base + off


def functional_system(points, g: GraphAssignment, periodic: bool = True):
    """(value functionals, derivative functionals), component-major."""
    x = np.asarray(points, dtype=float)
    vals, ders = [], []
    for comp in g.components:
        y = _lift(x, comp, periodic)
        for p in range(1, len(comp) + 1):
            vals.append(DividedDifferenceFunctional(tuple(y[:p]), "value"))
        for p in range(1, len(comp) + 1):
            ders.append(DividedDifferenceFunctional(tuple(y[:p]) + (y[p - 1],), "derivative"))
    return vals, ders


# --------------------------------------------------------------------------
# densities

@dataclass
class MultijetTerms:
    numerator: float
    numerator_stderr: float
    gram_det: float
    graph: GraphAssignment
    k: int

    @property
    def value(self) -> float:
        return self.numerator * (2 * np.pi) ** (-self.k / 2) / np.sqrt(self.gram_det)

    @property
    def stderr(self) -> float:
        return self.numerator_stderr * (2 * np.pi) ** (-self.k / 2) / np.sqrt(self.gram_det)


def _terms(oracle, points, d, mc_budget, rng, force_mc, periodic=True, graph=None):
    x = np.atleast_1d(np.asarray(points, dtype=float))
    k = len(x)
    if graph is None:
        graph = assign_graph(x, d) if periodic else graph_from_threshold(x, SQRT_PI, False)
    vals, ders = functional_system(x, graph, periodic)
    J = gram(oracle, vals + ders)
    Svv = J[:k, :k]
    det = float(np.linalg.det(Svv))
    cond = gaussian.condition_on_zero(J, range(k, 2 * k), range(k))
    num, se = gaussian.abs_moment_product(cond, mc_budget, rng, force_mc=force_mc)
    return MultijetTerms(num, se, det, graph, k)


def near_diagonal_density(oracle: KernelOracle, points, d: Optional[int] = None,
                          mc_budget: int = 100_000, rng=None, force_mc: bool = False) -> DensityValue:
    """k-point density through divided-difference functionals.

    Valid on and off the diagonal; agrees with ``kacrice.density_k`` at
    distinct points and is 0 when two points coincide.
    """
    d = d if d is not None else oracle.degree
    t = _terms(oracle, points, d, mc_budget, rng, force_mc)
    return DensityValue(t.value, t.stderr)


def scaling_diagnostics(oracle: KernelOracle, points, d: Optional[int] = None,
                        mc_budget: int = 20_000, rng=None) -> dict:
    """Density, Gram determinant and numerator with their natural powers of
    d removed (component of size m contributes d^(m(m-1)/2) to the Gram
    determinant and sqrt(d)^(m(m+1)/2) to the numerator)."""
    d = d if d is not None else oracle.degree
    t = _terms(oracle, points, d, mc_budget, rng, False)
    k = t.k
    e = sum(m * (m - 1) for m in t.graph.sizes)
    return {
        "normalized_density": t.value / np.sqrt(d) ** k,
        "normalized_density_stderr": t.stderr / np.sqrt(d) ** k,
        "normalized_gram_det": t.gram_det * float(d) ** (-e / 2),
        "normalized_jacobian": np.sqrt(t.gram_det) * float(d) ** (-e / 4),
        "normalized_numerator": t.numerator / (np.sqrt(d) ** k * float(d) ** (e / 4)),
        "components": t.graph.components,
    }


def value_gram(oracle: KernelOracle, points, g: GraphAssignment, periodic: bool = False) -> np.ndarray:
    vals, _ = functional_system(points, g, periodic)
    return gram(oracle, vals)


def local_evaluation_jacobian(T, g: Optional[GraphAssignment] = None,
                              oracle: Optional[KernelOracle] = None) -> float:
    """sqrt det of the value-functional Gram under the Bargmann-Fock kernel,
    for points T in sqrt(d)-scaled angle coordinates.

    Without a graph, the 1/sqrt(d) arc-length threshold is used, which reads
    sqrt(pi) in these coordinates.
    """
    T = np.atleast_1d(np.asarray(T, dtype=float))
    oracle = oracle or bargmann_fock_kernel()
    if g is None:
        g = graph_from_threshold(T, SQRT_PI, periodic=False)
    G = value_gram(oracle, T, g, periodic=False)
    return float(np.sqrt(max(np.linalg.det(G), 0.0)))
