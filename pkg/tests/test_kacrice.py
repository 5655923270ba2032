import numpy as np
import pytest
from hypothesis import given, strategies as st

from kostlan import kacrice as KR
from kostlan.empirics import sample_counts
from kostlan.kernels import TOTAL_LENGTH, far_diagonal_threshold, kostlan_kernel

BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]


def test_rho1_constant():
    k = kostlan_kernel(100)
    for u in (0.0, 0.3, 1.7):
        assert KR.density_k(k, [u]).value == pytest.approx(10 / np.sqrt(np.pi), rel=1e-12)


def test_rho2_far_factorizes():
    d = 100
    k = kostlan_kernel(d)
    r1 = KR.density_k(k, [0.0]).value
    r2 = KR.density_k(k, [0.1, 0.9]).value
    assert abs(r2 - r1 ** 2) / r1 ** 2 < 1 / d


def test_same_point_raises():
    with pytest.raises(KR.NearDiagonal):
        KR.density_k(kostlan_kernel(100), [0.4, 0.4])


def test_pair_density_vs_mpmath(frozen):
    for row in frozen["pair_density"]:
        k = kostlan_kernel(row["d"])
        if row["gap"] * np.sqrt(row["d"]) >= 0.1:
            assert KR.pair_density_gaps(k, [row["gap"]])[0] == pytest.approx(row["rho2"], rel=1e-9)
            ex = KR.pair_excess_gaps(k, [row["gap"]])[0]
            assert ex == pytest.approx(row["excess"], rel=1e-6, abs=1e-300)


def test_far_factorization_frozen_constant():
    # c measured once over this grid (largest at d = 4) and frozen
    C_FROZEN = 0.15
    for d in (4, 10, 25, 100, 400):
        k = kostlan_kernel(d)
        lo = far_diagonal_threshold(d)
        g = np.linspace(lo, TOTAL_LENGTH / 2, 400)
        assert np.max(np.abs(KR.pair_excess_gaps(k, g))) <= C_FROZEN / d


@given(st.lists(st.floats(0, 1.7), min_size=2, max_size=3, unique=True), st.floats(-3, 3),
       st.sampled_from([9, 36]))
def test_permutation_and_rotation(points, shift, d):
    k = kostlan_kernel(d)
    x = np.array(points)
    if np.min(np.diff(np.sort(x))) < 0.05:
        return
    rng = lambda: np.random.default_rng(0)
    base = KR.density_k(k, x, 20_000, rng()).value
    perm = KR.density_k(k, x[::-1], 20_000, rng())
    rot = KR.density_k(k, x + shift, 20_000, rng())
    if len(x) == 2:
        assert perm.value == pytest.approx(base, rel=1e-10)
        assert rot.value == pytest.approx(base, rel=1e-8)
    else:
        assert abs(perm.value - base) <= 5 * perm.stderr + 1e-12
        assert abs(rot.value - base) <= 5 * rot.stderr + 1e-12
    assert base > 0


def test_integral_k1():
    for d in (4, 25, 100):
        r = KR.integrate_density(kostlan_kernel(d), d, 1, grid=512)
        assert r.value == pytest.approx(np.sqrt(d), rel=1e-6)
    half = lambda x: (x < TOTAL_LENGTH / 2).astype(float)
    r = KR.integrate_density(kostlan_kernel(25), 25, 1, f=half, grid=512)
    assert r.value == pytest.approx(2.5, rel=1e-3)


def test_integral_k2_vs_mc():
    d = 50
    r = KR.integrate_density(kostlan_kernel(d), d, 2, grid=256)
    assert r.richardson_gap < 1e-6 * r.value
    assert r.tube_volume == pytest.approx(2 * TOTAL_LENGTH * r.tube_radius)
    c = sample_counts(d, 4000, seed=21)
    ff = c * (c - 1)
    assert abs(ff.mean() - r.value) < 3 * ff.std(ddof=1) / np.sqrt(len(c))


def test_integral_k2_tube_matters():
    d = 50
    k = kostlan_kernel(d)
    with_t = KR.integrate_density(k, d, 2, grid=128)
    without = KR.integrate_density(k, d, 2, grid=128, include_tube=False)
    assert with_t.value - without.value == pytest.approx(with_t.tube_contribution)
    assert with_t.tube_contribution > 0


def test_integral_k3_runs_and_budget():
    d = 9
    k = kostlan_kernel(d)
    r = KR.integrate_density(k, d, 3, grid=16, mc_budget=2000)
    assert r.value > 0
    L, e = TOTAL_LENGTH, r.tube_radius
    assert r.tube_volume == pytest.approx(L ** 3 - L * (L - 3 * e) ** 2)
    with pytest.raises(KR.QuadratureBudgetExceeded):
        KR.integrate_density(k, d, 2, grid=4096, max_evals=10 ** 6)
    with pytest.raises(ValueError):
        KR.integrate_density(k, d, 4)


def test_gauss_legendre_exact():
    x, w = KR.composite_gauss_legendre(0.0, 2.0, 64)
    assert np.sum(w * x ** 7) == pytest.approx(2 ** 8 / 8, rel=1e-13)


def test_set_partitions():
    for k in range(0, 9):
        P = KR.set_partitions(k)
        assert len(P) == BELL[k]
        for part in P:
            flat = sorted(i for b in part for i in b)
            assert flat == list(range(k))
            assert [b[0] for b in part] == sorted(b[0] for b in part)
    with pytest.raises(ValueError):
        KR.set_partitions(9)


def test_moment_from_modified():
    n = 4
    mod = {m: KR.falling_factorial(n, m) for m in range(1, 4)}
    assert KR.moment_from_modified(mod, 3) == 64 == 24 + 36 + 4
    assert KR.moment_from_modified({1: 7.5}, 1) == 7.5
    with pytest.raises(KR.MissingTerm):
        KR.moment_from_modified({1: 1}, 2)
    keyed = {tuple(P): KR.falling_factorial(n, len(P)) for P in KR.set_partitions(3)}
    assert KR.moment_from_modified(keyed, 3, partition_terms=True) == 64


@given(st.integers(0, 400), st.integers(1, 5))
def test_partition_identity_exact(n, k):
    lhs, rhs = KR.partition_identity(n, k)
    assert lhs == rhs
    assert sum(KR.stirling2(k, j) * KR.falling_factorial(n, j) for j in range(k + 1)) == n ** k
