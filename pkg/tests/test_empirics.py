from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kostlan import empirics as E
from kostlan.kacrice import stirling2


def test_degree_one_trivial():
    r = E.run_moments(1, 100, 4, seed=0)
    assert np.all(r.counts == 1)
    assert np.allclose(r.central, 0) and np.allclose(r.central_stderr, 0)
    assert r.raw.tolist() == [1.0] * 4


def test_mean_d16():
    r = E.run_moments(16, 10_000, 2, seed=3)
    assert abs(r.mean - 4) <= 3 * r.mean_stderr
    assert np.all(r.raw_stderr > 0) and np.all(r.central_stderr[1:] > 0)


def test_preconditions():
    with pytest.raises(ValueError):
        E.run_moments(10, 50, 2)
    with pytest.raises(ValueError):
        E.run_moments(10, 200, 6)
    with pytest.raises(ValueError):
        E.deviation_probability(10, 100, 0.0)


def test_moment_arithmetic_on_fixed_counts():
    counts = np.array([0, 2, 2, 4, 6, 2, 0, 4] * 20)
    r = E.run_moments(9, 0, 3, counts=counts, bootstrap=50)
    assert r.raw[1] == pytest.approx(np.mean(counts.astype(float) ** 2))
    assert r.falling[1] == pytest.approx(np.mean(counts * (counts - 1)))
    assert r.central[1] == pytest.approx(np.var(counts, ddof=1))
    assert r.central_true[0] == pytest.approx(counts.mean() - 3)
    # raw moments follow from falling factorials through Stirling numbers
    for k in range(1, 4):
        assert r.raw[k - 1] == pytest.approx(sum(stirling2(k, j) * (r.falling[j - 1] if j else 0)
                                                 for j in range(k + 1)))


def test_stirling_consistency_per_sample():
    c = E.sample_counts(50, 300, seed=1)
    assert E.stirling_consistent(c, 5)


def test_reproducible_and_thread_independent():
    a = E.run_moments(20, 600, 3, seed=9)
    b = E.run_moments(20, 600, 3, seed=9)
    assert np.array_equal(a.counts, b.counts) and np.array_equal(a.central_stderr, b.central_stderr)
    c = E.sample_counts(20, 600, seed=9, threads=2)
    assert np.array_equal(a.counts, c)


def test_deviation_probability():
    for d in (16, 50, 100):
        assert E.deviation_probability(d, 500, 10.0, seed=2)[0] == 0.0
    assert E.deviation_probability(1, 200, 0.5)[0] == 0.0
    p, se = E.deviation_probability(25, 2000, 0.5, seed=4)
    assert 0 < p < 1 and se == pytest.approx(np.sqrt(p * (1 - p) / 2000))


def fake_report(d, k, a, b, se=0.01):
    raw = np.zeros(k)
    err = np.full(k, se)
    raw[k - 1] = a * np.sqrt(d) ** k + b * np.sqrt(d) ** (k - 1)
    return SimpleNamespace(degree=d, raw=raw, raw_stderr=err)


@given(st.floats(0.5, 2.0), st.floats(-3, 3), st.integers(1, 4))
def test_fit_recovers_exact_coefficients(a, b, k):
    reps = [fake_report(d, k, a, b) for d in (16, 25, 64, 100, 256, 400)]
    f = E.fit_asymptotics(reps, k)
    assert f.a == pytest.approx(a, abs=1e-8) and f.b == pytest.approx(b, abs=1e-6)
    assert f.a_ci[0] < f.a < f.a_ci[1] and np.all(np.abs(f.residuals) < 1e-6)
    assert np.isfinite(f.C)


def test_fit_preconditions():
    with pytest.raises(E.IllConditionedFit):
        E.fit_asymptotics([fake_report(d, 1, 1, 0) for d in (16, 25, 36)], 1)
    with pytest.raises(E.IllConditionedFit):
        E.fit_asymptotics([fake_report(d, 1, 1, 0) for d in (16, 20, 25, 36)], 1)


def test_central_moment_decay():
    reps = [E.run_moments(d, 500, 3, seed=0) for d in (1, 4, 9)]
    t = E.central_moment_decay(reps, 2)
    assert t.ratio[0] == 0.0
    assert len(t.ratio) == 3
    with pytest.raises(ValueError):
        E.central_moment_decay(reps, 1)


def test_equal_area_cells():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((200_000, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    h = np.bincount(E.equal_area_cells(v, 32), minlength=32) / len(v)
    assert np.all(np.abs(h - 1 / 32) < 5 * np.sqrt(1 / 32 / len(v)))


def test_complex_equidistribution_small():
    q = E.complex_equidistribution(30, 40, 32, seed=1)
    assert q.counts.sum() == 30 * (40 - q.aborts)
    assert q.total_mean == 1.0
    assert 0 <= q.p_value <= 1
    assert abs(q.pair_moment - q.pair_target) < 0.05
