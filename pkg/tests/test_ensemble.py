import numpy as np
import pytest
from hypothesis import given, strategies as st
from math import comb

from kostlan import ensemble as E
from kostlan.kernels import angle_to_arc
from kostlan.roots import count_real_roots_rp1


def test_binomial_weights_exact_and_large():
    w = E.binomial_weights(10)
    assert np.allclose(w ** 2, [comb(10, k) for k in range(11)], rtol=1e-13)
    big = E.binomial_weights(2000)
    assert np.all(np.isfinite(big)) and big[0] == 1.0


def test_determinism_and_streams():
    a = E.sample_real(20, E.rng_for(5, 3)).coeffs
    b = E.sample_real(20, E.rng_for(5, 3)).coeffs
    c = E.sample_real(20, E.rng_for(5, 4)).coeffs
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_coefficient_covariance_identity():
    rng = E.rng_for(1, 0)
    X = np.array([E.sample_real(10, rng).coeffs for _ in range(100_000)])
    C = X.T @ X / len(X)
    se = np.where(np.eye(11, dtype=bool), np.sqrt(2), 1.0) / np.sqrt(len(X))
    assert np.all(np.abs(C - np.eye(11)) < 3.5 * se)


def test_complex_parts_half_variance():
    rng = E.rng_for(2, 0)
    Z = np.array([E.sample_complex(5, rng).coeffs for _ in range(40_000)]).ravel()
    se = np.sqrt(2 * 0.25 / len(Z))
    assert abs(np.var(Z.real) - 0.5) < 3 * se and abs(np.var(Z.imag) - 0.5) < 3 * se


def test_invalid_samples():
    with pytest.raises(ValueError):
        E.sample_real(0, E.rng_for(0, 0))
    with pytest.raises(ValueError):
        E.SectionSample(3, "real", np.zeros(3))
    with pytest.raises(ValueError):
        E.SectionSample(2, "real", np.array([1.0, np.nan, 0]))


def test_evaluate_trivial():
    one = E.SectionSample(6, "real", np.eye(7)[0])
    t = np.array([-5.0, -0.3, 0.0, 2.0, 40.0])
    assert np.allclose(E.evaluate(one, t), 1.0)
    top = E.SectionSample(6, "real", np.eye(7)[6])
    assert np.allclose(E.evaluate(top, t), t ** 6, rtol=1e-14)
    assert np.allclose(E.evaluate_deriv(top, t), 6 * t ** 5, rtol=1e-14)


@given(st.integers(1, 40), st.integers(0, 10**6), st.floats(-30, 30))
def test_evaluate_matches_numpy_poly(d, seed, t):
    s = E.sample_real(d, E.rng_for(seed, 0))
    c = s.poly_coeffs()
    p = np.polynomial.Polynomial(c)
    scale = np.sum(np.abs(c) * np.abs(t) ** np.arange(d + 1))
    assert abs(E.evaluate(s, t) - p(t)) <= 1e-12 * scale
    dscale = np.sum(np.abs(c[1:]) * np.arange(1, d + 1) * np.abs(t) ** np.arange(d)) + 1e-300
    assert abs(E.evaluate_deriv(s, t) - p.deriv()(t)) <= 1e-12 * dscale


def test_variance_matches_kernel_diagonal():
    d, t = 50, 0.3
    rng = E.rng_for(3, 0)
    v = np.array([E.evaluate(E.sample_real(d, rng), t) for _ in range(100_000)])
    target = (1 + t * t) ** d
    se = target * np.sqrt(2 / len(v))
    assert abs(np.mean(v ** 2) - target) < 3 * se


def test_normalized_sign_and_zero():
    rng = np.random.default_rng(0)
    s = E.sample_real(30, E.rng_for(4, 0))
    u = rng.uniform(0, np.sqrt(np.pi), 100)
    t = np.tan(u * np.sqrt(np.pi))
    assert np.array_equal(np.sign(E.evaluate_normalized(s, u)), np.sign(E.evaluate(s, t)))
    z = E.SectionSample(4, "real", np.zeros(5))
    assert E.evaluate_normalized(z, 0.3) == 0.0


def test_normalized_unit_variance():
    rng = E.rng_for(5, 0)
    v = np.array([E.evaluate_normalized(E.sample_real(100, rng), 0.5) for _ in range(40_000)])
    assert abs(np.mean(v * v) - 1) < 3 * np.sqrt(2 / len(v))


def test_normalized_correlation_matches_kernel():
    d, gap = 20, 0.25
    rng = E.rng_for(6, 0)
    u0, u1 = 0.4, 0.4 + angle_to_arc(gap)
    X = np.array([E.evaluate_normalized(E.sample_real(d, rng), [u0, u1]) for _ in range(40_000)])
    r = np.mean(X[:, 0] * X[:, 1])
    se = np.std(X[:, 0] * X[:, 1]) / np.sqrt(len(X))
    assert abs(r - np.cos(gap) ** d) < 3 * se


@given(st.integers(1, 60), st.integers(0, 10**6), st.floats(1e-3, 1e3))
def test_scaling_leaves_zero_count(d, seed, c):
    s = E.sample_real(d, E.rng_for(seed, 1))
    assert count_real_roots_rp1(s).total == count_real_roots_rp1(s.scaled(c)).total
