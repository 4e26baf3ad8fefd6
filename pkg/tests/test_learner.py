import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.kernel_ridge import KernelRidge

from selbias import bounds, harness
from selbias.kernels import KernelSpec, cross_gram, gram
from selbias.learner import Hypothesis, WeightedSample, cost, fit, normalize, objective, predict

from .conftest import gaussian_scalar


def dense_oracle(X, y, W, spec, lam):
    """alpha from the unsymmetrized stationarity system, generic LU solve."""
    m = len(y)
    K = np.array([[gaussian_scalar(X[i], X[j], spec.bandwidth) for j in range(m)] for i in range(m)])
    W = np.asarray(W) / np.sum(W)
    return np.linalg.solve(np.diag(W) @ K + lam * np.eye(m), W * y)


def test_single_point_closed_form(unit_kernel):
    h = fit(WeightedSample([[0.0]], [2.0], [1.0]), unit_kernel, 1.0)
    assert h.dual_coefficients[0] == pytest.approx(1.0, abs=1e-15)
    assert predict(h, [[0.0]])[0] == pytest.approx(1.0, abs=1e-15)


def test_uniform_weights_match_unweighted_krr(rng):
    X = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    spec, lam = KernelSpec(1.3), 0.01
    h = fit(WeightedSample(X, y, np.ones(25)), spec, lam)
    ref = KernelRidge(alpha=25 * lam, kernel="rbf", gamma=1 / (2 * spec.bandwidth**2)).fit(X, y)
    Xt = rng.normal(size=(10, 3))
    np.testing.assert_allclose(predict(h, Xt), ref.predict(Xt), atol=1e-10)


def test_random_instance_vs_dense_oracle(rng):
    spec = KernelSpec(0.8)
    X, y, W = rng.normal(size=(3, 2)), rng.normal(size=3), rng.uniform(0.1, 1, 3)
    h = fit(WeightedSample(X, y, W), spec, 0.3)
    np.testing.assert_allclose(h.dual_coefficients, dense_oracle(X, y, W, spec, 0.3), atol=1e-10)


def test_zero_weight_points_get_zero_coefficient(rng):
    X, y = rng.normal(size=(5, 2)), rng.normal(size=5)
    W = np.array([0.2, 0.0, 0.3, 0.5, 0.0])
    h = fit(WeightedSample(X, y, W), KernelSpec(1.0), 0.1)
    assert h.dual_coefficients[1] == 0.0 and h.dual_coefficients[4] == 0.0
    np.testing.assert_allclose(h.dual_coefficients, dense_oracle(X, y, W, KernelSpec(1.0), 0.1), atol=1e-12)


def test_predict_zero_and_single(unit_kernel):
    h0 = Hypothesis(np.zeros(2), np.array([[0.0], [1.0]]), unit_kernel, 1.0)
    assert predict(h0, [[0.3]])[0] == 0.0
    h1 = Hypothesis(np.array([1.0]), np.array([[0.4, 0.1]]), unit_kernel, 1.0)
    assert predict(h1, np.array([0.4, 0.1]))[0] == 1.0


def test_predict_scalar_oracle(rng):
    spec = KernelSpec(1.1)
    X, y = rng.normal(size=(3, 4)), rng.normal(size=3)
    h = fit(WeightedSample(X, y, [1, 2, 3]), spec, 0.05)
    x = rng.normal(size=4)
    expected = sum(h.dual_coefficients[i] * gaussian_scalar(X[i], x, 1.1) for i in range(3))
    assert predict(h, x)[0] == pytest.approx(expected, abs=1e-12)


def test_predict_dimension_mismatch(unit_kernel):
    h = Hypothesis(np.ones(1), np.zeros((1, 3)), unit_kernel, 1.0)
    with pytest.raises(ValueError):
        predict(h, np.zeros((2, 2)))


def test_cost_examples(rng, unit_kernel):
    h = Hypothesis(np.array([1.0]), np.array([[0.0]]), unit_kernel, 1.0)
    assert cost(h, [[0.0]], [1.0]) == 0.0
    assert cost(h, [[0.0]], [3.0]) == 4.0
    x, yv = rng.normal(size=(1, 1)), rng.normal()
    assert cost(h, x, yv) == pytest.approx((gaussian_scalar(x[0], [0.0], 1.0) - yv) ** 2, abs=1e-14)


def test_validation(unit_kernel):
    with pytest.raises(ValueError):
        WeightedSample([[0.0], [1.0]], [1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        WeightedSample([[0.0]], [1.0], [0.0])
    with pytest.raises(ValueError):
        WeightedSample([[0.0]], [1.0], [-1.0])
    with pytest.raises(ValueError):
        fit(WeightedSample([[0.0]], [1.0], [1.0]), unit_kernel, 0.0)


def test_normalize():
    np.testing.assert_allclose(normalize([1, 3]), [0.25, 0.75])


def test_objective_first_order_optimality(rng):
    X, y = rng.normal(size=(12, 2)), rng.normal(size=12)
    sample = WeightedSample(X, y, rng.uniform(0, 1, 12))
    h = fit(sample, KernelSpec(1.0), 0.05)
    base = objective(h, sample)
    for _ in range(50):
        delta = rng.normal(size=12)
        delta *= 1e-3 / np.linalg.norm(delta)
        moved = Hypothesis(h.dual_coefficients + delta, h.support_points, h.kernel, h.lam)
        assert objective(moved, sample) >= base - 1e-15


def test_permutation_invariance(rng):
    X, y, W = rng.normal(size=(15, 3)), rng.normal(size=15), rng.uniform(0, 1, 15)
    perm = rng.permutation(15)
    spec = KernelSpec(1.2)
    Xt = rng.normal(size=(7, 3))
    a = predict(fit(WeightedSample(X, y, W), spec, 0.02), Xt)
    b = predict(fit(WeightedSample(X[perm], y[perm], W[perm]), spec, 0.02), Xt)
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 2.0))
def test_stability_envelopes(seed, lam):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(15, 2)), rng.uniform(-2, 2, 15)
    spec = KernelSpec(1.0)
    probe = harness.empirical_stability_probe(X, y, spec, lam, 6, seed)
    assert np.all(probe.max_delta <= probe.envelope_l1 + 1e-8)
    assert np.all(probe.max_delta <= probe.envelope_l2 + 1e-8)
    lmax = gram(spec, X).lambda_max
    assert probe.report.beta_l2 == pytest.approx(bounds.beta_coefficients(2 * probe.M, 1.0, lam, lmax).beta_l2)


def test_kernel_gram_used_when_given(rng):
    X, y = rng.normal(size=(6, 2)), rng.normal(size=6)
    spec = KernelSpec(1.0)
    K = cross_gram(spec, X, X)
    a = fit(WeightedSample(X, y, np.ones(6)), spec, 0.1, K=K)
    b = fit(WeightedSample(X, y, np.ones(6)), spec, 0.1)
    np.testing.assert_allclose(a.dual_coefficients, b.dual_coefficients, atol=1e-14)
