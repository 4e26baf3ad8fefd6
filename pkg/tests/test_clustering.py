import math

import numpy as np
import pytest

from selbias import clustering
from selbias.clustering import (
    GAIN_RTOL,
    assign_counts,
    cluster_distance_bounds,
    fit_tree,
    frequency_bound,
    weights,
)


def sse(v):
    return float(((v - v.mean()) ** 2).sum()) if v.size else 0.0


def oracle_splits(X, y, min_leaf):
    """Exhaustive greedy CART: every (feature, midpoint) scored by direct SSE."""
    out = []

    def grow(idx):
        Xn, yn = X[idx], y[idx]
        best = None
        for f in range(X.shape[1]):
            vals = np.unique(Xn[:, f])
            for a, b in zip(vals[:-1], vals[1:]):
                thr = 0.5 * (a + b)
                mask = Xn[:, f] <= thr
                if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
                    continue
                total = sse(yn[mask]) + sse(yn[~mask])
                if best is None or total < best[0]:
                    best = (total, f, thr)
        if best is not None and sse(yn) - best[0] > GAIN_RTOL * float(yn @ yn):
            out.append((best[1], best[2]))
            mask = Xn[:, best[1]] <= best[2]
            grow(idx[mask])
            grow(idx[~mask])

    grow(np.arange(len(y)))
    return out


def test_constant_labels_single_leaf(rng):
    part = fit_tree(rng.normal(size=(20, 2)), np.full(20, 3.7))
    assert part.k == 1 and part.splits == ()


def test_two_cluster_split():
    X = np.array([[0.0]] * 4 + [[1.0]] * 4)
    y = np.array([0.0] * 4 + [10.0] * 4)
    part = fit_tree(X, y, min_leaf=4)
    assert part.k == 2
    assert 0.0 < part.splits[0].threshold < 1.0


@pytest.mark.parametrize("seed", range(8))
def test_split_sequence_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 2))
    y = rng.normal(size=20) + 2 * (X[:, 0] > 0)
    part = fit_tree(X, y, min_leaf=4)
    got = [(s.feature, s.threshold) for s in part.splits]
    expected = oracle_splits(X, y, 4)
    assert [f for f, _ in got] == [f for f, _ in expected]
    np.testing.assert_allclose([t for _, t in got], [t for _, t in expected], rtol=0, atol=1e-15)


def test_min_leaf_respected(rng):
    X = rng.normal(size=(100, 3))
    y = rng.normal(size=100)
    part = fit_tree(X, y, min_leaf=7)
    assert part.s_count.min() >= 7
    assert part.s_count.sum() == 100
    np.testing.assert_array_equal(np.bincount(part.route(X), minlength=part.k), part.s_count)


def test_tie_break_lowest_feature():
    X = np.array([[0.0, 0.0]] * 4 + [[1.0, 1.0]] * 4)
    y = np.array([0.0] * 4 + [1.0] * 4)
    assert fit_tree(X, y).splits[0].feature == 0


def test_duplicate_column_no_split():
    X = np.ones((10, 1))
    assert fit_tree(X, np.arange(10.0)).k == 1


def test_errors():
    with pytest.raises(ValueError):
        fit_tree(np.empty((0, 1)), np.empty(0))
    with pytest.raises(ValueError):
        fit_tree(np.zeros((3, 1)), np.zeros(3), min_leaf=4)


def test_u_equals_s_gives_unit_weights(rng):
    X = rng.normal(size=(40, 2))
    y = X[:, 0] + rng.normal(size=40) * 0.1
    part = assign_counts(fit_tree(X, y), X)
    np.testing.assert_array_equal(weights(part, X), np.ones(40))


def test_single_leaf_ratio(rng):
    S = rng.normal(size=(5, 2))
    U = np.vstack([S, rng.normal(size=(5, 2))])
    part = assign_counts(fit_tree(S, np.zeros(5), min_leaf=4), U)
    np.testing.assert_array_equal(weights(part, S), np.full(5, 2.0))


def test_hand_counted_two_leaves():
    S = np.array([[0.0], [0.1], [5.0], [5.1], [5.2], [5.3]])
    y = np.array([0.0, 0.0, 9.0, 9.0, 9.0, 9.0])
    part = fit_tree(S, y, min_leaf=2)
    assert part.k == 2
    U = np.vstack([S[:2], [[0.2], [0.3], [-0.5], [0.05]], S[2:]])  # leaf 1: 6 in U, leaf 2: 4 in U
    part = assign_counts(part, U)
    np.testing.assert_array_equal(part.u_count, [6, 4])
    np.testing.assert_array_equal(part.s_count, [2, 4])
    np.testing.assert_array_equal(weights(part, S), [3.0, 3.0, 1.0, 1.0, 1.0, 1.0])
    assert part.c_max == 6 and part.n == 10 and part.m == 6
    assert part.q0 == pytest.approx(1 / 3)


def test_partition_property(rng):
    S = rng.normal(size=(60, 3))
    U = np.vstack([S, rng.normal(size=(140, 3))])
    part = assign_counts(fit_tree(S, S[:, 1] ** 2), U)
    assert part.u_count.sum() == 200 and part.s_count.sum() == 60
    assert np.all(part.u_count >= part.s_count)
    assert np.all(weights(part, S) > 0)


def test_deterministic(rng):
    X, y = rng.normal(size=(50, 2)), rng.normal(size=50)
    a, b = fit_tree(X, y), fit_tree(X, y)
    assert a.splits == b.splits


def test_nan_routing_rejected(rng):
    part = assign_counts(fit_tree(rng.normal(size=(10, 1)), np.arange(10.0)), rng.normal(size=(20, 1)))
    with pytest.raises(ValueError):
        weights(part, [[np.nan]])


def test_counts_required(rng):
    part = fit_tree(rng.normal(size=(10, 1)), np.arange(10.0))
    with pytest.raises(ValueError):
        weights(part, [[0.0]])


def test_frequency_bound_examples():
    # pick delta so that log(2 m') + log(1/delta) == p0 n
    p0, n = 0.5, 4
    delta = 2 * math.exp(-p0 * n)
    assert frequency_bound(1, n, p0, delta) == pytest.approx(1.0, abs=1e-15)
    assert frequency_bound(10, 10_000, 0.01, 0.05) == pytest.approx(math.sqrt(2 * math.log(20) / 100), abs=1e-15)
    assert frequency_bound(10, 10_000, 0.01, 0.05) == pytest.approx(0.24478, abs=1e-5)
    assert frequency_bound(3, 2000, 0.1, 0.1) == pytest.approx(frequency_bound(3, 1000, 0.1, 0.1) / math.sqrt(2),
                                                               rel=1e-15)
    with pytest.raises(ValueError):
        frequency_bound(1, 10, 0.0, 0.1)


def test_cluster_distance_bounds():
    l1, l2 = cluster_distance_bounds(2, 5, 4, 0.1, 1000, 20, 0.1)
    assert l1 == pytest.approx(4 * math.sqrt(20 * (math.log(8) + math.log(10)) / 2000), abs=1e-15)
    assert l2 == pytest.approx(l1 / math.sqrt(20), rel=1e-14)


def test_cluster_bound_reduces_to_point_form():
    # uniform clusters: c_max * k == m gives B^2 sqrt((log 2k + log 1/delta)/(q0 n))
    m, k = 12, 4
    l1, _ = cluster_distance_bounds(1.0, m // k, k, 1.0, 50, m, 0.2)
    assert l1 == pytest.approx(frequency_bound(k, 50, 1.0, 0.2), rel=1e-14)


def test_frequency_consistency_small(rng):
    q = np.linspace(0.2, 0.8, 5)
    n = 20_000
    bound = frequency_bound(5, n, 1 / 5, 0.05)
    fails = 0
    for _ in range(40):
        cluster = rng.integers(0, 5, n)
        kept = rng.random(n) < q[cluster]
        q_hat = np.bincount(cluster[kept], minlength=5) / np.bincount(cluster, minlength=5)
        fails += np.max(np.abs(q_hat - q)) > bound
    assert fails <= 2 + 3 * math.sqrt(40 * 0.05)


def test_module_constant():
    assert clustering.DEFAULT_MIN_LEAF == 4
