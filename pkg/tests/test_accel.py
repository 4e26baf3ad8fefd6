"""The numba and numpy variants of every hot kernel agree."""

import numpy as np
import pytest

from selbias import _accel, _kernels


def test_backend_reports_flag():
    assert _accel.backend() in {"numba", "numpy"}
    assert (_accel.backend() == "numba") == _accel.USE_NUMBA


def test_sq_dists_agree(rng):
    X = rng.normal(size=(17, 4))
    Y = rng.normal(size=(9, 4))
    np.testing.assert_allclose(_kernels.sq_dists_nb(X, Y), _kernels.sq_dists_np(X, Y), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("upper,lo,hi", [(3.0, 8.0, 12.0), (1000.0, 10.0, 10.0), (1.5, 9.5, 10.5)])
def test_projection_agrees(rng, upper, lo, hi):
    for _ in range(50):
        v = rng.normal(scale=3.0, size=10) + 1.0
        a = _kernels.project_box_slab_nb(v, upper, lo, hi)
        b = _kernels.project_box_slab_np(v, upper, lo, hi)
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_kmm_loop_agrees(rng):
    X = rng.normal(size=(12, 2))
    K = np.exp(-((X[:, None] - X[None]) ** 2).sum(-1) / 2)
    r = K[:, :7].sum(axis=1) * 3.0
    args = (K, r, 21, 5.0, 12.0, 12.0, np.ones(12), 144 / (2 * np.linalg.eigvalsh(K)[-1]), 1e-12, 500, True)
    g1, h1, p1, c1 = _kernels.kmm_pgd_nb(*args)
    g2, h2, p2, c2 = _kernels.kmm_pgd_np(*args)
    np.testing.assert_allclose(g1, g2, atol=1e-10)
    np.testing.assert_allclose(h1, h2, atol=1e-12)
    assert c1 == c2 and p1.shape == p2.shape


def test_best_split_agrees(rng):
    for _ in range(20):
        X = np.round(rng.normal(size=(30, 3)), 1)
        y = rng.normal(size=30)
        f1, t1, g1 = _kernels.best_split_nb(X, y, 4)
        f2, t2, g2 = _kernels.best_split_np(X, y, 4)
        assert f1 == f2 and t1 == t2
        assert g1 == pytest.approx(g2, rel=1e-10, abs=1e-12)


def test_route_agrees(rng):
    feature = np.array([0, -1, 1, -1, -1])
    threshold = np.array([0.0, 0.0, 0.5, 0.0, 0.0])
    left = np.array([1, -1, 3, -1, -1])
    right = np.array([2, -1, 4, -1, -1])
    leaf = np.array([-1, 0, -1, 1, 2])
    X = rng.normal(size=(40, 2))
    np.testing.assert_array_equal(_kernels.route_nb(X, feature, threshold, left, right, leaf),
                                  _kernels.route_np(X, feature, threshold, left, right, leaf))
