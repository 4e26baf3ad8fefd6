"""Hot numeric kernels, each with a numba loop version and a numpy version.

The public names at the bottom dispatch on :data:`selbias._accel.USE_NUMBA`.
Both variants are importable directly (``*_nb`` / ``*_np``) so tests and the
benchmark can compare them regardless of the flag.
"""

import numpy as np
from scipy.spatial.distance import cdist

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# squared euclidean distances
# ---------------------------------------------------------------------------


@njit(cache=True)
def sq_dists_nb(X, Y):
    m, d = X.shape
    n = Y.shape[0]
    out = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for k in range(d):
                diff = X[i, k] - Y[j, k]
                acc += diff * diff
            out[i, j] = acc
    return out


def sq_dists_np(X, Y):
    return cdist(X, Y, metric="sqeuclidean")


# ---------------------------------------------------------------------------
# exact projection onto {0 <= g <= upper} intersected with {lo <= sum(g) <= hi}
# ---------------------------------------------------------------------------


@njit(cache=True)
def _clip_sum_nb(v, tau, upper):
    s = 0.0
    for i in range(v.shape[0]):
        t = v[i] - tau
        if t > upper:
            s += upper
        elif t > 0.0:
            s += t
    return s


@njit(cache=True)
def project_box_slab_nb(v, upper, lo, hi):
    m = v.shape[0]
    out = np.empty(m)
    s0 = _clip_sum_nb(v, 0.0, upper)
    tau = 0.0
    if s0 > hi or s0 < lo:
        target = hi if s0 > hi else lo
        bps = np.empty(2 * m)
        for i in range(m):
            bps[i] = v[i]
            bps[m + i] = v[i] - upper
        bps.sort()
        # clip-sum is non-increasing in tau: bps[0] -> m*upper, bps[-1] -> 0
        a = 0
        b = 2 * m - 1
        while b - a > 1:
            mid = (a + b) // 2
            if _clip_sum_nb(v, bps[mid], upper) >= target:
                a = mid
            else:
                b = mid
        ta = bps[a]
        tb = bps[b]
        sa = _clip_sum_nb(v, ta, upper)
        sb = _clip_sum_nb(v, tb, upper)
        if sa == sb:
            tau = ta
        else:
            tau = ta + (sa - target) * (tb - ta) / (sa - sb)
    for i in range(m):
        t = v[i] - tau
        if t > upper:
            t = upper
        elif t < 0.0:
            t = 0.0
        out[i] = t
    return out


def _clip_sum_np(v, tau, upper):
    return float(np.clip(v - tau, 0.0, upper).sum())


def project_box_slab_np(v, upper, lo, hi):
    s0 = _clip_sum_np(v, 0.0, upper)
    if lo <= s0 <= hi:
        return np.clip(v, 0.0, upper)
    target = hi if s0 > hi else lo
    bps = np.sort(np.concatenate([v, v - upper]))
    a, b = 0, bps.size - 1
    while b - a > 1:
        mid = (a + b) // 2
        if _clip_sum_np(v, bps[mid], upper) >= target:
            a = mid
        else:
            b = mid
    sa = _clip_sum_np(v, bps[a], upper)
    sb = _clip_sum_np(v, bps[b], upper)
    tau = bps[a] if sa == sb else bps[a] + (sa - target) * (bps[b] - bps[a]) / (sa - sb)
    return np.clip(v - tau, 0.0, upper)


# ---------------------------------------------------------------------------
# KMM projected gradient loop on the (constant-free) squared objective
#   f(g) = g'Kg / m^2 - 2 g'r / (m n),   r = K_SU 1
# ---------------------------------------------------------------------------


@njit(cache=True)
def kmm_pgd_nb(K, r, n, upper, lo, hi, gamma0, step, tol, max_iter, keep_path):
    m = gamma0.shape[0]
    mm = float(m) * float(m)
    mn = float(m) * float(n)
    gamma = gamma0.copy()
    Kg = K @ gamma
    f = gamma @ Kg / mm - 2.0 * (gamma @ r) / mn
    history = np.empty(max_iter + 1)
    history[0] = f
    path = np.empty((max_iter + 1 if keep_path else 1, m))
    path[0] = gamma
    converged = False
    it = 0
    while it < max_iter:
        grad = 2.0 * Kg / mm - 2.0 * r / mn
        new = project_box_slab_nb(gamma - step * grad, upper, lo, hi)
        Kn = K @ new
        fn = new @ Kn / mm - 2.0 * (new @ r) / mn
        it += 1
        history[it] = fn
        if keep_path:
            path[it] = new
        done = f - fn < tol
        gamma = new
        Kg = Kn
        f = fn
        if done:
            converged = True
            break
    return gamma, history[: it + 1], path[: it + 1 if keep_path else 1], converged


def kmm_pgd_np(K, r, n, upper, lo, hi, gamma0, step, tol, max_iter, keep_path):
    m = gamma0.shape[0]
    mm = float(m) * m
    mn = float(m) * n
    gamma = gamma0.copy()
    Kg = K @ gamma
    f = gamma @ Kg / mm - 2.0 * (gamma @ r) / mn
    history = [f]
    path = [gamma.copy()]
    converged = False
    for _ in range(max_iter):
        grad = 2.0 * Kg / mm - 2.0 * r / mn
        new = project_box_slab_np(gamma - step * grad, upper, lo, hi)
        Kn = K @ new
        fn = new @ Kn / mm - 2.0 * (new @ r) / mn
        history.append(fn)
        if keep_path:
            path.append(new.copy())
        done = f - fn < tol
        gamma, Kg, f = new, Kn, fn
        if done:
            converged = True
            break
    return gamma, np.asarray(history), np.asarray(path), converged


# ---------------------------------------------------------------------------
# best variance-reduction split over all (feature, midpoint) candidates
# score of a split = SL^2/nL + SR^2/nR; larger is better
# ---------------------------------------------------------------------------


@njit(cache=True)
def best_split_nb(X, y, min_leaf):
    n, d = X.shape
    best_feat = -1
    best_thr = 0.0
    best_score = -np.inf
    total = 0.0
    for i in range(n):
        total += y[i]
    for f in range(d):
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[order, f]
        ys = y[order]
        left = 0.0
        for i in range(n - 1):
            left += ys[i]
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            if not xs[i] < xs[i + 1]:
                continue
            right = total - left
            score = left * left / nl + right * right / nr
            if score > best_score:
                best_score = score
                best_feat = f
                thr = 0.5 * (xs[i] + xs[i + 1])
                if not thr < xs[i + 1]:
                    thr = xs[i]
                best_thr = thr
    gain = best_score - total * total / n if best_feat >= 0 else 0.0
    return best_feat, best_thr, gain


def best_split_np(X, y, min_leaf):
    n, d = X.shape
    total = float(y.sum())
    best = (-1, 0.0, -np.inf)
    if n < 2 * min_leaf:
        return -1, 0.0, 0.0
    nl = np.arange(1, n)
    nr = n - nl
    for f in range(d):
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[order, f]
        left = np.cumsum(y[order])[:-1]
        right = total - left
        ok = (nl >= min_leaf) & (nr >= min_leaf) & (xs[:-1] < xs[1:])
        if not ok.any():
            continue
        score = np.where(ok, left * left / nl + right * right / nr, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best[2]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not thr < xs[i + 1]:
                thr = xs[i]
            best = (f, float(thr), float(score[i]))
    if best[0] < 0:
        return -1, 0.0, 0.0
    return best[0], best[1], best[2] - total * total / n


# ---------------------------------------------------------------------------
# routing through a fitted tree (arrays: feature, threshold, left, right, leaf)
# ---------------------------------------------------------------------------


@njit(cache=True)
def route_nb(X, feature, threshold, left, right, leaf):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = leaf[node]
    return out


def route_np(X, feature, threshold, left, right, leaf):
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        idx = np.nonzero(active)[0]
        nd = node[idx]
        go_left = X[idx, feature[nd]] <= threshold[nd]
        node[idx] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return leaf[node].astype(np.int64)


if USE_NUMBA:
    sq_dists = sq_dists_nb
    project_box_slab = project_box_slab_nb
    kmm_pgd = kmm_pgd_nb
    best_split = best_split_nb
    route = route_nb
else:
    sq_dists = sq_dists_np
    project_box_slab = project_box_slab_np
    kmm_pgd = kmm_pgd_np
    best_split = best_split_np
    route = route_np
