"""Compiled kernels for squared-error gradient boosting with depth-limited trees.

Trees are stored heap-style in fixed arrays of ``2**(max_depth + 1) - 1``
nodes: node ``j`` has children ``2j + 1`` and ``2j + 2``; ``feat[j] == -1``
marks a leaf. Split search is the exact greedy scan over presorted columns,
done level by level so each level costs one pass per feature.
"""

import numpy as np
from numba import njit

# A split must remove more than this fraction of the node's sum of squares.
_REL_GAIN_TOL = 1e-12


@njit(cache=True, nogil=True)
def build_tree(XT, order, resid, active, max_depth, min_leaf, feat, thr, val):
    p, N = XT.shape
    n_nodes = feat.shape[0]
    cnt = np.zeros(n_nodes, np.int64)
    s = np.zeros(n_nodes)
    ss = np.zeros(n_nodes)
    node_of = np.full(N, -1, np.int64)
    for r in range(N):
        if active[r]:
            node_of[r] = 0
            cnt[0] += 1
            s[0] += resid[r]
            ss[0] += resid[r] * resid[r]
    for j in range(n_nodes):
        feat[j] = -1
        thr[j] = 0.0
        val[j] = 0.0

    for depth in range(max_depth):
        first = (1 << depth) - 1
        width = 1 << depth
        is_open = np.zeros(width, np.bool_)
        any_open = False
        for k in range(width):
            j = first + k
            if cnt[j] >= 2 * min_leaf:
                is_open[k] = True
                any_open = True
        best_gain = np.zeros(width)
        best_feat = np.full(width, -1, np.int64)
        best_thr = np.zeros(width)
        if any_open:
            lc = np.zeros(width, np.int64)
            ls = np.zeros(width)
            last = np.zeros(width)
            for f in range(p):
                lc[:] = 0
                ls[:] = 0.0
                for t in range(N):
                    r = order[f, t]
                    j = node_of[r]
                    if j < first:
                        continue
                    k = j - first
                    if not is_open[k]:
                        continue
                    v = XT[f, r]
                    nl = lc[k]
                    nr = cnt[j] - nl
                    if nl >= min_leaf and nr >= min_leaf and v > last[k]:
                        sl = ls[k]
                        sr = s[j] - sl
                        gain = sl * sl / nl + sr * sr / nr - s[j] * s[j] / cnt[j]
                        if gain > best_gain[k]:
                            best_gain[k] = gain
                            best_feat[k] = f
                            a = last[k]
                            mid = a + (v - a) * 0.5
                            if not (mid >= a and mid < v):
                                mid = a
                            best_thr[k] = mid
                    lc[k] = nl + 1
                    ls[k] += resid[r]
                    last[k] = v
        split_any = False
        for k in range(width):
            j = first + k
            if cnt[j] == 0:
                continue
            sse = ss[j] - s[j] * s[j] / cnt[j]
            if best_feat[k] >= 0 and best_gain[k] > _REL_GAIN_TOL * ss[j] and sse > 0:
                feat[j] = best_feat[k]
                thr[j] = best_thr[k]
                split_any = True
            else:
                val[j] = s[j] / cnt[j]
        if not split_any:
            # every node on this level became a leaf
            return
        for r in range(N):
            j = node_of[r]
            if j < first:
                continue
            if feat[j] < 0:
                node_of[r] = -1
                continue
            c = 2 * j + 1 if XT[feat[j], r] <= thr[j] else 2 * j + 2
            node_of[r] = c
            cnt[c] += 1
            s[c] += resid[r]
            ss[c] += resid[r] * resid[r]

    first = (1 << max_depth) - 1
    for j in range(first, n_nodes):
        if cnt[j] > 0:
            val[j] = s[j] / cnt[j]


@njit(cache=True, nogil=True)
def tree_predict_into(XT, feat, thr, val, scale, out):
    N = XT.shape[1]
    for r in range(N):
        j = 0
        while feat[j] >= 0:
            j = 2 * j + 1 if XT[feat[j], r] <= thr[j] else 2 * j + 2
        out[r] += scale * val[j]


@njit(cache=True, nogil=True)
def _fold_mse(y, F, fold_id, n_val):
    n_folds = F.shape[0]
    acc = 0.0
    for f in range(n_folds):
        e = 0.0
        for r in range(y.shape[0]):
            if fold_id[r] == f:
                d = y[r] - F[f, r]
                e += d * d
        acc += e / n_val[f]
    return acc / n_folds


@njit(cache=True, nogil=True)
def cv_curve(XT, order, y, fold_id, n_folds, lr, max_depth, min_leaf, max_rounds, patience, tol):
    """Lock-step boosting on every fold; returns (best_round, curve up to the stop)."""
    N = y.shape[0]
    n_nodes = (1 << (max_depth + 1)) - 1
    F = np.zeros((n_folds, N))
    n_val = np.zeros(n_folds)
    for f in range(n_folds):
        tot = 0.0
        n_tr = 0
        for r in range(N):
            if fold_id[r] != f:
                tot += y[r]
                n_tr += 1
            else:
                n_val[f] += 1
        F[f, :] = tot / n_tr
    curve = np.empty(max_rounds + 1)
    curve[0] = _fold_mse(y, F, fold_id, n_val)
    best = 0
    best_mse = curve[0]
    stale = 0
    feat = np.empty(n_nodes, np.int64)
    thr = np.empty(n_nodes)
    val = np.empty(n_nodes)
    resid = np.empty(N)
    active = np.empty(N, np.bool_)
    last = 0
    for rnd in range(1, max_rounds + 1):
        for f in range(n_folds):
            for r in range(N):
                active[r] = fold_id[r] != f
                resid[r] = y[r] - F[f, r]
            build_tree(XT, order, resid, active, max_depth, min_leaf, feat, thr, val)
            tree_predict_into(XT, feat, thr, val, lr, F[f])
        curve[rnd] = _fold_mse(y, F, fold_id, n_val)
        last = rnd
        if curve[rnd] < best_mse - tol:
            best = rnd
            best_mse = curve[rnd]
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return best, curve[: last + 1].copy()


@njit(cache=True, nogil=True)
def boost(XT, order, y, rounds, lr, max_depth, min_leaf):
    """Full-data boosting for a fixed round count; returns (init, feat, thr, val, train_mse)."""
    N = y.shape[0]
    n_nodes = (1 << (max_depth + 1)) - 1
    init = 0.0
    for r in range(N):
        init += y[r]
    init /= N
    F = np.full(N, init)
    feats = np.full((rounds, n_nodes), -1, np.int64)
    thrs = np.zeros((rounds, n_nodes))
    vals = np.zeros((rounds, n_nodes))
    train_mse = np.empty(rounds + 1)
    resid = np.empty(N)
    active = np.ones(N, np.bool_)
    e = 0.0
    for r in range(N):
        e += (y[r] - F[r]) ** 2
    train_mse[0] = e / N
    for rnd in range(rounds):
        for r in range(N):
            resid[r] = y[r] - F[r]
        build_tree(XT, order, resid, active, max_depth, min_leaf, feats[rnd], thrs[rnd], vals[rnd])
        tree_predict_into(XT, feats[rnd], thrs[rnd], vals[rnd], lr, F)
        e = 0.0
        for r in range(N):
            e += (y[r] - F[r]) ** 2
        train_mse[rnd + 1] = e / N
    return init, feats, thrs, vals, train_mse


@njit(cache=True, nogil=True)
def ensemble_predict(XT, init, feats, thrs, vals, lr):
    out = np.full(XT.shape[1], init)
    for t in range(feats.shape[0]):
        tree_predict_into(XT, feats[t], thrs[t], vals[t], lr, out)
    return out
