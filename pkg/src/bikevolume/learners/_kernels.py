"""Compiled inner loops for tree growing and prediction.

Falls back to plain Python when numba is unavailable; results are identical,
only slower.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def level_best_splits(sorted_x, order, node_of_row, g, h, node_g, node_h, allowed,
                      reg_lambda, gamma, min_child_weight, rel_tol):
    """Best split per open node of one tree level, scanning presorted columns once.

    Gain = 0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma. A
    candidate wins only with strictly larger gain, so ties resolve to the lowest
    feature index and then the lowest threshold.
    """
    n_nodes = node_g.shape[0]
    n_feat = order.shape[0]
    best_gain = np.zeros(n_nodes)
    best_feat = np.full(n_nodes, -1, dtype=np.int64)
    best_thr = np.zeros(n_nodes)
    parent_score = np.empty(n_nodes)
    for k in range(n_nodes):
        parent_score[k] = node_g[k] * node_g[k] / (node_h[k] + reg_lambda)
    acc_g = np.zeros(n_nodes)
    acc_h = np.zeros(n_nodes)
    last_x = np.zeros(n_nodes)
    seen = np.zeros(n_nodes, dtype=np.bool_)
    for f in range(n_feat):
        usable = False
        for k in range(n_nodes):
            if allowed[k, f]:
                usable = True
                break
        if not usable:
            continue
        acc_g[:] = 0.0
        acc_h[:] = 0.0
        seen[:] = False
        col = order[f]
        xs = sorted_x[f]
        for i in range(col.shape[0]):
            r = col[i]
            k = node_of_row[r]
            if k < 0 or not allowed[k, f]:
                continue
            x = xs[i]
            if seen[k] and x != last_x[k]:
                hl = acc_h[k]
                hr = node_h[k] - hl
                if hl >= min_child_weight and hr >= min_child_weight and hl > 0.0 and hr > 0.0:
                    gl = acc_g[k]
                    gr = node_g[k] - gl
                    gain = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
                                  - parent_score[k]) - gamma
                    if gain > best_gain[k] and gain > rel_tol * parent_score[k]:
                        best_gain[k] = gain
                        best_feat[k] = f
                        thr = last_x[k] + (x - last_x[k]) / 2.0
                        if thr >= x:
                            thr = last_x[k]
                        best_thr[k] = thr
            acc_g[k] += g[r]
            acc_h[k] += h[r]
            last_x[k] = x
            seen[k] = True
    return best_gain, best_feat, best_thr


@njit(cache=True)
def predict_forest(X, feature, threshold, left, right, value, roots, scales):
    """Sum of ``scales[t] * tree_t(x)`` over trees stored back to back in flat arrays."""
    n = X.shape[0]
    out = np.zeros(n)
    for t in range(roots.shape[0]):
        root = roots[t]
        s = scales[t]
        for i in range(n):
            node = root
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += s * value[node]
    return out
