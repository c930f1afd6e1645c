"""Array-backed regression trees grown level by level on presorted columns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import level_best_splits, predict_forest

# Guards against splits whose gain is pure rounding noise (e.g. constant targets).
_REL_GAIN_TOL = 1e-12
_MAX_LEVELS = 64


@dataclass
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                depth[self.left[k]] = depth[self.right[k]] = depth[k] + 1
        return int(depth.max()) if self.n_nodes else 0

    def predict(self, X) -> np.ndarray:
        return predict_trees([self], np.ones(1), X)

    def to_dict(self) -> dict:
        nodes = []
        for k in range(self.n_nodes):
            node = {"id": k, "value": float(self.value[k]), "cover": float(self.cover[k])}
            if self.feature[k] >= 0:
                node.update(feature=int(self.feature[k]), threshold=float(self.threshold[k]),
                            left=int(self.left[k]), right=int(self.right[k]), gain=float(self.gain[k]))
            nodes.append(node)
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        nodes = d["nodes"]
        n = len(nodes)
        t = cls(np.full(n, -1, dtype=np.int64), np.zeros(n), np.full(n, -1, dtype=np.int64),
                np.full(n, -1, dtype=np.int64), np.zeros(n), np.zeros(n), np.zeros(n))
        for node in nodes:
            k = node["id"]
            t.value[k] = node["value"]
            t.cover[k] = node.get("cover", 0.0)
            if "feature" in node:
                t.feature[k] = node["feature"]
                t.threshold[k] = node["threshold"]
                t.left[k] = node["left"]
                t.right[k] = node["right"]
                t.gain[k] = node.get("gain", 0.0)
        return t


def presort(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column sort of ``X``: (n_features, n_rows) row indices and the sorted values.

    The sort is stable so that fits are reproducible.
    """
    if X.shape[1] == 0:
        return np.zeros((0, X.shape[0]), dtype=np.int64), np.zeros((0, X.shape[0]))
    order = np.argsort(X, axis=0, kind="stable")
    values = np.take_along_axis(X, order, axis=0)
    return np.ascontiguousarray(order.T, dtype=np.int64), np.ascontiguousarray(values.T, dtype=np.float64)


def grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    *,
    presorted: tuple[np.ndarray, np.ndarray] | None = None,
    active: np.ndarray | None = None,
    max_depth: int | None = None,
    min_child_weight: float = 0.0,
    min_split_weight: float = 0.0,
    reg_lambda: float = 0.0,
    gamma: float = 0.0,
    columns: np.ndarray | None = None,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow one tree minimising sum(g * v + 0.5 * h * v**2) per leaf.

    Leaves take ``-G / (H + reg_lambda)``. With ``g = -w*y``, ``h = w`` and no
    regularisation this is weighted CART with variance-reduction splits.

    ``active`` masks the rows this tree sees, ``columns`` restricts the tree to a
    column subset and ``max_features`` draws that many of them afresh per node.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, n_feat = X.shape
    g = np.ascontiguousarray(g, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    order, sorted_x = presort(X) if presorted is None else presorted
    active = np.ones(n, dtype=bool) if active is None else (np.asarray(active, dtype=bool) & (h > 0))
    base_allowed = np.zeros(n_feat, dtype=bool)
    if columns is None:
        base_allowed[:] = True
    else:
        base_allowed[np.asarray(columns, dtype=int)] = True
    allowed_idx = np.flatnonzero(base_allowed)
    depth_cap = _MAX_LEVELS if max_depth is None else int(max_depth)

    feature, threshold, left, right, value, gain, cover = [], [], [], [], [], [], []

    def new_node(gs, hs):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(-gs / (hs + reg_lambda) if hs + reg_lambda > 0 else 0.0)
        gain.append(0.0)
        cover.append(hs)
        return len(feature) - 1

    node_of_row = np.where(active, 0, -1).astype(np.int64)
    rows = np.flatnonzero(active)
    root = new_node(float(np.sum(g[rows])), float(np.sum(h[rows])))
    open_ids = [root]
    depth = 0
    while open_ids and depth < depth_cap and n_feat > 0:
        m = len(open_ids)
        sel = node_of_row[rows]
        node_g = np.bincount(sel, weights=g[rows], minlength=m)
        node_h = np.bincount(sel, weights=h[rows], minlength=m)
        if max_features is not None and max_features < allowed_idx.size:
            keys = rng.random((m, allowed_idx.size))
            picks = np.argpartition(keys, max_features - 1, axis=1)[:, :max_features]
            allowed = np.zeros((m, n_feat), dtype=bool)
            np.put_along_axis(allowed, allowed_idx[picks], True, axis=1)
        else:
            allowed = np.repeat(base_allowed[None, :], m, axis=0)
        allowed[(node_h < min_split_weight) | (node_h <= 0)] = False
        best_gain, best_feat, best_thr = level_best_splits(
            sorted_x, order, node_of_row, g, h, node_g, node_h, allowed,
            float(reg_lambda), float(gamma), float(min_child_weight), _REL_GAIN_TOL,
        )
        left_local = np.full(m, -1, dtype=np.int64)
        right_local = np.full(m, -1, dtype=np.int64)
        next_open = []
        for k in range(m):
            if best_feat[k] < 0:
                continue
            nid = open_ids[k]
            feature[nid] = int(best_feat[k])
            threshold[nid] = float(best_thr[k])
            gain[nid] = float(best_gain[k])
            left_local[k] = len(next_open)
            next_open.append(None)
            right_local[k] = len(next_open)
            next_open.append(None)
        if not next_open:
            break
        feat_of = best_feat[sel]
        split_rows = feat_of >= 0
        go_left = np.zeros(rows.size, dtype=bool)
        r_split = rows[split_rows]
        go_left[split_rows] = X[r_split, feat_of[split_rows]] <= best_thr[sel[split_rows]]
        child = np.where(go_left, left_local[sel], right_local[sel])
        node_of_row[rows] = np.where(split_rows, child, -1)
        rows = rows[split_rows]
        sel = node_of_row[rows]
        child_g = np.bincount(sel, weights=g[rows], minlength=len(next_open))
        child_h = np.bincount(sel, weights=h[rows], minlength=len(next_open))
        for k in range(m):
            if best_feat[k] < 0:
                continue
            nid = open_ids[k]
            a, b = left_local[k], right_local[k]
            left[nid] = next_open[a] = new_node(float(child_g[a]), float(child_h[a]))
            right[nid] = next_open[b] = new_node(float(child_g[b]), float(child_h[b]))
        open_ids = next_open
        depth += 1
        if rows.size < order.shape[1] // 2:
            keep = node_of_row[order] >= 0
            order = order[keep].reshape(n_feat, rows.size)
            sorted_x = sorted_x[keep].reshape(n_feat, rows.size)

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
        np.asarray(gain, dtype=np.float64),
        np.asarray(cover, dtype=np.float64),
    )


def predict_trees(trees, scales, X) -> np.ndarray:
    """Sum of ``scales[i] * trees[i](X)``, accumulated tree by tree in order."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if not trees:
        return np.zeros(X.shape[0])
    offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]])
    feature = np.concatenate([t.feature for t in trees])
    left = np.concatenate([np.where(t.left >= 0, t.left + o, -1) for t, o in zip(trees, offsets)])
    right = np.concatenate([np.where(t.right >= 0, t.right + o, -1) for t, o in zip(trees, offsets)])
    threshold = np.concatenate([t.threshold for t in trees])
    value = np.concatenate([t.value for t in trees])
    return predict_forest(X, feature, threshold, left, right, value,
                          offsets.astype(np.int64), np.asarray(scales, dtype=np.float64))
