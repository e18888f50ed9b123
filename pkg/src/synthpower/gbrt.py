"""Gradient-boosted regression trees (squared loss) with time-ordered CV grid search.

Trees are grown level by level with an exact greedy split search: every
midpoint between consecutive distinct feature values is a candidate, ties go
to the lowest feature index and then the lowest threshold. Per-feature sort
orders are computed once per training matrix and reused by every tree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .metrics import nrmse

FORMAT_VERSION = 1
DEFAULT_N_ESTIMATORS = 300
DEFAULT_DEPTHS = (2, 4, 6, 8)
DEFAULT_FOLDS = 3
# half-decade ladder 1e-6 ... 1 with the intermediate points printed as 3.1eX
DEFAULT_LEARNING_RATES = tuple(
    float(f"{m}e{e}") for e in range(-6, 0) for m in ("1", "3.1")
) + (1.0,)
_GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class GbrtConfig:
    learning_rate: float
    n_estimators: int = DEFAULT_N_ESTIMATORS
    max_depth: int = 3
    min_samples_leaf: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be non-negative")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Flat binary tree; ``feature == -1`` marks a leaf. Samples with
    ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0)

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(len(X))
        _add_tree(X, self.feature, self.threshold, self.left, self.right, self.value, 1.0, out)
        return out

    def records(self) -> list[str]:
        """Preorder node records; layout-independent identity of the tree."""
        out: list[str] = []
        _preorder(self, 0, out)
        return out

    def __eq__(self, other):
        if not isinstance(other, RegressionTree):
            return NotImplemented
        return self.records() == other.records()


@dataclass(eq=False)
class GbrtModel:
    base_value: float
    trees: list
    learning_rate: float
    n_features: int
    train_mse: list = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, GbrtModel):
            return NotImplemented
        return (
            self.base_value == other.base_value
            and self.learning_rate == other.learning_rate
            and self.n_features == other.n_features
            and self.trees == other.trees
        )


# --------------------------------------------------------------------------
# numba kernels

@njit(cache=True)
def _grow_tree(X, order, sorted_x, r, max_depth, min_leaf, feature, threshold, left, right, value, node_of):
    n, n_feat = X.shape
    cap = feature.shape[0]
    node_sum = np.zeros(cap)
    node_sq = np.zeros(cap)
    node_cnt = np.zeros(cap, dtype=np.int64)
    for i in range(n):
        node_of[i] = 0
        node_sum[0] += r[i]
        node_sq[0] += r[i] * r[i]
    node_cnt[0] = n
    feature[0] = -1
    n_nodes = 1
    level_start = 0
    level_end = 1

    for _ in range(max_depth):
        m = level_end - level_start
        active = np.zeros(m, dtype=np.bool_)
        any_active = False
        for s in range(m):
            node = level_start + s
            if node_cnt[node] >= 2 * min_leaf:
                active[s] = True
                any_active = True
        if not any_active:
            break
        best_gain = np.zeros(m)
        best_feat = -np.ones(m, dtype=np.int64)
        best_thr = np.zeros(m)
        lsum = np.zeros(m)
        lcnt = np.zeros(m, dtype=np.int64)
        last = np.zeros(m)
        tot = np.zeros(m)
        cnt = np.zeros(m, dtype=np.int64)
        parent = np.zeros(m)
        margin = np.zeros(m)
        for s in range(m):
            node = level_start + s
            tot[s] = node_sum[node]
            cnt[s] = node_cnt[node]
            if node_cnt[node] > 0:
                parent[s] = node_sum[node] * node_sum[node] / node_cnt[node]
            # gains closer than this count as ties, so equal partitions
            # found on two features resolve to the lower feature index
            margin[s] = _GAIN_RTOL * max(node_sq[node] - parent[s], 0.0)
        slot = np.empty(n, dtype=np.int32)
        for i in range(n):
            node = node_of[i]
            slot[i] = node - level_start if node >= level_start and active[node - level_start] else -1
        for f in range(n_feat):
            lsum[:] = 0.0
            lcnt[:] = 0
            for j in range(n):
                i = order[f, j]
                s = slot[i]
                if s < 0:
                    continue
                x = sorted_x[f, j]
                c = lcnt[s]
                if c >= min_leaf and x > last[s]:
                    rc = cnt[s] - c
                    if rc >= min_leaf:
                        ls = lsum[s]
                        rs = tot[s] - ls
                        gain = ls * ls / c + rs * rs / rc - parent[s]
                        if gain > best_gain[s] + margin[s]:
                            best_gain[s] = gain
                            best_feat[s] = f
                            thr = 0.5 * (last[s] + x)
                            if thr >= x:
                                thr = last[s]
                            best_thr[s] = thr
                lsum[s] += r[i]
                lcnt[s] = c + 1
                last[s] = x

        new_start = n_nodes
        for s in range(m):
            node = level_start + s
            if best_feat[s] >= 0 and best_gain[s] > _GAIN_RTOL * node_sq[node] and n_nodes + 2 <= cap:
                feature[node] = best_feat[s]
                threshold[node] = best_thr[s]
                left[node] = n_nodes
                right[node] = n_nodes + 1
                for child in (n_nodes, n_nodes + 1):
                    feature[child] = -1
                    node_sum[child] = 0.0
                    node_sq[child] = 0.0
                    node_cnt[child] = 0
                n_nodes += 2
        if n_nodes == new_start:
            break
        for i in range(n):
            node = node_of[i]
            if node >= level_start and feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    child = left[node]
                else:
                    child = right[node]
                node_of[i] = child
                node_sum[child] += r[i]
                node_sq[child] += r[i] * r[i]
                node_cnt[child] += 1
        level_start = new_start
        level_end = n_nodes

    for node in range(n_nodes):
        if feature[node] < 0:
            left[node] = -1
            right[node] = -1
            threshold[node] = 0.0
            value[node] = node_sum[node] / node_cnt[node] if node_cnt[node] > 0 else 0.0
        else:
            value[node] = 0.0
    return n_nodes


@njit(cache=True)
def _add_tree(X, feature, threshold, left, right, value, scale, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += scale * value[node]


@njit(cache=True)
def _boost(X, order, sorted_x, y, base, lr, n_estimators, max_depth, min_leaf, cap):
    n = X.shape[0]
    feats = -np.ones((n_estimators, cap), dtype=np.int64)
    thrs = np.zeros((n_estimators, cap))
    lefts = -np.ones((n_estimators, cap), dtype=np.int64)
    rights = -np.ones((n_estimators, cap), dtype=np.int64)
    vals = np.zeros((n_estimators, cap))
    sizes = np.zeros(n_estimators, dtype=np.int64)
    mse = np.zeros(n_estimators + 1)
    F = np.full(n, base)
    r = y - F
    node_of = np.zeros(n, dtype=np.int64)
    mse[0] = np.mean(r * r)
    for m in range(n_estimators):
        sizes[m] = _grow_tree(X, order, sorted_x, r, max_depth, min_leaf, feats[m], thrs[m], lefts[m], rights[m], vals[m], node_of)
        for i in range(n):
            F[i] += lr * vals[m, node_of[i]]
            r[i] = y[i] - F[i]
        mse[m + 1] = np.mean(r * r)
    return feats, thrs, lefts, rights, vals, sizes, mse


# --------------------------------------------------------------------------
# public API

def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D sample matrix")
    return X


def _sort_orders(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature stable sort order and the matching sorted values, both (F, n)."""
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int32))
    sorted_x = np.ascontiguousarray(np.take_along_axis(X.T, order, axis=1))
    return order, sorted_x


def _capacity(max_depth: int, n: int) -> int:
    return int(min(2 ** min(max_depth + 1, 62) - 1, 2 * n - 1))


def fit_regression_tree(X, r, max_depth: int, min_samples_leaf: int = 1) -> RegressionTree:
    """Greedy CART fit of residuals ``r``; leaves hold residual means."""
    X = _as_matrix(X)
    r = np.ascontiguousarray(r, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("empty data")
    if len(X) != len(r):
        raise ValueError("X and r lengths differ")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    cap = _capacity(max_depth, len(X))
    arrays = (
        -np.ones(cap, dtype=np.int64),
        np.zeros(cap),
        -np.ones(cap, dtype=np.int64),
        -np.ones(cap, dtype=np.int64),
        np.zeros(cap),
    )
    node_of = np.zeros(len(X), dtype=np.int64)
    size = _grow_tree(X, *_sort_orders(X), r, max_depth, min_samples_leaf, *arrays, node_of)
    return RegressionTree(*(a[:size].copy() for a in arrays))


def _fit_presorted(X, presorted, y, config: GbrtConfig) -> GbrtModel:
    base = math.fsum(y) / len(y)
    cap = _capacity(config.max_depth, len(X))
    feats, thrs, lefts, rights, vals, sizes, mse = _boost(
        X, *presorted, y, base, config.learning_rate, config.n_estimators,
        config.max_depth, config.min_samples_leaf, cap,
    )
    trees = [
        RegressionTree(feats[m, :k].copy(), thrs[m, :k].copy(), lefts[m, :k].copy(), rights[m, :k].copy(), vals[m, :k].copy())
        for m, k in enumerate(sizes)
    ]
    return GbrtModel(base, trees, config.learning_rate, X.shape[1], mse.tolist())


def fit_gbrt(X, y, config: GbrtConfig) -> GbrtModel:
    """Stagewise squared-loss boosting starting from the target mean.

    ``model.train_mse[m]`` is the training MSE after ``m`` trees.
    """
    X = _as_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if len(X) != len(y):
        raise ValueError("X and y lengths differ")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    return _fit_presorted(X, _sort_orders(X), y, config)


def predict(model: GbrtModel, X) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    out = np.full(len(X), model.base_value)
    for t in model.trees:
        _add_tree(X, t.feature, t.threshold, t.left, t.right, t.value, model.learning_rate, out)
    return out


def contiguous_folds(n: int, k: int) -> list[np.ndarray]:
    if n < k:
        raise ValueError(f"fewer samples ({n}) than folds ({k})")
    return np.array_split(np.arange(n), k)


def grid_search_cv(
    X,
    y,
    lr_grid=DEFAULT_LEARNING_RATES,
    depth_grid=DEFAULT_DEPTHS,
    k: int = DEFAULT_FOLDS,
    n_estimators: int = DEFAULT_N_ESTIMATORS,
    min_samples_leaf: int = 1,
    return_scores: bool = False,
):
    """Pick the config with the lowest mean validation nRMSE over k time-ordered folds.

    Folds are contiguous blocks in sample order. Ties go to the smaller
    learning rate, then the smaller depth.
    """
    X = _as_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if len(X) != len(y):
        raise ValueError("X and y lengths differ")
    folds = contiguous_folds(len(y), k)
    prepared = []
    for val_idx in folds:
        mask = np.ones(len(y), dtype=bool)
        mask[val_idx] = False
        X_tr = np.ascontiguousarray(X[mask])
        if len(X_tr) < 2:
            raise ValueError("training folds too small")
        prepared.append((X_tr, _sort_orders(X_tr), y[mask], X[val_idx], y[val_idx]))

    scores = {}
    for lr in sorted(lr_grid):
        for depth in sorted(depth_grid):
            cfg = GbrtConfig(lr, n_estimators, depth, min_samples_leaf)
            errs = []
            for X_tr, order, y_tr, X_val, y_val in prepared:
                model = _fit_presorted(X_tr, order, y_tr, cfg)
                errs.append(nrmse(y_val, predict(model, X_val)))
            scores[cfg] = float(np.mean(errs))
    best = None
    for cfg, score in scores.items():  # insertion order is (lr, depth) ascending
        if best is None or score < scores[best]:
            best = cfg
    return (best, scores) if return_scores else best


# --------------------------------------------------------------------------
# serialization

def _preorder(tree: RegressionTree, node: int, lines: list[str]) -> None:
    if tree.feature[node] < 0:
        lines.append(f"L {float(tree.value[node])!r}")
        return
    lines.append(f"S {int(tree.feature[node])} {float(tree.threshold[node])!r}")
    _preorder(tree, tree.left[node], lines)
    _preorder(tree, tree.right[node], lines)


def dumps_model(model: GbrtModel) -> str:
    lines = [
        f"gbrt-model {FORMAT_VERSION}",
        f"base_value {model.base_value!r}",
        f"learning_rate {model.learning_rate!r}",
        f"n_features {model.n_features}",
        f"n_trees {len(model.trees)}",
    ]
    for tree in model.trees:
        body: list[str] = []
        _preorder(tree, 0, body)
        lines.append(f"tree {len(body)}")
        lines.extend(body)
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> GbrtModel:
    lines = iter(text.splitlines())

    def field_(name):
        key, val = next(lines).split(" ", 1)
        if key != name:
            raise ValueError(f"expected {name!r}, found {key!r}")
        return val

    version = field_("gbrt-model")
    if int(version) != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    base = float(field_("base_value"))
    lr = float(field_("learning_rate"))
    n_features = int(field_("n_features"))
    trees = []
    for _ in range(int(field_("n_trees"))):
        records = [next(lines).split() for _ in range(int(field_("tree")))]
        feature, threshold, left, right, value = [], [], [], [], []

        def build(pos):
            idx = len(feature)
            rec = records[pos]
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if rec[0] == "L":
                value[idx] = float(rec[1])
                return idx, pos + 1
            feature[idx] = int(rec[1])
            threshold[idx] = float(rec[2])
            queue_left, pos = build(pos + 1)
            queue_right, pos = build(pos)
            left[idx], right[idx] = queue_left, queue_right
            return idx, pos

        build(0)
        trees.append(
            RegressionTree(
                np.array(feature, dtype=np.int64),
                np.array(threshold),
                np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64),
                np.array(value),
            )
        )
    return GbrtModel(base, trees, lr, n_features)


def save_model(model: GbrtModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> GbrtModel:
    return loads_model(Path(path).read_text())
