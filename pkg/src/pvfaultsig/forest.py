"""CART decision trees and a seeded random-forest classifier.

Trees are stored as flat node arrays (children/feature/threshold plus a
per-node class distribution and sample cover) because the explanation
module consumes covers directly. Induction is greedy Gini minimization
over midpoint thresholds; all tie-breaks are value-based (lowest feature
index, then lowest threshold) so training is order-independent and
reproducible for a fixed seed regardless of per-tree parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrainSet, FeatureCountMismatch, LabelOutOfRange
from .ingest import N_STATES
from .util import STREAM_CV, STREAM_SEARCH, STREAM_TREE, derive_rng

MAX_FEATURES_RULES = ("sqrt", "log2", "all")
# preference order for CV ties, independent of the search-space declaration
_RULE_TIE_ORDER = {"log2": 0, "sqrt": 1, "all": 2}

# guards against 1-ulp phantom impurity improvements
_SPLIT_EPS = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 18
    max_features_rule: str = "log2"
    min_samples_leaf: int = 1
    max_depth: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_features_rule not in MAX_FEATURES_RULES:
            raise ValueError(f"unknown max_features_rule {self.max_features_rule!r}")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class Tree:
    """Flat preorder node arrays; children are -1 at leaves."""

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray    # (n_nodes, n_classes), class distribution at node
    cover: np.ndarray    # training samples reaching each node

    @property
    def n_nodes(self) -> int:
        return len(self.cover)

    def is_leaf(self, node: int) -> bool:
        return self.children_right[node] < 0


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_classes: int
    n_features: int
    feature_names: tuple[str, ...]
    hyperparams: Hyperparams
    seed: int


def subset_size(rule: str, n_features: int) -> int:
    if rule == "all":
        return n_features
    if rule == "sqrt":
        return max(1, int(math.isqrt(n_features)))
    if rule == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    raise ValueError(f"unknown max_features_rule {rule!r}")


def gini_impurity(labels, n_classes: int = N_STATES) -> float:
    """1 - sum(p_c^2) over the label multiset."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


class _TreeBuilder:
    def __init__(self, X, y, rng, rule, min_samples_leaf, max_depth, n_classes):
        self.X = X
        self.y = y
        self.rng = rng
        self.rule = rule
        self.msl = min_samples_leaf
        self.max_depth = max_depth
        self.n_classes = n_classes
        self.m = subset_size(rule, X.shape[1])
        self.left: list[int] = []
        self.right: list[int] = []
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.value: list[np.ndarray] = []
        self.cover: list[float] = []

    def build(self) -> Tree:
        # explicit stack: recursion depth is unbounded with min_samples_leaf=1
        root_rows = np.arange(len(self.y))
        stack = [(root_rows, 0, -1, False)]  # rows, depth, parent, is_right
        while stack:
            rows, depth, parent, is_right = stack.pop()
            node = self._emit(rows)
            if parent >= 0:
                (self.right if is_right else self.left)[parent] = node
            split = self._find_split(rows, depth)
            if split is None:
                continue
            f, thr, left_rows, right_rows = split
            self.feature[node] = f
            self.threshold[node] = thr
            # push right first so the left subtree is emitted next (preorder)
            stack.append((right_rows, depth + 1, node, True))
            stack.append((left_rows, depth + 1, node, False))
        return Tree(
            children_left=np.asarray(self.left, dtype=np.int64),
            children_right=np.asarray(self.right, dtype=np.int64),
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            value=np.asarray(self.value, dtype=np.float64),
            cover=np.asarray(self.cover, dtype=np.float64),
        )

    def _emit(self, rows) -> int:
        counts = np.bincount(self.y[rows], minlength=self.n_classes)
        self.left.append(-1)
        self.right.append(-1)
        self.feature.append(-1)
        self.threshold.append(0.0)  # unused at leaves; keeps arrays JSON-safe
        self.value.append(counts / len(rows))
        self.cover.append(float(len(rows)))
        return len(self.cover) - 1

    def _find_split(self, rows, depth):
        n = len(rows)
        if n < 2 * self.msl:
            return None
        if self.max_depth is not None and depth >= self.max_depth:
            return None
        y = self.y[rows]
        counts = np.bincount(y, minlength=self.n_classes).astype(np.float64)
        if np.max(counts) == n:  # pure
            return None
        parent_score = float((counts * counts).sum()) / n

        d = self.X.shape[1]
        chosen = self.rng.choice(d, size=self.m, replace=False)
        chosen.sort()  # ascending evaluation order => lowest index wins ties

        onehot = np.zeros((n, self.n_classes))
        onehot[np.arange(n), y] = 1.0

        best_score = parent_score + _SPLIT_EPS * n
        best = None
        for f in chosen:
            values = self.X[rows, f]
            order = np.argsort(values, kind="stable")
            sv = values[order]
            boundaries = sv[:-1] != sv[1:]
            if self.msl > 1:
                sizes = np.arange(1, n)
                boundaries &= (sizes >= self.msl) & (n - sizes >= self.msl)
            if not boundaries.any():
                continue
            cum = np.cumsum(onehot[order], axis=0)[:-1]  # left counts per cut
            left_n = np.arange(1, n, dtype=np.float64)
            right = counts - cum
            # maximizing ssL/nL + ssR/nR == minimizing weighted child Gini
            score = (cum * cum).sum(axis=1) / left_n + (right * right).sum(axis=1) / (n - left_n)
            score[~boundaries] = -np.inf
            i = int(np.argmax(score))  # first max => lowest threshold
            if score[i] > best_score:
                best_score = float(score[i])
                best = (int(f), (float(sv[i]) + float(sv[i + 1])) / 2.0)
        if best is None:
            return None
        f, thr = best
        go_left = self.X[rows, f] <= thr
        return f, thr, rows[go_left], rows[~go_left]


def train_tree(X, y, rng: np.random.Generator, max_features_rule: str = "all",
               min_samples_leaf: int = 1, max_depth: int | None = None,
               n_classes: int = N_STATES) -> Tree:
    """Grow one CART tree; feature subsets are drawn from `rng` per node.

    Rows route left when value <= threshold. Thresholds are midpoints of
    consecutive distinct sorted values; a node becomes a leaf when pure,
    when it holds fewer than 2*min_samples_leaf rows, or when no candidate
    split reduces the weighted Gini impurity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise EmptyTrainSet("cannot train a tree on zero rows")
    if y.min() < 0 or y.max() >= n_classes:
        raise LabelOutOfRange(f"labels must lie in 0..{n_classes - 1}")
    return _TreeBuilder(X, y, rng, max_features_rule, min_samples_leaf, max_depth, n_classes).build()


def _train_one(X, y, hp: Hyperparams, seed: int, stream_prefix: tuple[int, ...], t: int) -> Tree:
    rng = derive_rng(seed, *stream_prefix, STREAM_TREE, t)
    boot = rng.integers(0, len(y), size=len(y))
    return train_tree(X[boot], y[boot], rng, hp.max_features_rule,
                      hp.min_samples_leaf, hp.max_depth)


def train_forest(X, y, hyperparams: Hyperparams = Hyperparams(), seed: int = 0,
                 feature_names: tuple[str, ...] | None = None, threads: int = 1,
                 stream_prefix: tuple[int, ...] = ()) -> ForestModel:
    """Bootstrap ensemble; tree t's randomness derives from (seed, t) only,
    so any thread count produces the identical model."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise EmptyTrainSet("cannot train a forest on zero rows")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    indices = range(hyperparams.n_trees)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = tuple(pool.map(lambda t: _train_one(X, y, hyperparams, seed, stream_prefix, t), indices))
    else:
        trees = tuple(_train_one(X, y, hyperparams, seed, stream_prefix, t) for t in indices)
    return ForestModel(trees, N_STATES, X.shape[1], tuple(feature_names), hyperparams, seed)


def _tree_leaf_ids(tree: Tree, X: np.ndarray) -> np.ndarray:
    idx = np.zeros(len(X), dtype=np.int64)
    while True:
        internal = tree.children_right[idx] >= 0
        if not internal.any():
            return idx
        rows = np.flatnonzero(internal)
        at = idx[rows]
        go_left = X[rows, tree.feature[at]] <= tree.threshold[at]
        idx[rows] = np.where(go_left, tree.children_left[at], tree.children_right[at])


def predict_proba(model: ForestModel, X) -> np.ndarray:
    """Soft voting: arithmetic mean of reached leaf class distributions."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise FeatureCountMismatch(
            f"model expects {model.n_features} features, got {X.shape[1]}")
    acc = np.zeros((len(X), model.n_classes))
    for tree in model.trees:
        acc += tree.value[_tree_leaf_ids(tree, X)]
    acc /= len(model.trees)
    return acc[0] if single else acc


def predict(model: ForestModel, X) -> np.ndarray | int:
    """Argmax of predict_proba; ties break toward the lowest class id."""
    proba = predict_proba(model, X)
    if proba.ndim == 1:
        return int(np.argmax(proba))
    return np.argmax(proba, axis=1)


def _node_gini(tree: Tree) -> np.ndarray:
    return 1.0 - (tree.value * tree.value).sum(axis=1)


def feature_importance(model: ForestModel) -> np.ndarray:
    """Mean decrease in impurity, averaged over trees, normalized to sum 1.

    A feature used in no split scores exactly 0; a forest of pure leaves
    (no splits anywhere) falls back to the uniform vector.
    """
    total = np.zeros(model.n_features)
    for tree in model.trees:
        gini = _node_gini(tree)
        internal = np.flatnonzero(tree.children_right >= 0)
        if len(internal) == 0:
            continue
        left = tree.children_left[internal]
        right = tree.children_right[internal]
        decrease = (tree.cover[internal] * gini[internal]
                    - tree.cover[left] * gini[left]
                    - tree.cover[right] * gini[right])
        np.add.at(total, tree.feature[internal], decrease)
    total /= len(model.trees)
    total = np.maximum(total, 0.0)  # clamp -1ulp rounding residue
    s = total.sum()
    if s <= 0.0:
        return np.full(model.n_features, 1.0 / model.n_features)
    return total / s


# --- randomized hyperparameter search ---

@dataclass(frozen=True)
class SearchSpace:
    n_trees_options: tuple[int, ...] = tuple(range(2, 41))
    rules: tuple[str, ...] = ("sqrt", "log2")
    min_samples_leaf: int = 1
    max_depth: int | None = None

    def grid(self) -> list[Hyperparams]:
        return [Hyperparams(t, r, self.min_samples_leaf, self.max_depth)
                for t in self.n_trees_options for r in self.rules]


@dataclass(frozen=True)
class CVEntry:
    hyperparams: Hyperparams
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float


@dataclass(frozen=True)
class CVResult:
    entries: tuple[CVEntry, ...]
    folds: int
    seed: int


def stratified_kfold(y, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Per-class shuffle, then round-robin deal into `folds` buckets."""
    y = np.asarray(y, dtype=np.int64)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        if len(idx) < folds:
            raise ValueError(f"class {label} has {len(idx)} rows; needs >= {folds} for {folds}-fold CV")
        perm = rng.permutation(idx)
        for i, row in enumerate(perm):
            buckets[i % folds].append(int(row))
    return [np.asarray(sorted(b), dtype=np.int64) for b in buckets]


def randomized_search(X, y, space: SearchSpace = SearchSpace(), n_candidates: int = 30,
                      folds: int = 5, seed: int = 0,
                      threads: int = 1) -> tuple[Hyperparams, CVResult]:
    """Seeded random sample of the grid, scored by stratified k-fold accuracy.

    If the grid holds no more than n_candidates combinations the whole grid
    is evaluated. Ties break toward fewer trees, then rule order
    (log2, sqrt, all).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    grid = space.grid()
    rng = derive_rng(seed, STREAM_SEARCH)
    if len(grid) <= n_candidates:
        candidates = grid
    else:
        picks = rng.choice(len(grid), size=n_candidates, replace=False)
        candidates = [grid[i] for i in sorted(picks)]

    fold_rows = stratified_kfold(y, folds, derive_rng(seed, STREAM_CV))
    all_rows = np.arange(len(y))
    entries = []
    for hp in candidates:
        rule_id = MAX_FEATURES_RULES.index(hp.max_features_rule)
        accs = []
        for k, held in enumerate(fold_rows):
            train_rows = np.setdiff1d(all_rows, held, assume_unique=True)
            model = train_forest(X[train_rows], y[train_rows], hp, seed=seed,
                                 threads=threads,
                                 stream_prefix=(STREAM_CV, hp.n_trees, rule_id, k))
            pred = predict(model, X[held])
            accs.append(float(np.mean(pred == y[held])))
        entries.append(CVEntry(hp, tuple(accs), float(np.mean(accs))))

    best = min(entries, key=lambda e: (-e.mean_accuracy, e.hyperparams.n_trees,
                                       _RULE_TIE_ORDER[e.hyperparams.max_features_rule]))
    return best.hyperparams, CVResult(tuple(entries), folds, seed)
