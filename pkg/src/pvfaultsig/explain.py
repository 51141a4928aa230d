"""Exact tree-path Shapley attributions for the forest's class probabilities.

tree_shap runs the polynomial-time recursion that walks every root-to-leaf
path once while maintaining the set of unique features split on so far,
each with the fraction of training cover that would follow the path if the
feature were absent (zero fraction) and its 0/1 routing when present (one
fraction). The permutation-weight polynomial is extended at every node and
unwound at leaves to read off each feature's weight. The attribution game
it solves exactly: v(S) = expected leaf distribution when features in S
are fixed to x and the rest are marginalized down splits in proportion to
node covers. brute_force_shapley evaluates that same game by subset
enumeration and is the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentCovers, TooManyFeatures
from .forest import ForestModel, Tree, predict_proba

WATERFALL_COLLAPSE_EPS = 1e-12
DEFAULT_CREDIBILITY_TOP_K = 20
OTHER_FEATURES_LABEL = "other features"


def _check_covers(tree: Tree) -> None:
    internal = np.flatnonzero(tree.children_right >= 0)
    if tree.cover[0] <= 0:
        raise InconsistentCovers("root cover must be positive")
    left = tree.cover[tree.children_left[internal]]
    right = tree.cover[tree.children_right[internal]]
    bad = np.abs(left + right - tree.cover[internal]) > 1e-9 * np.maximum(tree.cover[internal], 1.0)
    if bad.any():
        node = int(internal[np.argmax(bad)])
        raise InconsistentCovers(f"cover(parent) != cover(left) + cover(right) at node {node}")


def _extend(fi: list, zf: list, of: list, pw: list,
            pz: float, po: float, pf: int) -> None:
    ud = len(fi)
    fi.append(pf)
    zf.append(pz)
    of.append(po)
    pw.append(1.0 if ud == 0 else 0.0)
    for i in range(ud - 1, -1, -1):
        pw[i + 1] += po * pw[i] * (i + 1) / (ud + 1)
        pw[i] = pz * pw[i] * (ud - i) / (ud + 1)


def _unwind(fi: list, zf: list, of: list, pw: list, path_index: int) -> None:
    ud = len(fi) - 1
    po = of[path_index]
    pz = zf[path_index]
    next_one = pw[ud]
    for i in range(ud - 1, -1, -1):
        if po != 0.0:
            tmp = pw[i]
            pw[i] = next_one * (ud + 1) / ((i + 1) * po)
            next_one = tmp - pw[i] * pz * (ud - i) / (ud + 1)
        else:
            pw[i] = pw[i] * (ud + 1) / (pz * (ud - i))
    for i in range(path_index, ud):
        fi[i] = fi[i + 1]
        zf[i] = zf[i + 1]
        of[i] = of[i + 1]
    fi.pop()
    zf.pop()
    of.pop()
    pw.pop()


def _unwound_sum(zf: list, of: list, pw: list, path_index: int) -> float:
    ud = len(zf) - 1
    po = of[path_index]
    pz = zf[path_index]
    next_one = pw[ud]
    total = 0.0
    for i in range(ud - 1, -1, -1):
        if po != 0.0:
            tmp = next_one * (ud + 1) / ((i + 1) * po)
            total += tmp
            next_one = pw[i] - tmp * pz * (ud - i) / (ud + 1)
        else:
            total += pw[i] * (ud + 1) / (pz * (ud - i))
    return total


def _recurse(tree: Tree, x: np.ndarray, phi: np.ndarray, node: int,
             fi: list, zf: list, of: list, pw: list,
             pz: float, po: float, pf: int) -> None:
    fi, zf, of, pw = fi.copy(), zf.copy(), of.copy(), pw.copy()
    _extend(fi, zf, of, pw, pz, po, pf)
    ud = len(fi) - 1

    if tree.children_right[node] < 0:
        leaf_value = tree.value[node]
        for i in range(1, ud + 1):
            w = _unwound_sum(zf, of, pw, i)
            phi[fi[i]] += w * (of[i] - zf[i]) * leaf_value
        return

    f = int(tree.feature[node])
    left = int(tree.children_left[node])
    right = int(tree.children_right[node])
    hot, cold = (left, right) if x[f] <= tree.threshold[node] else (right, left)
    hot_zero = tree.cover[hot] / tree.cover[node]
    cold_zero = tree.cover[cold] / tree.cover[node]

    # a repeated feature on the path is unwound and re-extended at this node
    incoming_zero = incoming_one = 1.0
    path_index = next((i for i in range(1, ud + 1) if fi[i] == f), -1)
    if path_index >= 0:
        incoming_zero, incoming_one = zf[path_index], of[path_index]
        _unwind(fi, zf, of, pw, path_index)

    _recurse(tree, x, phi, hot, fi, zf, of, pw, hot_zero * incoming_zero, incoming_one, f)
    _recurse(tree, x, phi, cold, fi, zf, of, pw, cold_zero * incoming_zero, 0.0, f)


def tree_shap(tree: Tree, x, n_features: int | None = None) -> np.ndarray:
    """Exact Shapley values of one tree, shape (n_features, n_classes).

    O(leaves * depth^2); numerically identical to brute_force_shapley up to
    float rounding. Features absent from every split get exactly zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if n_features is None:
        n_features = len(x)
    _check_covers(tree)
    phi = np.zeros((n_features, tree.value.shape[1]))
    _recurse(tree, x, phi, 0, [], [], [], [], 1.0, 1.0, -1)
    return phi


def tree_expected_value(tree: Tree) -> np.ndarray:
    """Cover-weighted leaf mixture == the path-dependent base value."""
    leaves = np.flatnonzero(tree.children_right < 0)
    weights = tree.cover[leaves] / tree.cover[leaves].sum()
    return weights @ tree.value[leaves]


def brute_force_shapley(tree: Tree, x, n_features: int | None = None) -> np.ndarray:
    """Subset-enumeration Shapley oracle, exponential in used features.

    v(S): descend the tree, following x at splits on features in S and
    averaging both children by cover fraction elsewhere.
    """
    x = np.asarray(x, dtype=np.float64)
    if n_features is None:
        n_features = len(x)
    used = sorted({int(f) for f, r in zip(tree.feature, tree.children_right) if r >= 0})
    m = len(used)
    if m > 12:
        raise TooManyFeatures(f"tree uses {m} features; brute force capped at 12")
    bit_of = {f: i for i, f in enumerate(used)}

    cache: dict[tuple[int, int], np.ndarray] = {}

    def v(mask: int, node: int = 0) -> np.ndarray:
        key = (mask, node)
        got = cache.get(key)
        if got is not None:
            return got
        if tree.children_right[node] < 0:
            out = tree.value[node]
        else:
            f = int(tree.feature[node])
            left = int(tree.children_left[node])
            right = int(tree.children_right[node])
            if f in bit_of and (mask >> bit_of[f]) & 1:
                out = v(mask, left if x[f] <= tree.threshold[node] else right)
            else:
                out = (tree.cover[left] * v(mask, left)
                       + tree.cover[right] * v(mask, right)) / tree.cover[node]
        cache[key] = out
        return out

    phi = np.zeros((n_features, tree.value.shape[1]))
    fact = [math.factorial(i) for i in range(m + 1)]
    for j in used:
        jbit = 1 << bit_of[j]
        others = [f for f in used if f != j]
        for sub in range(1 << (m - 1)):
            mask = 0
            size = 0
            for i, f in enumerate(others):
                if (sub >> i) & 1:
                    mask |= 1 << bit_of[f]
                    size += 1
            weight = fact[size] * fact[m - size - 1] / fact[m]
            phi[j] += weight * (v(mask | jbit) - v(mask))
    return phi


@dataclass(frozen=True)
class Explanation:
    """Per-class Shapley decomposition of one forest prediction."""

    instance_id: str
    base_values: np.ndarray     # (n_classes,)
    phi: np.ndarray             # (n_features, n_classes)
    feature_values: np.ndarray  # (n_features,)
    predicted_class: int

    def reconstructed(self) -> np.ndarray:
        """base + sum(phi) per class; equals predict_proba by additivity."""
        return self.base_values + self.phi.sum(axis=0)


def forest_shap(model: ForestModel, x, instance_id: str = "") -> Explanation:
    """Average of per-tree attributions, matching soft-vote composition."""
    x = np.asarray(x, dtype=np.float64)
    phi = np.zeros((model.n_features, model.n_classes))
    base = np.zeros(model.n_classes)
    for tree in model.trees:
        phi += tree_shap(tree, x, model.n_features)
        base += tree_expected_value(tree)
    phi /= len(model.trees)
    base /= len(model.trees)
    predicted = int(np.argmax(predict_proba(model, x)))
    return Explanation(instance_id, base, phi, x.copy(), predicted)


@dataclass(frozen=True)
class GlobalSummary:
    """Dataset-level mean |phi| per feature and class, with raw matrices."""

    n_instances: int
    mean_abs: np.ndarray        # (n_features, n_classes)
    rankings: tuple[tuple[tuple[int, float], ...], ...]  # per class, desc
    phi: np.ndarray             # (n_instances, n_features, n_classes)
    feature_values: np.ndarray  # (n_instances, n_features)

    def top_features(self, class_id: int, k: int) -> list[int]:
        return [f for f, _ in self.rankings[class_id][:k]]


def global_summary(model: ForestModel, X) -> GlobalSummary:
    X = np.asarray(X, dtype=np.float64)
    phi = np.stack([forest_shap(model, row).phi for row in X])
    mean_abs = np.abs(phi).mean(axis=0)
    d = model.n_features
    rankings = []
    for c in range(model.n_classes):
        order = np.lexsort((np.arange(d), -mean_abs[:, c]))
        rankings.append(tuple((int(f), float(mean_abs[f, c])) for f in order))
    return GlobalSummary(len(X), mean_abs, tuple(rankings), phi, X.copy())


@dataclass(frozen=True)
class WaterfallEntry:
    feature_name: str
    feature_value: float | None  # None for the collapsed remainder
    phi: float


@dataclass(frozen=True)
class Waterfall:
    instance_id: str
    predicted_class: int
    base_value: float
    entries: tuple[WaterfallEntry, ...]

    @property
    def total(self) -> float:
        return self.base_value + sum(e.phi for e in self.entries)


def waterfall_from_explanation(exp: Explanation, feature_names) -> Waterfall:
    """Contributions toward the predicted class, largest |phi| first.

    Contributions below 1e-12 collapse into one trailing remainder entry,
    keeping base + sum(entries) equal to the predicted probability.
    """
    c = exp.predicted_class
    col = exp.phi[:, c]
    order = np.lexsort((np.arange(len(col)), -np.abs(col)))
    entries = []
    tiny = []
    for f in order:
        if abs(col[f]) < WATERFALL_COLLAPSE_EPS:
            tiny.append(col[f])
        else:
            entries.append(WaterfallEntry(feature_names[f], float(exp.feature_values[f]), float(col[f])))
    if tiny:
        entries.append(WaterfallEntry(OTHER_FEATURES_LABEL, None, float(np.sum(tiny))))
    return Waterfall(exp.instance_id, c, float(exp.base_values[c]), tuple(entries))


def local_waterfall(model: ForestModel, x, instance_id: str = "") -> Waterfall:
    return waterfall_from_explanation(forest_shap(model, x, instance_id), model.feature_names)


def credibility_check(local: Explanation, summary: GlobalSummary,
                      top_k: int = DEFAULT_CREDIBILITY_TOP_K) -> float:
    """Overlap in [0,1] of the instance's top-k features with the global
    top-k of its predicted class."""
    c = local.predicted_class
    d = local.phi.shape[0]
    k = min(top_k, d)
    col = np.abs(local.phi[:, c])
    order = np.lexsort((np.arange(d), -col))
    local_top = set(int(i) for i in order[:k])
    global_top = set(summary.top_features(c, k))
    return len(local_top & global_top) / k
