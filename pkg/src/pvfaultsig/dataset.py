"""Train/test preparation: min-max normalization (train-fitted), seeded
stratified 70:30 split, and top-k feature selection by forest importance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassTooSmall, EmptyTrainSet
from .signatures import SignatureTable
from .util import STREAM_FEATURE_SELECT, STREAM_SPLIT, derive_rng

DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_TOP_K = 30


@dataclass(frozen=True)
class NormalizationParams:
    feature_min: np.ndarray
    feature_max: np.ndarray

    def __post_init__(self):
        if np.any(self.feature_min > self.feature_max):
            raise ValueError("feature_min exceeds feature_max")


@dataclass(frozen=True)
class SplitIndices:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


@dataclass(frozen=True)
class FeatureMask:
    selected: tuple[int, ...]   # descending importance, ties by lower index
    importance: np.ndarray      # all features, sums to 1

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected indices must be distinct")


def fit_normalization(table: SignatureTable, train: SplitIndices) -> NormalizationParams:
    """Per-feature extrema over training rows only (no test leakage)."""
    if len(train.train_rows) == 0:
        raise EmptyTrainSet("cannot fit normalization on an empty train set")
    rows = table.features[train.train_rows]
    return NormalizationParams(rows.min(axis=0), rows.max(axis=0))


def apply_normalization(params: NormalizationParams, rows: np.ndarray) -> np.ndarray:
    """x' = (x - min) / (max - min); degenerate features map to 0.

    Out-of-range test values are deliberately not clipped.
    """
    rows = np.asarray(rows, dtype=np.float64)
    span = params.feature_max - params.feature_min
    safe = np.where(span == 0.0, 1.0, span)
    out = (rows - params.feature_min) / safe
    if rows.ndim == 1:
        out[span == 0.0] = 0.0
    else:
        out[:, span == 0.0] = 0.0
    return out


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(table: SignatureTable, train_fraction: float = DEFAULT_TRAIN_FRACTION,
                     seed: int = 0) -> SplitIndices:
    """Per-class shuffled split; first round(fraction * n_c) rows go to train.

    Deterministic for a fixed seed (classes consumed in label order from one
    derived stream).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = derive_rng(seed, STREAM_SPLIT)
    train_parts, test_parts = [], []
    for label in sorted(table.class_counts):
        idx = np.flatnonzero(table.labels == label)
        if len(idx) < 2:
            raise ClassTooSmall(label, len(idx), 2)
        perm = rng.permutation(idx)
        n_train = _round_half_up(train_fraction * len(idx))
        train_parts.append(perm[:n_train])
        test_parts.append(perm[n_train:])
    return SplitIndices(np.concatenate(train_parts), np.concatenate(test_parts), seed)


def select_top_features(table: SignatureTable, train: SplitIndices, k: int = DEFAULT_TOP_K,
                        seed: int = 0) -> FeatureMask:
    """Top-k features by mean-decrease-in-impurity of a default forest.

    The ranking forest runs on normalized training rows with this package's
    default hyperparameters; ties break toward the lower feature index.
    """
    from .forest import Hyperparams, feature_importance, train_forest

    d = table.features.shape[1]
    if k > d:
        raise ValueError(f"k={k} exceeds feature count {d}")
    params = fit_normalization(table, train)
    x_train = apply_normalization(params, table.features[train.train_rows])
    y_train = table.labels[train.train_rows]
    # own stream prefix: must not reuse the final forest's per-tree streams
    model = train_forest(x_train, y_train, Hyperparams(), seed=seed,
                         stream_prefix=(STREAM_FEATURE_SELECT,))
    importance = feature_importance(model)
    # stable sort on (-importance, index): descending importance, lower index first
    order = np.lexsort((np.arange(d), -importance))
    return FeatureMask(tuple(int(i) for i in order[:k]), importance)
