"""Self-contained model bundle: everything evaluation and explanation need
besides the signature CSV itself, serialized as byte-deterministic JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMask, NormalizationParams, SplitIndices
from .dsp import FilterSpec
from .errors import DataError
from .forest import ForestModel, Hyperparams, Tree
from .util import dumps_json

SCHEMA_VERSION = 1
TOOL_NAME = "pvfaultsig"
TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class ModelBundle:
    filter_spec: FilterSpec | None
    normalization: NormalizationParams
    feature_mask: FeatureMask
    forest: ForestModel
    split: SplitIndices
    signature_feature_names: tuple[str, ...]
    metadata: dict
    schema_version: int = SCHEMA_VERSION


def dataset_fingerprint(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _tree_to_dict(tree: Tree) -> dict:
    return {
        "children_left": [int(v) for v in tree.children_left],
        "children_right": [int(v) for v in tree.children_right],
        "feature": [int(v) for v in tree.feature],
        "threshold": [float(v) for v in tree.threshold],
        "value": [[float(v) for v in row] for row in tree.value],
        "cover": [float(v) for v in tree.cover],
    }


def _tree_from_dict(d: dict) -> Tree:
    return Tree(
        children_left=np.asarray(d["children_left"], dtype=np.int64),
        children_right=np.asarray(d["children_right"], dtype=np.int64),
        feature=np.asarray(d["feature"], dtype=np.int64),
        threshold=np.asarray(d["threshold"], dtype=np.float64),
        value=np.asarray(d["value"], dtype=np.float64),
        cover=np.asarray(d["cover"], dtype=np.float64),
    )


def bundle_to_dict(bundle: ModelBundle) -> dict:
    hp = bundle.forest.hyperparams
    return {
        "schema_version": bundle.schema_version,
        "filter": None if bundle.filter_spec is None else {
            "order_n": bundle.filter_spec.order_n,
            "cutoff_hz": bundle.filter_spec.cutoff_hz,
            "epsilon": bundle.filter_spec.epsilon,
            "sample_rate_hz": bundle.filter_spec.sample_rate_hz,
        },
        "normalization": {
            "feature_min": [float(v) for v in bundle.normalization.feature_min],
            "feature_max": [float(v) for v in bundle.normalization.feature_max],
        },
        "feature_mask": {
            "selected": list(bundle.feature_mask.selected),
            "importance": [float(v) for v in bundle.feature_mask.importance],
        },
        "forest": {
            "n_classes": bundle.forest.n_classes,
            "n_features": bundle.forest.n_features,
            "feature_names": list(bundle.forest.feature_names),
            "hyperparams": {
                "n_trees": hp.n_trees,
                "max_features_rule": hp.max_features_rule,
                "min_samples_leaf": hp.min_samples_leaf,
                "max_depth": hp.max_depth,
            },
            "seed": bundle.forest.seed,
            "trees": [_tree_to_dict(t) for t in bundle.forest.trees],
        },
        "split": {
            "train_rows": [int(v) for v in bundle.split.train_rows],
            "test_rows": [int(v) for v in bundle.split.test_rows],
            "seed": bundle.split.seed,
        },
        "signature_feature_names": list(bundle.signature_feature_names),
        "metadata": dict(bundle.metadata),
    }


def bundle_from_dict(d: dict) -> ModelBundle:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unsupported bundle schema_version {d.get('schema_version')!r}")
    filt = d["filter"]
    spec = None if filt is None else FilterSpec(
        order_n=int(filt["order_n"]), cutoff_hz=float(filt["cutoff_hz"]),
        epsilon=float(filt["epsilon"]), sample_rate_hz=float(filt["sample_rate_hz"]))
    hp = d["forest"]["hyperparams"]
    forest = ForestModel(
        trees=tuple(_tree_from_dict(t) for t in d["forest"]["trees"]),
        n_classes=int(d["forest"]["n_classes"]),
        n_features=int(d["forest"]["n_features"]),
        feature_names=tuple(d["forest"]["feature_names"]),
        hyperparams=Hyperparams(
            n_trees=int(hp["n_trees"]),
            max_features_rule=hp["max_features_rule"],
            min_samples_leaf=int(hp["min_samples_leaf"]),
            max_depth=None if hp["max_depth"] is None else int(hp["max_depth"]),
        ),
        seed=int(d["forest"]["seed"]),
    )
    return ModelBundle(
        filter_spec=spec,
        normalization=NormalizationParams(
            np.asarray(d["normalization"]["feature_min"], dtype=np.float64),
            np.asarray(d["normalization"]["feature_max"], dtype=np.float64)),
        feature_mask=FeatureMask(
            tuple(int(v) for v in d["feature_mask"]["selected"]),
            np.asarray(d["feature_mask"]["importance"], dtype=np.float64)),
        forest=forest,
        split=SplitIndices(
            np.asarray(d["split"]["train_rows"], dtype=np.int64),
            np.asarray(d["split"]["test_rows"], dtype=np.int64),
            int(d["split"]["seed"])),
        signature_feature_names=tuple(d["signature_feature_names"]),
        metadata=dict(d["metadata"]),
        schema_version=int(d["schema_version"]),
    )


def save_bundle(bundle: ModelBundle, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_json(bundle_to_dict(bundle)))


def load_bundle(path) -> ModelBundle:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON: {exc}") from None
    try:
        return bundle_from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed bundle: {exc}") from None
