"""Signature-based, explainable fault identification for grid-connected PV
systems: Butterworth preprocessing, per-cycle statistical signatures, a
seeded random forest, exact tree-path Shapley explanations and evaluation
reports, all reproducible from a single seed."""

from .dataset import (FeatureMask, NormalizationParams, SplitIndices,
                      apply_normalization, fit_normalization,
                      select_top_features, stratified_split)
from .dsp import (FilterCoeffs, FilterSpec, design_butterworth, digital_magnitude,
                  filter_zero_phase, magnitude_response)
from .errors import ConfigError, DataError, FaultSigError, NumericError
from .explain import (Explanation, GlobalSummary, Waterfall, brute_force_shapley,
                      credibility_check, forest_shap, global_summary,
                      local_waterfall, tree_shap)
from .forest import (CVResult, ForestModel, Hyperparams, SearchSpace, Tree,
                     feature_importance, gini_impurity, predict, predict_proba,
                     randomized_search, train_forest, train_tree)
from .ingest import SIGNAL_NAMES, RawRecordTable, load_gpvs_csv, write_gpvs_csv
from .metrics import MetricsReport, confusion, knn_baseline, metrics
from .signatures import (FEATURE_NAMES, SignatureTable, SignatureVector,
                         batch_stats, build_signature_dataset,
                         read_signature_csv, window, write_signature_csv)
from .synth import Severity, SynthConfig, generate

__version__ = "0.1.0"
