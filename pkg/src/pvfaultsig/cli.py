"""Command-line pipeline: synth -> prepare -> train -> evaluate -> explain.

Every stage reads and writes file artifacts (CSV/JSON) so any stage can be
re-run in isolation and downstream consumers (tests, the plotting package)
see stable, byte-deterministic outputs. A single --seed drives all
randomness through derived streams. Flags can also be set through
environment variables with the PVFAULTSIG_ prefix (e.g. PVFAULTSIG_SEED).

Exit codes: 0 success, 2 configuration errors, 3 data/schema errors,
4 numeric failures, 1 unexpected errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bundle as bundle_mod
from . import dsp, forest, signatures, synth
from .metrics import confusion, knn_baseline, metrics as compute_metrics, render_comparison_table
from .dataset import (DEFAULT_TOP_K, DEFAULT_TRAIN_FRACTION, apply_normalization,
                      fit_normalization, select_top_features, stratified_split)
from .errors import ConfigError, DataError, FaultSigError, NumericError
from .explain import (DEFAULT_CREDIBILITY_TOP_K, GlobalSummary, credibility_check,
                      forest_shap, global_summary, waterfall_from_explanation)
from .ingest import N_STATES, load_gpvs_csv, write_gpvs_csv
from .util import dump_json

ENV_PREFIX = "PVFAULTSIG_"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

TRACE_HEAD_SAMPLES = 2000


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"environment variable {ENV_PREFIX + name}={raw!r} is not a valid {cast.__name__}")


def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--filter-order", type=int,
                   default=_env_default("FILTER_ORDER", dsp.DEFAULT_ORDER, int))
    p.add_argument("--filter-cutoff-hz", type=float,
                   default=_env_default("FILTER_CUTOFF_HZ", dsp.DEFAULT_CUTOFF_HZ, float))
    p.add_argument("--filter-epsilon", type=float,
                   default=_env_default("FILTER_EPSILON", dsp.DEFAULT_EPSILON, float))
    p.add_argument("--sample-rate-hz", type=float,
                   default=_env_default("SAMPLE_RATE_HZ", dsp.DEFAULT_SAMPLE_RATE_HZ, float))


def _add_seed_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=_env_default("SEED", 0, int))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvfaultsig",
        description="Signature-based, explainable PV grid fault identification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate 8 labeled synthetic waveform CSVs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cycles", type=int, default=_env_default("CYCLES", 300, int))
    p.add_argument("--batch-len", type=int, default=_env_default("BATCH_LEN", 200, int))
    p.add_argument("--sample-rate-hz", type=float,
                   default=_env_default("SAMPLE_RATE_HZ", 10_000.0, float))
    p.add_argument("--fundamental-hz", type=float,
                   default=_env_default("FUNDAMENTAL_HZ", 50.0, float))
    _add_seed_flag(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="filter raw CSVs and extract signature rows")
    p.add_argument("--input", nargs="+", required=True, help="raw waveform CSV paths")
    p.add_argument("--labels", nargs="+", type=int, required=True,
                   help="operating-state id (0..7) per input file")
    p.add_argument("--out", required=True, help="signature CSV path")
    p.add_argument("--batch-len", type=int, default=_env_default("BATCH_LEN", 200, int))
    p.add_argument("--column-map", help="JSON file mapping canonical signal names to CSV headers")
    p.add_argument("--time-column", default=_env_default("TIME_COLUMN", "Time", str))
    p.add_argument("--trace-out", help="optional JSON artifact with raw-vs-filtered head segments")
    _add_filter_flags(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="split, normalize, select features, train, explain globally")
    p.add_argument("--input", required=True, help="signature CSV path")
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.add_argument("--train-fraction", type=float,
                   default=_env_default("TRAIN_FRACTION", DEFAULT_TRAIN_FRACTION, float))
    p.add_argument("--top-k", type=int, default=_env_default("TOP_K", DEFAULT_TOP_K, int))
    p.add_argument("--search", action="store_true",
                   help="randomized hyperparameter search instead of fixed --trees/--rule")
    p.add_argument("--trees", type=int, default=_env_default("TREES", 18, int))
    p.add_argument("--rule", choices=forest.MAX_FEATURES_RULES,
                   default=_env_default("RULE", "log2", str))
    p.add_argument("--folds", type=int, default=_env_default("FOLDS", 5, int))
    p.add_argument("--candidates", type=int, default=_env_default("CANDIDATES", 30, int))
    p.add_argument("--threads", type=int, default=_env_default("THREADS", 1, int))
    _add_filter_flags(p)
    _add_seed_flag(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score the bundle's test split, optionally vs KNN")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True, help="signature CSV path")
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.add_argument("--baseline-knn", type=int, metavar="K",
                   default=_env_default("BASELINE_KNN", None, int))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="local Shapley waterfall + credibility for instances")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True, help="signature CSV path")
    p.add_argument("--out", required=True, help="output JSON path")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--row-index", type=int)
    group.add_argument("--all", action="store_true")
    p.add_argument("--global-summary",
                   help="global summary JSON from train; recomputed from the bundle if omitted")
    p.add_argument("--credibility-top-k", type=int,
                   default=_env_default("CREDIBILITY_TOP_K", DEFAULT_CREDIBILITY_TOP_K, int))
    p.set_defaults(func=cmd_explain)

    return parser


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = synth.SynthConfig(
        n_cycles=args.cycles, sample_rate_hz=args.sample_rate_hz,
        fundamental_hz=args.fundamental_hz, batch_len=args.batch_len, seed=args.seed)
    for state in range(N_STATES):
        table = synth.generate(config, state)
        path = out_dir / f"F{state}M.csv"
        write_gpvs_csv(table, path)
        print(f"state {state} ({synth.STATE_NAMES[state]}): "
              f"{table.n_samples} samples -> {path}")
    return EXIT_OK


def _load_column_map(path) -> dict[str, str] | None:
    if path is None:
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            mapping = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read column map {path}: {exc}") from None
    if not isinstance(mapping, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in mapping.items()):
        raise ConfigError(f"column map {path} must be a flat string-to-string JSON object")
    return mapping


def cmd_prepare(args) -> int:
    if len(args.input) != len(args.labels):
        raise ConfigError(f"{len(args.input)} inputs but {len(args.labels)} labels")
    column_map = _load_column_map(args.column_map)
    spec = dsp.FilterSpec(args.filter_order, args.filter_cutoff_hz,
                          args.filter_epsilon, args.sample_rate_hz)
    coeffs = dsp.design_butterworth(spec)

    filtered_tables = []
    trace = None
    for path, label in zip(args.input, args.labels):
        raw = load_gpvs_csv(path, label, column_map=column_map,
                            time_column=args.time_column,
                            sample_period_s=1.0 / args.sample_rate_hz)
        raw_matrix = raw.as_matrix()
        filt_matrix = dsp.filter_table_matrix(coeffs, raw_matrix)
        filtered_tables.append(raw.with_signals(filt_matrix))
        n_windows = raw.n_samples // args.batch_len
        print(f"state {label}: {raw.n_samples} samples -> {n_windows} windows ({path})")
        if trace is None and args.trace_out:
            head = min(TRACE_HEAD_SAMPLES, raw.n_samples)
            trace = {
                "source": str(path),
                "label": label,
                "sample_rate_hz": args.sample_rate_hz,
                "n_samples": head,
                "signals": {
                    name: {
                        "raw": [float(v) for v in raw_matrix[i, :head]],
                        "filtered": [float(v) for v in filt_matrix[i, :head]],
                    }
                    for i, name in enumerate(signatures.SIGNAL_NAMES)
                },
            }

    table = signatures.build_signature_dataset(filtered_tables, batch_len=args.batch_len)
    signatures.write_signature_csv(table, args.out)
    print(f"total signature rows: {table.n_rows} -> {args.out}")
    if args.trace_out:
        dump_json(trace, args.trace_out)
        print(f"trace artifact -> {args.trace_out}")
    return EXIT_OK


def _summary_to_dict(summary: GlobalSummary, feature_names) -> dict:
    return {
        "n_instances": summary.n_instances,
        "feature_names": list(feature_names),
        "classes": [
            {
                "class": c,
                "ranking": [
                    {"feature_index": f, "feature": feature_names[f], "mean_abs_phi": v}
                    for f, v in summary.rankings[c]
                ],
            }
            for c in range(len(summary.rankings))
        ],
        "phi": [[[float(v) for v in row] for row in inst] for inst in summary.phi],
        "feature_values": [[float(v) for v in row] for row in summary.feature_values],
    }


def cmd_train(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = signatures.read_signature_csv(args.input)

    split = stratified_split(table, args.train_fraction, args.seed)
    norm = fit_normalization(table, split)
    mask = select_top_features(table, split, k=args.top_k, seed=args.seed)

    x_all = apply_normalization(norm, table.features)[:, mask.selected]
    x_train = x_all[split.train_rows]
    y_train = table.labels[split.train_rows]
    selected_names = tuple(table.feature_names[i] for i in mask.selected)

    if args.search:
        hp, cv = forest.randomized_search(
            x_train, y_train, forest.SearchSpace(), n_candidates=args.candidates,
            folds=args.folds, seed=args.seed, threads=args.threads)
        searched = True
    else:
        hp = forest.Hyperparams(n_trees=args.trees, max_features_rule=args.rule)
        cv = forest.CVResult(entries=(), folds=0, seed=args.seed)
        searched = False
    print(f"hyperparameters: {hp.n_trees} trees, {hp.max_features_rule} rule"
          + (" (randomized search)" if searched else ""))

    model = forest.train_forest(x_train, y_train, hp, seed=args.seed,
                                feature_names=selected_names, threads=args.threads)
    summary = global_summary(model, x_train)

    filter_spec = dsp.FilterSpec(args.filter_order, args.filter_cutoff_hz,
                                 args.filter_epsilon, args.sample_rate_hz)
    bundle = bundle_mod.ModelBundle(
        filter_spec=filter_spec,
        normalization=norm,
        feature_mask=mask,
        forest=model,
        split=split,
        signature_feature_names=tuple(table.feature_names),
        metadata={
            "seed": args.seed,
            "dataset_sha256": bundle_mod.dataset_fingerprint(args.input),
            "tool": bundle_mod.TOOL_NAME,
            "version": bundle_mod.TOOL_VERSION,
            "train_fraction": args.train_fraction,
        },
    )

    bundle_path = out_dir / "bundle.json"
    bundle_mod.save_bundle(bundle, bundle_path)
    dump_json(_summary_to_dict(summary, selected_names), out_dir / "global_summary.json")
    dump_json({
        "searched": searched,
        "folds": cv.folds,
        "seed": cv.seed,
        "entries": [
            {"n_trees": e.hyperparams.n_trees, "rule": e.hyperparams.max_features_rule,
             "fold_accuracies": list(e.fold_accuracies), "mean_accuracy": e.mean_accuracy}
            for e in cv.entries
        ],
        "best": {"n_trees": hp.n_trees, "rule": hp.max_features_rule},
    }, out_dir / "cv_result.json")
    dump_json({
        "feature_names": list(table.feature_names),
        "importance": [float(v) for v in mask.importance],
        "selected": list(mask.selected),
    }, out_dir / "importance.json")

    print(f"train rows: {len(split.train_rows)}, test rows: {len(split.test_rows)}")
    print(f"artifacts -> {bundle_path}, global_summary.json, cv_result.json, importance.json")
    return EXIT_OK


def _project(bundle: bundle_mod.ModelBundle, table: signatures.SignatureTable) -> np.ndarray:
    if tuple(table.feature_names) != bundle.signature_feature_names:
        raise DataError("signature CSV feature columns do not match the bundle")
    x = apply_normalization(bundle.normalization, table.features)
    return x[:, bundle.feature_mask.selected]


def _check_rows(rows: np.ndarray, n: int) -> None:
    if len(rows) and (rows.min() < 0 or rows.max() >= n):
        raise DataError(f"bundle split references rows outside 0..{n - 1}")


def cmd_evaluate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = bundle_mod.load_bundle(args.bundle)
    table = signatures.read_signature_csv(args.input)
    x_all = _project(bundle, table)
    _check_rows(bundle.split.train_rows, table.n_rows)
    _check_rows(bundle.split.test_rows, table.n_rows)

    test = bundle.split.test_rows
    y_true = table.labels[test]
    y_pred = forest.predict(bundle.forest, x_all[test])
    conf = confusion(y_true, y_pred)
    reports = {"proposed": compute_metrics(conf)}
    confusions = {"proposed": conf}

    if args.baseline_knn is not None:
        train = bundle.split.train_rows
        knn_pred = knn_baseline(x_all[train], table.labels[train],
                                x_all[test], args.baseline_knn)
        knn_conf = confusion(y_true, knn_pred)
        reports["knn"] = compute_metrics(knn_conf)
        confusions["knn"] = knn_conf

    report_dict = {
        name: {**rep.as_dict(), "confusion": [[int(v) for v in row] for row in confusions[name]]}
        for name, rep in reports.items()
    }
    dump_json(report_dict, out_dir / "metrics.json")

    text = render_comparison_table(reports)
    with open(out_dir / "metrics.txt", "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(text, end="")

    dump_json({
        "classifiers": sorted(reports),
        "metrics": {
            name: {
                "macro_accuracy": rep.macro_accuracy,
                "macro_precision": rep.macro_precision,
                "macro_recall": rep.macro_recall,
                "macro_f1": rep.macro_f1,
                "overall_accuracy": rep.overall_accuracy,
            }
            for name, rep in reports.items()
        },
    }, out_dir / "plot_metrics.json")
    print(f"artifacts -> {out_dir / 'metrics.json'}, metrics.txt, plot_metrics.json")
    return EXIT_OK


def _summary_from_json(path, n_features: int) -> GlobalSummary:
    """Rebuild just enough of a persisted summary for credibility checks."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        rankings = tuple(
            tuple((int(r["feature_index"]), float(r["mean_abs_phi"])) for r in cls["ranking"])
            for cls in d["classes"])
        n_instances = int(d["n_instances"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed global summary: {exc}") from None
    n_classes = len(rankings)
    return GlobalSummary(n_instances, np.zeros((n_features, n_classes)), rankings,
                         np.zeros((0, n_features, n_classes)), np.zeros((0, n_features)))


def cmd_explain(args) -> int:
    bundle = bundle_mod.load_bundle(args.bundle)
    table = signatures.read_signature_csv(args.input)
    x_all = _project(bundle, table)
    model = bundle.forest

    if args.global_summary:
        summary = _summary_from_json(args.global_summary, model.n_features)
    else:
        _check_rows(bundle.split.train_rows, table.n_rows)
        summary = global_summary(model, x_all[bundle.split.train_rows])

    if args.all:
        rows = list(range(table.n_rows))
    else:
        if not 0 <= args.row_index < table.n_rows:
            raise ConfigError(f"--row-index {args.row_index} outside 0..{table.n_rows - 1}")
        rows = [args.row_index]

    explanations = []
    for i in rows:
        exp = forest_shap(model, x_all[i], instance_id=f"row{i}")
        wf = waterfall_from_explanation(exp, model.feature_names)
        score = credibility_check(exp, summary, top_k=args.credibility_top_k)
        explanations.append({
            "instance_id": exp.instance_id,
            "row_index": i,
            "true_label": int(table.labels[i]),
            "predicted_class": exp.predicted_class,
            "base_values": [float(v) for v in exp.base_values],
            "phi": [[float(v) for v in row] for row in exp.phi],
            "feature_names": list(model.feature_names),
            "feature_values": [float(v) for v in exp.feature_values],
            "base_value": wf.base_value,
            "waterfall": [
                {"feature": e.feature_name, "value": e.feature_value, "phi": e.phi}
                for e in wf.entries
            ],
            "credibility": score,
            "credibility_top_k": args.credibility_top_k,
        })
        print(f"row {i}: predicted class {exp.predicted_class}, credibility {score:.2f}")

    payload = explanations[0] if not args.all else {"explanations": explanations}
    dump_json(payload, args.out)
    print(f"explanation artifact -> {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error (data): {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error (numeric): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FaultSigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
