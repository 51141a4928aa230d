"""Render pvfaultsig JSON artifacts into image files.

Strictly presentational: every plotted number is read verbatim from the
input artifact, nothing is recomputed and no model is loaded. Rendering is
deterministic (fixed backend, geometry, fonts and hash salt), so the same
artifact always produces a byte-identical image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .errors import MissingField, SchemaMismatch  # noqa: E402

PLOT_KINDS = ("importance_bar", "cv_search", "shap_summary",
              "metrics_bars", "waterfall", "filtered_vs_raw")

SUPPORTED_SUFFIXES = (".png", ".svg")

matplotlib.rcParams["svg.hashsalt"] = "pvfaultplots"

_DPI = 100
_TOP_N = 20
# Fig-3 style panel order; falls back to the artifact's own order
_TRACE_PANELS = ("Vdc", "Ipv", "Vpv", "Iabc_mag")


@dataclass(frozen=True)
class PlotRequest:
    kind: str
    input_path: str
    output_path: str

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise SchemaMismatch(f"unknown plot kind {self.kind!r}")


def _load(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"{path}: cannot parse artifact: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaMismatch(f"{path}: artifact root must be a JSON object")
    return data


def _require(data: dict, field: str):
    if field not in data:
        raise MissingField(field)
    return data[field]


def build_importance_bar(data: dict):
    names = _require(data, "feature_names")
    importance = _require(data, "importance")
    if len(names) != len(importance):
        raise SchemaMismatch("feature_names and importance lengths differ")
    selected = set(data.get("selected", []))
    order = sorted(range(len(importance)), key=lambda i: -importance[i])[:_TOP_N]

    fig, ax = plt.subplots(figsize=(8, 6), dpi=_DPI)
    ypos = np.arange(len(order))[::-1]
    colors = ["#2b76b3" if i in selected or not selected else "#a8a8a8" for i in order]
    ax.barh(ypos, [importance[i] for i in order], color=colors)
    ax.set_yticks(ypos)
    ax.set_yticklabels([names[i] for i in order], fontsize=8)
    ax.set_xlabel("relative importance (mean decrease in impurity)")
    ax.set_title(f"Top {len(order)} feature importances")
    fig.tight_layout()
    return fig


def build_cv_search(data: dict):
    entries = _require(data, "entries")
    if not entries:
        raise SchemaMismatch("cv artifact holds no search entries (run train --search)")
    for e in entries:
        for key in ("n_trees", "rule", "mean_accuracy"):
            if key not in e:
                raise MissingField(f"entries[].{key}")
    best = data.get("best", {})

    fig, ax = plt.subplots(figsize=(8, 5), dpi=_DPI)
    rules = sorted({e["rule"] for e in entries})
    markers = {"log2": "o", "sqrt": "s", "all": "^"}
    for rule in rules:
        pts = sorted((e["n_trees"], e["mean_accuracy"]) for e in entries if e["rule"] == rule)
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker=markers.get(rule, "x"), label=rule)
    if "n_trees" in best and "rule" in best:
        match = [e for e in entries
                 if e["n_trees"] == best["n_trees"] and e["rule"] == best["rule"]]
        if match:
            ax.scatter([best["n_trees"]], [match[0]["mean_accuracy"]],
                       s=160, facecolors="none", edgecolors="red", label="best", zorder=5)
    ax.set_xlabel("number of trees")
    ax.set_ylabel("cross-validation mean accuracy")
    ax.set_title("Randomized hyperparameter search")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def build_shap_summary(data: dict):
    classes = _require(data, "classes")
    if not classes:
        raise SchemaMismatch("global summary holds no classes")
    n = len(classes)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.5 * ncols, 3.2 * nrows),
                             dpi=_DPI, squeeze=False)
    for idx, cls in enumerate(classes):
        ax = axes[idx // ncols][idx % ncols]
        ranking = _require(cls, "ranking")[:_TOP_N]
        labels = [r.get("feature", str(r.get("feature_index", "?"))) for r in ranking]
        values = [_require(r, "mean_abs_phi") for r in ranking]
        ypos = np.arange(len(values))[::-1]
        ax.barh(ypos, values, color="#c23b80")
        ax.set_yticks(ypos)
        ax.set_yticklabels(labels, fontsize=6)
        ax.set_title(f"class {cls.get('class', idx)}", fontsize=9)
        ax.set_xlabel("mean |phi|", fontsize=7)
        ax.tick_params(labelsize=6)
    for idx in range(n, nrows * ncols):
        axes[idx // ncols][idx % ncols].axis("off")
    fig.suptitle("Global explanation: mean |phi| per class")
    fig.tight_layout(rect=(0, 0, 1, 0.97))
    return fig


_MACRO_KEYS = ("macro_accuracy", "macro_precision", "macro_recall", "macro_f1")


def build_metrics_bars(data: dict):
    classifiers = _require(data, "classifiers")
    values = _require(data, "metrics")
    if not classifiers:
        raise SchemaMismatch("metrics artifact lists no classifiers")
    for name in classifiers:
        if name not in values:
            raise MissingField(f"metrics.{name}")
        for key in _MACRO_KEYS:
            if key not in values[name]:
                raise MissingField(f"metrics.{name}.{key}")

    fig, ax = plt.subplots(figsize=(8, 5), dpi=_DPI)
    width = 0.8 / len(classifiers)
    xs = np.arange(len(_MACRO_KEYS))
    for i, name in enumerate(classifiers):
        heights = [values[name][k] for k in _MACRO_KEYS]
        ax.bar(xs + i * width, heights, width=width, label=name)
    ax.set_xticks(xs + width * (len(classifiers) - 1) / 2)
    ax.set_xticklabels([k.replace("macro_", "") for k in _MACRO_KEYS])
    ax.set_ylabel("macro average")
    ax.set_ylim(0, 1.05)
    ax.set_title("Macro precision / recall / F1 / accuracy")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    return fig


def build_waterfall(data: dict):
    base = _require(data, "base_value")
    entries = _require(data, "waterfall")
    for e in entries:
        for key in ("feature", "phi"):
            if key not in e:
                raise MissingField(f"waterfall[].{key}")

    fig, ax = plt.subplots(figsize=(8, max(3, 0.4 * len(entries) + 2)), dpi=_DPI)
    cursor = base
    ypos = np.arange(len(entries))[::-1]
    labels = []
    for e, y in zip(entries, ypos):
        phi = e["phi"]
        left = cursor if phi >= 0 else cursor + phi
        ax.barh(y, abs(phi), left=left, color="#d62728" if phi >= 0 else "#1f77b4")
        value = e.get("value")
        labels.append(e["feature"] if value is None else f"{e['feature']} = {value:.4g}")
        cursor += phi
    ax.axvline(base, color="gray", linestyle="--", linewidth=1)
    ax.axvline(cursor, color="black", linestyle="-", linewidth=1)
    ax.set_yticks(ypos)
    ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlabel("contribution to predicted-class probability")
    ax.set_title(f"Local explanation (class {data.get('predicted_class', '?')}): "
                 f"base {base:.4f} -> output {cursor:.4f}")
    fig.tight_layout()
    return fig


def build_filtered_vs_raw(data: dict):
    signals = _require(data, "signals")
    fs = _require(data, "sample_rate_hz")
    if not signals:
        raise SchemaMismatch("trace artifact holds no signals")
    names = [n for n in _TRACE_PANELS if n in signals] or list(signals)[:4]

    fig, axes = plt.subplots(2, 2, figsize=(10, 6), dpi=_DPI, squeeze=False)
    for idx in range(4):
        ax = axes[idx // 2][idx % 2]
        if idx >= len(names):
            ax.axis("off")
            continue
        name = names[idx]
        channel = signals[name]
        if "raw" not in channel or "filtered" not in channel:
            raise MissingField(f"signals.{name}.raw/filtered")
        t = np.arange(len(channel["raw"])) / fs
        ax.plot(t, channel["raw"], color="#bbbbbb", linewidth=0.8, label="raw")
        ax.plot(t, channel["filtered"], color="#2b76b3", linewidth=1.2, label="filtered")
        ax.set_title(name, fontsize=9)
        ax.set_xlabel("time (s)", fontsize=7)
        ax.tick_params(labelsize=7)
        ax.legend(fontsize=7)
    fig.suptitle("Raw vs filtered signals")
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    return fig


_BUILDERS = {
    "importance_bar": build_importance_bar,
    "cv_search": build_cv_search,
    "shap_summary": build_shap_summary,
    "metrics_bars": build_metrics_bars,
    "waterfall": build_waterfall,
    "filtered_vs_raw": build_filtered_vs_raw,
}


def render(request: PlotRequest) -> Path:
    """Load, validate and draw the artifact; returns the written path."""
    out = Path(request.output_path)
    if out.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise SchemaMismatch(
            f"unsupported output format {out.suffix!r}; use one of {SUPPORTED_SUFFIXES}")
    data = _load(request.input_path)
    fig = _BUILDERS[request.kind](data)
    try:
        if out.suffix.lower() == ".svg":
            fig.savefig(out, format="svg", metadata={"Date": None})
        else:
            fig.savefig(out, format="png")
    finally:
        plt.close(fig)
    return out
