"""Confusion matrix, one-vs-rest metrics, macro averages, KNN baseline.

Per class c the one-vs-rest counts are TP = counts[c][c], FP = column sum
minus TP, FN = row sum minus TP, TN = remainder; accuracy, recall, F1 and
precision follow the usual TP/TN/FP/FN definitions. Zero-denominator
metrics report 0.0 plus an "undefined" flag instead of raising, so whole-
report generation never aborts. Because sources differ on what a per-fault
"accuracy" means, the report carries both per-class recall and per-class
one-vs-rest accuracy under distinct names.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, EmptyTrainSet, LabelOutOfRange, LengthMismatch
from .ingest import N_STATES


@dataclass(frozen=True)
class ClassMetrics:
    label: int
    accuracy: float    # one-vs-rest (TP+TN)/total
    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...]  # metrics whose denominator was zero


@dataclass(frozen=True)
class MetricsReport:
    per_class: tuple[ClassMetrics, ...]
    macro_accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    overall_accuracy: float   # trace / total
    n_instances: int

    def as_dict(self) -> dict:
        return {
            "per_class": [
                {
                    "label": m.label,
                    "accuracy_ovr": m.accuracy,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "undefined": list(m.undefined),
                }
                for m in self.per_class
            ],
            "macro": {
                "accuracy": self.macro_accuracy,
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "overall_accuracy": self.overall_accuracy,
            "n_instances": self.n_instances,
        }


def confusion(y_true, y_pred, n_classes: int = N_STATES) -> np.ndarray:
    """counts[i][j] = how often true class i was predicted as j."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    if len(y_true) and (min(y_true.min(), y_pred.min()) < 0
                        or max(y_true.max(), y_pred.max()) >= n_classes):
        raise LabelOutOfRange(f"labels must lie in 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return counts


def metrics(conf: np.ndarray) -> MetricsReport:
    conf = np.asarray(conf, dtype=np.int64)
    total = int(conf.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix holds no instances")
    n_classes = conf.shape[0]
    per_class = []
    for c in range(n_classes):
        tp = int(conf[c, c])
        fp = int(conf[:, c].sum()) - tp
        fn = int(conf[c, :].sum()) - tp
        tn = total - tp - fp - fn
        undefined = []

        accuracy = (tp + tn) / total
        if tp + fp > 0:
            precision = tp / (tp + fp)
        else:
            precision, undefined = 0.0, undefined + ["precision"]
        if tp + fn > 0:
            recall = tp / (tp + fn)
        else:
            recall, undefined = 0.0, undefined + ["recall"]
        if precision + recall > 0:
            f1 = 2.0 * recall * precision / (recall + precision)
        else:
            f1, undefined = 0.0, undefined + ["f1"]
        per_class.append(ClassMetrics(c, accuracy, precision, recall, f1, tuple(undefined)))

    return MetricsReport(
        per_class=tuple(per_class),
        macro_accuracy=float(np.mean([m.accuracy for m in per_class])),
        macro_precision=float(np.mean([m.precision for m in per_class])),
        macro_recall=float(np.mean([m.recall for m in per_class])),
        macro_f1=float(np.mean([m.f1 for m in per_class])),
        overall_accuracy=float(np.trace(conf) / total),
        n_instances=total,
    )


def knn_baseline(train_X, train_y, test_X, k: int) -> np.ndarray:
    """Plain Euclidean k-nearest-neighbors majority vote.

    Neighbors tied with the k-th distance are all included; vote ties break
    toward the smallest label. Distances are compared as exact squared sums,
    so tie detection is reproducible.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    test_X = np.asarray(test_X, dtype=np.float64)
    if len(train_y) == 0:
        raise EmptyTrainSet("KNN needs a non-empty train set")
    if not 1 <= k <= len(train_y):
        raise ValueError(f"k must lie in 1..{len(train_y)}, got {k}")
    n_classes = int(train_y.max()) + 1
    out = np.empty(len(test_X), dtype=np.int64)
    for i, point in enumerate(test_X):
        diff = train_X - point
        d2 = np.einsum("ij,ij->i", diff, diff)
        kth = np.partition(d2, k - 1)[k - 1]
        votes = np.bincount(train_y[d2 <= kth], minlength=n_classes)
        out[i] = int(np.argmax(votes))  # first max == smallest label
    return out


_TABLE_METRICS = ("accuracy_ovr", "recall", "precision", "f1")


def render_comparison_table(reports: dict[str, MetricsReport],
                            class_names: list[str] | None = None) -> str:
    """Aligned text table: one row per fault class, one metric block per
    classifier, plus macro and overall summary rows."""
    if not reports:
        raise EmptyMatrix("no reports to render")
    first = next(iter(reports.values()))
    n_classes = len(first.per_class)
    if class_names is None:
        class_names = [f"F{c}M" for c in range(n_classes)]

    headers = ["Fault"]
    for name in reports:
        headers += [f"{name} {m}" for m in _TABLE_METRICS]
    rows = []
    for c in range(n_classes):
        row = [class_names[c]]
        for report in reports.values():
            m = report.per_class[c]
            row += [f"{m.accuracy:.4f}", f"{m.recall:.4f}", f"{m.precision:.4f}", f"{m.f1:.4f}"]
        rows.append(row)
    macro = ["Macro"]
    overall = ["Overall acc"]
    for report in reports.values():
        macro += [f"{report.macro_accuracy:.4f}", f"{report.macro_recall:.4f}",
                  f"{report.macro_precision:.4f}", f"{report.macro_f1:.4f}"]
        overall += [f"{report.overall_accuracy:.4f}", "", "", ""]
    rows += [macro, overall]

    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
