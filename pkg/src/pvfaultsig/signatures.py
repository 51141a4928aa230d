"""Per-cycle statistical signatures: 4 stats x 13 signals = 52 features.

Each table is sliced into contiguous, non-overlapping windows of 200
samples (one power cycle at 50 Hz / 10 kHz); the trailing remainder is
dropped. Standard deviation uses divisor N (population form), not N-1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFile, EmptyInput, LabelOutOfRange, MissingColumn, NonNumericCell
from .ingest import N_STATES, SIGNAL_NAMES, RawRecordTable

DEFAULT_BATCH_LEN = 200
STAT_NAMES: tuple[str, ...] = ("mean", "std", "max", "min")
LABEL_COLUMN = "label"


def feature_names(signal_names=SIGNAL_NAMES) -> list[str]:
    """Canonical signal-major feature ordering: Vpv_mean, Vpv_std, ..."""
    return [f"{sig}_{stat}" for sig in signal_names for stat in STAT_NAMES]


FEATURE_NAMES: tuple[str, ...] = tuple(feature_names())
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class SignatureVector:
    values: np.ndarray  # 52 floats, canonical order
    label: int | None = None

    def named(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, map(float, self.values)))


@dataclass
class SignatureTable:
    features: np.ndarray          # (n_rows, 52)
    labels: np.ndarray            # (n_rows,)
    feature_names: list[str] = field(default_factory=lambda: list(FEATURE_NAMES))
    class_counts: dict[int, int] = field(init=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("feature row count and label count differ")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature column count and name count differ")
        uniq, counts = np.unique(self.labels, return_counts=True)
        self.class_counts = {int(u): int(c) for u, c in zip(uniq, counts)}

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


def window(table: RawRecordTable, batch_len: int = DEFAULT_BATCH_LEN) -> np.ndarray:
    """Contiguous non-overlapping windows, shape (n_windows, 13, batch_len)."""
    if batch_len < 2:
        raise ValueError(f"batch_len must be >= 2, got {batch_len}")
    matrix = table.as_matrix()
    n = matrix.shape[1]
    n_windows = n // batch_len
    trimmed = matrix[:, :n_windows * batch_len]
    return np.ascontiguousarray(trimmed.reshape(matrix.shape[0], n_windows, batch_len).transpose(1, 0, 2))


def batch_stats(win: np.ndarray, signal_names=SIGNAL_NAMES) -> SignatureVector:
    """Mean, population std, max and min per signal for one window."""
    win = np.asarray(win, dtype=np.float64)
    if win.ndim != 2 or win.shape[0] != len(signal_names):
        raise ValueError(f"window must be ({len(signal_names)}, batch_len)")
    stats = np.stack([
        win.mean(axis=1),
        win.std(axis=1),   # ddof=0: divisor N
        win.max(axis=1),
        win.min(axis=1),
    ], axis=1)
    return SignatureVector(stats.reshape(-1))


def _table_signatures(table: RawRecordTable, batch_len: int) -> np.ndarray:
    wins = window(table, batch_len)  # (w, 13, L)
    if wins.shape[0] == 0:
        return np.empty((0, len(FEATURE_NAMES)))
    stats = np.stack([
        wins.mean(axis=2),
        wins.std(axis=2),
        wins.max(axis=2),
        wins.min(axis=2),
    ], axis=2)  # (w, 13, 4)
    return stats.reshape(wins.shape[0], -1)


def build_signature_dataset(tables: list[RawRecordTable],
                            batch_len: int = DEFAULT_BATCH_LEN) -> SignatureTable:
    """One labeled signature row per window, concatenated in label order."""
    if not tables:
        raise EmptyInput("no input tables")
    blocks, labels = [], []
    for table in sorted(tables, key=lambda t: t.label):
        rows = _table_signatures(table, batch_len)
        blocks.append(rows)
        labels.append(np.full(rows.shape[0], table.label, dtype=np.int64))
    return SignatureTable(np.concatenate(blocks, axis=0), np.concatenate(labels))


def write_signature_csv(table: SignatureTable, path) -> None:
    """52 feature columns + label; floats as repr() for exact round trips."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*table.feature_names, LABEL_COLUMN])
        for row, label in zip(table.features, table.labels):
            writer.writerow([*(repr(float(v)) for v in row), int(label)])


def read_signature_csv(path) -> SignatureTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        if header[-1] != LABEL_COLUMN or len(header) < 2:
            raise MissingColumn(LABEL_COLUMN)
        names = header[:-1]
        rows, labels = [], []
        for i, row in enumerate(reader, start=2):
            try:
                rows.append([float(v) for v in row[:-1]])
                labels.append(int(float(row[-1])))
            except (ValueError, IndexError):
                raise NonNumericCell(i, LABEL_COLUMN, ",".join(row)) from None
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.min() < 0 or labels_arr.max() >= N_STATES:
        raise LabelOutOfRange(f"labels must lie in 0..{N_STATES - 1}")
    return SignatureTable(np.asarray(rows), labels_arr, feature_names=names)
