"""Load GPVS-style CSV waveform files into typed, immutable tables.

A raw file carries one time column plus 13 electrical signals. The time
column is always discarded; signal columns are located by header name, so
column order in the file does not matter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFile, LabelOutOfRange, MissingColumn, NonNumericCell

# Canonical signal order; feature naming and every downstream matrix follow it.
SIGNAL_NAMES: tuple[str, ...] = (
    "Vpv", "Ipv", "Vdc",
    "ia", "ib", "ic",
    "va", "vb", "vc",
    "Iabc_mag", "Vabc_mag",
    "f_i", "f_v",
)

N_SIGNALS = len(SIGNAL_NAMES)
N_STATES = 8

DEFAULT_TIME_COLUMN = "Time"
DEFAULT_SAMPLE_PERIOD_S = 1e-4

# Rows read in chunks; numpy does the float parsing, the slow per-cell scan
# runs only on a chunk that failed, to locate the offending cell.
_CHUNK_ROWS = 16384


@dataclass(frozen=True)
class RawRecordTable:
    """Time-aligned multi-channel waveform table for one operating state."""

    signals: dict[str, np.ndarray]
    sample_period_s: float
    label: int
    source_name: str = ""

    def __post_init__(self):
        if tuple(self.signals) != SIGNAL_NAMES:
            raise MissingColumn(next(n for n in SIGNAL_NAMES if n not in self.signals))
        lengths = {len(v) for v in self.signals.values()}
        if len(lengths) > 1:
            raise ValueError(f"signal lengths differ: {sorted(lengths)}")
        if self.sample_period_s <= 0:
            raise ValueError("sample_period_s must be positive")
        if not 0 <= self.label < N_STATES:
            raise LabelOutOfRange(f"label {self.label} not in 0..{N_STATES - 1}")

    @property
    def n_samples(self) -> int:
        return len(self.signals[SIGNAL_NAMES[0]])

    def as_matrix(self) -> np.ndarray:
        """Signals stacked as a (13, n_samples) array in canonical order."""
        return np.stack([self.signals[name] for name in SIGNAL_NAMES])

    def with_signals(self, matrix: np.ndarray) -> "RawRecordTable":
        """Same metadata, replaced signal data (e.g. after filtering)."""
        signals = {name: np.asarray(matrix[i], dtype=np.float64) for i, name in enumerate(SIGNAL_NAMES)}
        return RawRecordTable(signals, self.sample_period_s, self.label, self.source_name)


def from_matrix(matrix: np.ndarray, label: int, sample_period_s: float = DEFAULT_SAMPLE_PERIOD_S,
                source_name: str = "") -> RawRecordTable:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] != N_SIGNALS:
        raise ValueError(f"expected {N_SIGNALS} signal rows, got {matrix.shape[0]}")
    signals = {name: matrix[i] for i, name in enumerate(SIGNAL_NAMES)}
    return RawRecordTable(signals, sample_period_s, label, source_name)


def load_gpvs_csv(path, label: int, column_map: dict[str, str] | None = None,
                  time_column: str = DEFAULT_TIME_COLUMN,
                  sample_period_s: float = DEFAULT_SAMPLE_PERIOD_S) -> RawRecordTable:
    """Parse one waveform CSV, dropping the time column.

    `column_map` maps canonical signal names to the header names actually in
    the file (identity by default). Any non-numeric data cell aborts the load
    with its 1-based row number; silently skipping rows would desynchronize
    cycle boundaries downstream.
    """
    column_map = column_map or {}
    header_for = {name: column_map.get(name, name) for name in SIGNAL_NAMES}

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        positions = {}
        for name in SIGNAL_NAMES:
            wanted = header_for[name]
            if wanted not in header:
                raise MissingColumn(wanted)
            positions[name] = header.index(wanted)
        cols = [positions[name] for name in SIGNAL_NAMES]

        chunks: list[np.ndarray] = []
        pending: list[list[str]] = []
        row_no = 1  # header row
        first_data_row = 2
        for row in reader:
            row_no += 1
            try:
                pending.append([row[c] for c in cols])
            except IndexError:
                short = next(name for name in SIGNAL_NAMES if positions[name] >= len(row))
                raise NonNumericCell(row_no, short, "<missing>") from None
            if len(pending) >= _CHUNK_ROWS:
                chunks.append(_parse_chunk(pending, first_data_row))
                first_data_row = row_no + 1
                pending = []
        if pending:
            chunks.append(_parse_chunk(pending, first_data_row))

    if not chunks:
        raise EmptyFile(f"{path}: no data rows")
    data = np.concatenate(chunks, axis=0)  # (n_rows, 13)
    signals = {name: np.ascontiguousarray(data[:, i]) for i, name in enumerate(SIGNAL_NAMES)}
    return RawRecordTable(signals, sample_period_s, label, source_name=str(path))


def _parse_chunk(rows: list[list[str]], first_row_no: int) -> np.ndarray:
    try:
        return np.asarray(rows, dtype=np.float64)
    except ValueError:
        pass
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            try:
                float(cell)
            except ValueError:
                raise NonNumericCell(first_row_no + i, SIGNAL_NAMES[j], cell) from None
    raise NonNumericCell(first_row_no, SIGNAL_NAMES[0], "<ragged row>")


def write_gpvs_csv(table: RawRecordTable, path, time_column: str = DEFAULT_TIME_COLUMN,
                   column_map: dict[str, str] | None = None) -> None:
    """Write the schema load_gpvs_csv reads, with a synthetic time column.

    Floats are written as repr() so a write/read round trip is bit-exact.
    """
    column_map = column_map or {}
    names = [column_map.get(name, name) for name in SIGNAL_NAMES]
    n = table.n_samples
    dt = table.sample_period_s
    columns = [table.signals[name] for name in SIGNAL_NAMES]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([time_column, *names])
        for i in range(n):
            writer.writerow([repr(i * dt), *(repr(float(col[i])) for col in columns)])
