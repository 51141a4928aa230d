import numpy as np
import pytest

from pvfaultsig.errors import EmptyFile, MissingColumn, NonNumericCell
from pvfaultsig.ingest import (SIGNAL_NAMES, from_matrix, load_gpvs_csv,
                               write_gpvs_csv)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _full_header(time_first=True):
    return ["Time", *SIGNAL_NAMES] if time_first else [*SIGNAL_NAMES, "Time"]


def test_basic_parse_vpv_values(tmp_path):
    path = tmp_path / "fix.csv"
    rows = [[i * 1e-4] + [0.0] * 13 for i in range(3)]
    for i, v in enumerate([1.0, 2.0, 3.0]):
        rows[i][1] = v  # Vpv is the first signal column
    _write_csv(path, _full_header(), rows)
    table = load_gpvs_csv(path, label=0)
    assert table.n_samples == 3
    assert table.signals["Vpv"].tolist() == [1.0, 2.0, 3.0]
    assert list(table.signals) == list(SIGNAL_NAMES)


def test_missing_column(tmp_path):
    path = tmp_path / "fix.csv"
    header = [h for h in _full_header() if h != "Vdc"]
    _write_csv(path, header, [[0.0] * len(header)])
    with pytest.raises(MissingColumn, match="Vdc"):
        load_gpvs_csv(path, label=0)


def test_non_numeric_cell_reports_location(tmp_path):
    path = tmp_path / "fix.csv"
    rows = [[0.0] * 14, [0.0] * 14]
    rows[1][3] = "oops"  # Vdc column, data row 2 => file row 3
    _write_csv(path, _full_header(), rows)
    with pytest.raises(NonNumericCell) as err:
        load_gpvs_csv(path, label=0)
    assert err.value.row == 3
    assert err.value.column == "Vdc"


def test_empty_file(tmp_path):
    path = tmp_path / "fix.csv"
    path.write_text("")
    with pytest.raises(EmptyFile):
        load_gpvs_csv(path, label=0)
    path.write_text(",".join(_full_header()) + "\n")
    with pytest.raises(EmptyFile):
        load_gpvs_csv(path, label=0)


def test_scientific_notation_and_header_order_independence(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.normal(size=(13, 5)) * 1e-3
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _write_csv(a, _full_header(True),
               [[i] + [f"{data[j, i]:e}" for j in range(13)] for i in range(5)])
    # same data, time column last and signal columns reversed
    _write_csv(b, [*reversed(SIGNAL_NAMES), "Time"],
               [[f"{data[j, i]:e}" for j in reversed(range(13))] + [i] for i in range(5)])
    ta = load_gpvs_csv(a, label=1)
    tb = load_gpvs_csv(b, label=1)
    for name in SIGNAL_NAMES:
        assert ta.signals[name].tolist() == tb.signals[name].tolist()


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(9)
    table = from_matrix(rng.normal(size=(13, 257)) * 1e3, label=5)
    path = tmp_path / "rt.csv"
    write_gpvs_csv(table, path)
    back = load_gpvs_csv(path, label=5, sample_period_s=table.sample_period_s)
    for name in SIGNAL_NAMES:
        assert np.array_equal(back.signals[name], table.signals[name])


def test_column_map(tmp_path):
    path = tmp_path / "fix.csv"
    header = ["t"] + [f"col{i}" for i in range(13)]
    _write_csv(path, header, [[0.1 * i for i in range(14)]])
    cmap = {name: f"col{i}" for i, name in enumerate(SIGNAL_NAMES)}
    table = load_gpvs_csv(path, label=0, column_map=cmap, time_column="t")
    assert table.signals["Vpv"][0] == pytest.approx(0.1)
    assert table.signals["f_v"][0] == pytest.approx(1.3)


def test_ragged_row_rejected(tmp_path):
    path = tmp_path / "fix.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_full_header()) + "\n")
        fh.write(",".join(["0.0"] * 14) + "\n")
        fh.write("0.0,1.0\n")
    with pytest.raises(NonNumericCell) as err:
        load_gpvs_csv(path, label=0)
    assert err.value.row == 3
