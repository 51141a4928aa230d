import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvfaultsig.errors import EmptyInput
from pvfaultsig.ingest import SIGNAL_NAMES, from_matrix
from pvfaultsig.signatures import (FEATURE_NAMES, batch_stats,
                                   build_signature_dataset, read_signature_csv,
                                   window, write_signature_csv)


def _table(n_samples, label=0, fill=0.0):
    return from_matrix(np.full((13, n_samples), fill), label=label)


def _window_of(values):
    """A 13-signal window whose first signal is `values`, rest zeros."""
    w = np.zeros((13, len(values)))
    w[0] = values
    return w


def test_feature_names_signal_major():
    assert FEATURE_NAMES[:5] == ("Vpv_mean", "Vpv_std", "Vpv_max", "Vpv_min", "Ipv_mean")
    assert len(FEATURE_NAMES) == 52
    assert len(set(FEATURE_NAMES)) == 52


@pytest.mark.parametrize("n,expected", [(141014, 705), (199, 0), (400, 2), (200, 1)])
def test_window_counts(n, expected):
    wins = window(_table(n))
    assert wins.shape[0] == expected
    if expected:
        assert wins.shape[1:] == (13, 200)


def test_windows_contiguous_non_overlapping():
    matrix = np.tile(np.arange(1000, dtype=float), (13, 1))
    wins = window(from_matrix(matrix, label=0), batch_len=200)
    assert wins.shape == (5, 13, 200)
    for i in range(5):
        assert wins[i, 0, 0] == i * 200
        assert wins[i, 0, -1] == i * 200 + 199


def test_batch_stats_classic_population_identity():
    # {2,4,4,4,5,5,7,9}: mean 5, population std exactly 2
    vec = batch_stats(_window_of([2, 4, 4, 4, 5, 5, 7, 9]))
    named = vec.named()
    assert named["Vpv_mean"] == 5.0
    assert named["Vpv_std"] == 2.0
    assert named["Vpv_max"] == 9.0
    assert named["Vpv_min"] == 2.0


def test_batch_stats_constant_window():
    named = batch_stats(_window_of([5.0] * 10)).named()
    assert (named["Vpv_mean"], named["Vpv_std"], named["Vpv_max"], named["Vpv_min"]) == (5, 0, 5, 5)


def test_batch_stats_divisor_n():
    # [1,2,3,4]: mean 2.5, population variance 1.25 (the N-1 form would give ~1.29)
    named = batch_stats(_window_of([1, 2, 3, 4])).named()
    assert named["Vpv_mean"] == pytest.approx(2.5, abs=1e-12)
    assert named["Vpv_std"] == pytest.approx(1.1180339887498949, abs=1e-12)
    assert named["Vpv_max"] == 4.0
    assert named["Vpv_min"] == 1.0


finite_floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite_floats, min_size=2, max_size=40), st.randoms())
def test_permutation_invariance(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a = batch_stats(_window_of(values)).values
    b = batch_stats(_window_of(shuffled)).values
    assert np.allclose(a, b, rtol=0, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite_floats, min_size=2, max_size=40),
       st.floats(min_value=-1e5, max_value=1e5, allow_nan=False))
def test_shift_property(values, c):
    base = batch_stats(_window_of(values)).named()
    shifted = batch_stats(_window_of([v + c for v in values])).named()
    assert shifted["Vpv_mean"] == pytest.approx(base["Vpv_mean"] + c, abs=1e-6)
    assert shifted["Vpv_max"] == pytest.approx(base["Vpv_max"] + c, abs=1e-6)
    assert shifted["Vpv_min"] == pytest.approx(base["Vpv_min"] + c, abs=1e-6)
    assert shifted["Vpv_std"] == pytest.approx(base["Vpv_std"], abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite_floats, min_size=2, max_size=40),
       st.floats(min_value=0, max_value=1e3, allow_nan=False))
def test_scale_property(values, k):
    base = batch_stats(_window_of(values)).values
    scaled = batch_stats(_window_of([v * k for v in values])).values
    assert np.allclose(scaled, base * k, rtol=1e-9, atol=1e-6)


def test_min_mean_max_ordering(small_synth_tables):
    table = build_signature_dataset(small_synth_tables[:2])
    for sig in SIGNAL_NAMES:
        lo = table.features[:, FEATURE_NAMES.index(f"{sig}_min")]
        mid = table.features[:, FEATURE_NAMES.index(f"{sig}_mean")]
        hi = table.features[:, FEATURE_NAMES.index(f"{sig}_max")]
        sd = table.features[:, FEATURE_NAMES.index(f"{sig}_std")]
        assert np.all(lo <= mid) and np.all(mid <= hi) and np.all(sd >= 0)


def test_build_dataset_row_count_and_label_order():
    tables = [_table(450, label=2, fill=2.0), _table(401, label=0, fill=0.5),
              _table(200, label=1, fill=1.0)]
    ds = build_signature_dataset(tables)
    assert ds.n_rows == 2 + 2 + 1
    assert ds.labels.tolist() == [0, 0, 1, 2, 2]  # concatenated in label order
    assert ds.class_counts == {0: 2, 1: 1, 2: 2}


def test_build_dataset_empty_input():
    with pytest.raises(EmptyInput):
        build_signature_dataset([])


def test_signature_csv_round_trip(tmp_path, small_synth_tables):
    ds = build_signature_dataset(small_synth_tables[:3])
    path = tmp_path / "sig.csv"
    write_signature_csv(ds, path)
    back = read_signature_csv(path)
    assert back.feature_names == list(ds.feature_names)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
