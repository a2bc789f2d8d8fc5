import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import make_dataset
from dqlap.data import (CsvSchema, DataError, Dataset, ScalerParams, SplitSpec, SyntheticSpec,
                        apply_scaler, cumulative_through_day, fit_scaler, generate_synthetic,
                        load_csv, separation_for_bayes_error, split, write_csv)


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_drops_flagged_rows_in_order(tmp_path):
    path = write(tmp_path, "day,label,a,b,drop\n1,1,0.5,2,\n1,0,1.5,3,\n2,1,9,9,drop-it\n2,0,2.5,4,\n")
    data = load_csv(path)
    assert len(data) == 3
    assert data.features[:, 0].tolist() == [0.5, 1.5, 2.5]
    assert data.labels.tolist() == [1, 0, 0]
    assert data.days.tolist() == [1, 1, 2]
    assert data.feature_names == ("a", "b")
    assert data.scaler is None


def test_load_rejects_unknown_label(tmp_path):
    path = write(tmp_path, "day,label,a\n1,1,0.5\n1,2,0.7\n")
    with pytest.raises(DataError, match=r"row 3.*'2'"):
        load_csv(path)


def test_load_rejects_non_numeric_feature(tmp_path):
    path = write(tmp_path, "day,label,a\n1,1,x\n")
    with pytest.raises(DataError, match="row 2.*'x'"):
        load_csv(path)


def test_load_rejects_ragged_rows(tmp_path):
    path = write(tmp_path, "day,label,a,b\n1,1,0.5\n")
    with pytest.raises(DataError, match="row 2"):
        load_csv(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "nope.csv")


def test_load_day_indexed_csv(tmp_path):
    names = [f"sensor_{i}" for i in range(31)]
    rows = ["day,label," + ",".join(names) + ",drop"]
    rng = np.random.default_rng(0)
    for i in range(12):
        rows.append(f"{i % 4 + 1},{i % 2}," + ",".join(f"{v:.6f}" for v in rng.random(31)) + ",")
    data = load_csv(write(tmp_path, "\n".join(rows) + "\n"))
    assert data.feature_count == 31 and len(data) == 12 and data.day_count == 4


def test_load_explicit_schema(tmp_path):
    path = write(tmp_path, "when,y,a,b,skip\n3,1,1,2,x\n")
    data = load_csv(path, CsvSchema(day="when", label="y", drop="skip", drop_value="yes",
                                    features=("b",)))
    assert data.features.tolist() == [[2.0]] and data.days.tolist() == [3]


def test_csv_round_trip(tmp_path):
    data = generate_synthetic(SyntheticSpec(feature_count=5, days=3, samples_per_day=20, seed=4))
    write_csv(data, tmp_path / "a.csv")
    again = load_csv(tmp_path / "a.csv")
    assert again == data
    write_csv(again, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_dataset_invariants():
    with pytest.raises(DataError):
        make_dataset([[np.nan]], [0])
    with pytest.raises(DataError):
        make_dataset([[1.0]], [3])
    with pytest.raises(DataError):
        make_dataset([[1.0]], [1], days=[0])
    with pytest.raises(DataError):
        make_dataset([[1.0]], [1], days=[5], day_count=3)


@pytest.mark.parametrize("column, lo, hi", [([0, 10, 5], 0, 10), ([3, 3], 3, 3)])
def test_fit_scaler_extrema(column, lo, hi):
    s = fit_scaler(make_dataset(np.array(column, float)[:, None], [0] * len(column)))
    assert s.minimum.tolist() == [lo] and s.maximum.tolist() == [hi]


def test_fit_scaler_two_features():
    s = fit_scaler(make_dataset([[1, 4], [3, 8]], [0, 1]))
    assert s.minimum.tolist() == [1, 4] and s.maximum.tolist() == [3, 8]


def test_fit_scaler_empty():
    with pytest.raises(DataError):
        fit_scaler(make_dataset(np.zeros((0, 2)), []))


def test_apply_scaler_values():
    s = ScalerParams(np.array([0.0, 3.0]), np.array([10.0, 3.0]))
    out = apply_scaler(make_dataset([[5, 3], [0, 7], [10, -1], [20, 3], [-5, 3]], [0] * 5), s)
    assert out.features.tolist() == [[0.5, 0], [0, 0], [1, 0], [1, 0], [0, 0]]
    assert out.scaler is s


def test_apply_scaler_dimension_mismatch():
    s = ScalerParams(np.zeros(3), np.ones(3))
    with pytest.raises(DataError):
        apply_scaler(make_dataset([[1, 2]], [0]), s)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_scaled_training_data_spans_unit_interval(x):
    data = make_dataset(x, [0] * len(x))
    out = apply_scaler(data, fit_scaler(data)).features
    assert np.all((out >= 0) & (out <= 1))
    for j in range(x.shape[1]):
        if x[:, j].min() == x[:, j].max():
            assert np.all(out[:, j] == 0)
        else:
            assert out[:, j].min() == 0 and out[:, j].max() == 1


def test_split_counts_and_determinism():
    data = make_dataset(np.arange(10.0)[:, None], [0, 1] * 5)
    tr, te = split(data, SplitSpec(0.7, seed=3))
    assert len(tr) == 7 and len(te) == 3
    tr2, te2 = split(data, SplitSpec(0.7, seed=3))
    assert tr == tr2 and te == te2
    assert sorted(tr.features[:, 0].tolist() + te.features[:, 0].tolist()) == list(range(10))
    assert list(tr.features[:, 0]) == sorted(tr.features[:, 0])


def test_stratified_split_arithmetic():
    labels = [1] * 90 + [0] * 10
    data = make_dataset(np.arange(100.0)[:, None], labels)
    tr, te = split(data, SplitSpec(0.7, seed=0, stratified=True))
    assert tr.class_counts().tolist() == [7, 63]
    assert te.class_counts().tolist() == [3, 27]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=80), st.floats(0.05, 0.95), st.integers(0, 99))
def test_stratified_split_properties(labels, fraction, seed):
    data = make_dataset(np.arange(len(labels), dtype=float)[:, None], labels)
    tr, _ = split(data, SplitSpec(fraction, seed=seed))
    assert len(tr) == int(np.floor(fraction * len(labels) + 0.5))
    for cls in (0, 1):
        n_cls = labels.count(cls)
        assert abs(tr.class_counts()[cls] - fraction * n_cls) <= 1


def test_split_fraction_validated():
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            SplitSpec(bad)


def test_per_day_split_nests_across_windows():
    data = generate_synthetic(SyntheticSpec(feature_count=3, days=4, samples_per_day=30, seed=1))
    spec = SplitSpec(0.7, seed=5, per_day=True)
    tr3, te3 = split(cumulative_through_day(data, 3), spec)
    tr4, te4 = split(cumulative_through_day(data, 4), spec)
    assert tr4.take(tr4.days <= 3) == tr3 and te4.take(te4.days <= 3) == te3


def test_cumulative_through_day():
    data = make_dataset(np.arange(9.0)[:, None], [0] * 9, days=[1, 1, 2, 2, 2, 3, 3, 3, 3])
    assert cumulative_through_day(data, 3) == data
    assert cumulative_through_day(data, 1).features[:, 0].tolist() == [0, 1]
    assert len(cumulative_through_day(data, 2)) == 5
    for bad in (0, 4):
        with pytest.raises(DataError):
            cumulative_through_day(data, bad)


def test_cumulative_windows_nest():
    data = generate_synthetic(SyntheticSpec(feature_count=2, days=5, samples_per_day=7, seed=2))
    for d in range(1, 5):
        small, big = cumulative_through_day(data, d), cumulative_through_day(data, d + 1)
        assert big.take(big.days <= d) == small


def test_synthetic_balanced_stationary():
    data = generate_synthetic(SyntheticSpec(feature_count=4, days=3, samples_per_day=300,
                                            imbalance_ratio=1, drift_rate=0))
    for d in (1, 2, 3):
        assert np.bincount(data.labels[data.days == d]).tolist() == [150, 150]


def test_synthetic_ratio_two():
    data = generate_synthetic(SyntheticSpec(feature_count=4, days=2, samples_per_day=300,
                                            imbalance_ratio=2))
    for d in (1, 2):
        assert np.bincount(data.labels[data.days == d]).tolist() == [100, 200]


@pytest.mark.parametrize("spd, ratio", [(300, 3), (101, 2.5), (7, 1), (10, 9)])
def test_synthetic_count_rule(spd, ratio):
    data = generate_synthetic(SyntheticSpec(feature_count=2, days=2, samples_per_day=spd,
                                            imbalance_ratio=ratio))
    n_fault = int(np.floor(spd / (1 + ratio)))
    assert np.bincount(data.labels[data.days == 1], minlength=2).tolist() == [n_fault, spd - n_fault]


def test_synthetic_is_deterministic(tmp_path):
    spec = SyntheticSpec(feature_count=6, days=3, samples_per_day=40, drift_rate=0.2, seed=11)
    write_csv(generate_synthetic(spec), tmp_path / "a.csv")
    write_csv(generate_synthetic(spec), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_synthetic_drift_moves_means():
    spec = SyntheticSpec(feature_count=3, days=10, samples_per_day=2000, drift_rate=1.0, seed=0)
    data = generate_synthetic(spec)
    first = data.features[data.days == 1].mean(axis=0)
    last = data.features[data.days == 10].mean(axis=0)
    # means move 9 units along a unit direction
    assert np.linalg.norm(last - first) == pytest.approx(9.0, abs=0.15)


def test_synthetic_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(imbalance_ratio=0.5)
    with pytest.raises(ValueError):
        SyntheticSpec(samples_per_day=0)
    with pytest.raises(ValueError):
        SyntheticSpec(class_separation=-1)


def test_separation_for_bayes_error():
    # equal-prior Bayes error of two unit Gaussians d apart is Phi(-d/2)
    d = separation_for_bayes_error(0.05)
    assert d == pytest.approx(3.2897072539029, rel=1e-9)


def test_dataset_is_immutable():
    data = make_dataset([[1.0, 2.0]], [1])
    with pytest.raises(ValueError):
        data.features[0, 0] = 5
    assert isinstance(data[0].features, np.ndarray) and data[0].label == 1
