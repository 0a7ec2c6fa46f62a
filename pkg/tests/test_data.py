import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from adshap.data import DataError, Dataset, load_csv, make_synthetic, split, standardize


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_with_label(tmp_path):
    p = write(tmp_path, "a,b,label\n1,2,0\n3,4,1\n5,6,0\n")
    ds = load_csv(p, "label")
    assert ds.feature_names == ("a", "b")
    assert ds.features.shape == (3, 2)
    np.testing.assert_array_equal(ds.labels, [0, 1, 0])
    assert ds.name == "d"


def test_load_csv_without_label(tmp_path):
    ds = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n"))
    assert ds.labels is None and ds.d == 2


def test_load_csv_reports_location(tmp_path):
    p = write(tmp_path, "a,b,label\n1,2,0\n3,x,1\n")
    with pytest.raises(DataError, match=r"d\.csv:3.*b"):
        load_csv(p, "label")


def test_load_csv_missing_label_column(tmp_path):
    with pytest.raises(DataError, match="label"):
        load_csv(write(tmp_path, "a,b\n1,2\n"), "label")


def test_load_csv_bad_labels(tmp_path):
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "a,label\n1,0\n2,7\n"), "label")


def test_load_csv_missing_file(tmp_path):
    with pytest.raises((DataError, FileNotFoundError)):
        load_csv(tmp_path / "nope.csv")


def test_dataset_is_immutable():
    ds = Dataset(np.zeros((3, 2)), np.array([0, 1, 0]))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_dataset_rejects_non_finite():
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan, 1.0], [0.0, 1.0]]))


def test_split_partitions_rows():
    ds = make_synthetic(n=53, d=3, seed=4)
    pair = split(ds, 0.8, seed=7)
    assert pair.train.n == int(np.floor(0.8 * 53))
    assert pair.train.n + pair.test.n == 53
    both = np.concatenate([pair.train_index, pair.test_index])
    assert sorted(both.tolist()) == list(range(53))
    np.testing.assert_array_equal(pair.test.features, ds.features[pair.test_index])


def test_split_is_seeded():
    ds = make_synthetic(n=40, seed=1)
    a, b, c = split(ds, seed=3), split(ds, seed=3), split(ds, seed=4)
    np.testing.assert_array_equal(a.train_index, b.train_index)
    assert not np.array_equal(a.train_index, c.train_index)


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.2, 1.5])
def test_split_rejects_bad_fraction(frac):
    with pytest.raises(DataError):
        split(make_synthetic(n=20), frac)


def test_standardize_uses_train_statistics():
    ds = make_synthetic(n=100, d=4, seed=2)
    pair = standardize(split(ds, seed=0))
    np.testing.assert_allclose(pair.train.features.mean(0), 0.0, atol=1e-12)
    np.testing.assert_allclose(pair.train.features.std(0), 1.0, atol=1e-12)
    raw = split(ds, seed=0)
    mu, sd = raw.train.features.mean(0), raw.train.features.std(0)
    np.testing.assert_allclose(pair.test.features, (raw.test.features - mu) / sd)


def test_standardize_constant_column_only_centred():
    X = np.column_stack([np.arange(10.0), np.full(10, 3.0)])
    pair = standardize(split(Dataset(X, np.zeros(10, dtype=int)), seed=0))
    assert np.all(pair.train.features[:, 1] == 0.0)
    assert np.all(np.isfinite(pair.test.features))


def test_make_synthetic_shape_and_labels():
    ds = make_synthetic(n=200, d=5, anomaly_fraction=0.05, seed=0)
    assert ds.features.shape == (200, 5)
    assert ds.labels.sum() == 10
    # anomalies sit away from the origin
    r = np.linalg.norm(ds.features, axis=1)
    assert r[ds.labels == 1].mean() > r[ds.labels == 0].mean()


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 60), frac=st.floats(0.05, 0.95), seed=st.integers(0, 2**31))
def test_split_property_disjoint_cover(n, frac, seed):
    assume(0 < int(np.floor(frac * n)) < n)
    ds = Dataset(np.arange(n, dtype=float)[:, None])
    pair = split(ds, frac, seed)
    tr, te = set(pair.train_index.tolist()), set(pair.test_index.tolist())
    assert not tr & te and tr | te == set(range(n))
