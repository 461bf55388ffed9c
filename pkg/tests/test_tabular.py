import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulecg.tabular import (CATEGORICAL, EQ, GT, LE, NE, NUMERIC, DataError, TabularDataset,
                            apply_descriptors, binarize, compute_stats, load_csv, split)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def numeric_ds(*cols, labels=None):
    n = len(cols[0])
    labels = np.zeros(n, np.int8) if labels is None else np.asarray(labels, np.int8)
    names = tuple(f"x{j}" for j in range(len(cols)))
    return TabularDataset(names, (NUMERIC,) * len(cols),
                          tuple(np.asarray(c, float) for c in cols), labels)


class TestLoadCsv:
    def test_four_rows_with_declared_positive(self, tmp_path):
        p = write(tmp_path, "age,y\n30,good\n41,bad\n25,good\n60,bad\n")
        ds = load_csv(p, "y", positive="good")
        assert ds.n == 4
        assert ds.feature_names == ("age",)
        assert ds.column_kinds == (NUMERIC,)
        assert ds.labels.tolist() == [1, 0, 1, 0]

    def test_text_column_is_categorical(self, tmp_path):
        p = write(tmp_path, "color,y\nred,1\nblue,0\nred,1\n")
        ds = load_csv(p, "y")
        assert ds.column_kinds == (CATEGORICAL,)
        assert compute_stats(ds).domain[0] == ("blue", "red")

    def test_ragged_row_names_line(self, tmp_path):
        p = write(tmp_path, "a,b,y\n1,2,0\n3,1\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(p, "y")

    @pytest.mark.parametrize("text,match", [
        ("", "empty"),
        ("a,y\n1,0\n", None),
        ("a,y\n1,0\n2,1\n3,2\n", "distinct"),
        ("a,y\n1,\n2,1\n", "missing value"),
        ("a,b\n1,0\n", "not found"),
    ])
    def test_errors(self, tmp_path, text, match):
        p = write(tmp_path, text)
        if match is None:
            assert load_csv(p, "y").n == 1
            return
        label = "y"
        with pytest.raises(DataError, match=match):
            load_csv(p, label)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv", "y")

    def test_kind_override(self, tmp_path):
        p = write(tmp_path, "zip,y\n10001,1\n20002,0\n")
        ds = load_csv(p, "y", kind_overrides={"zip": CATEGORICAL})
        assert ds.column_kinds == (CATEGORICAL,)

    def test_without_label_column(self, tmp_path):
        p = write(tmp_path, "a,b\n1,x\n2,y\n")
        ds = load_csv(p, None)
        assert ds.feature_names == ("a", "b")
        assert ds.labels.tolist() == [0, 0]

    def test_non_binary_labels_need_positive(self, tmp_path):
        p = write(tmp_path, "a,y\n1,yes\n2,no\n")
        with pytest.raises(DataError, match="positive"):
            load_csv(p, "y")


class TestStats:
    def test_constant_column(self):
        s = compute_stats(numeric_ds([1, 1, 1]))
        assert s.mean[0] == 1.0 and s.std[0] == 0.0

    def test_population_std(self):
        # mean 1, deviations +-1, population variance 1
        s = compute_stats(numeric_ds([0, 2]))
        assert s.mean[0] == 1.0 and s.std[0] == 1.0

    def test_constant_categorical_indicator(self):
        ds = TabularDataset(("c",), (CATEGORICAL,), (np.array(["a", "a", "a"], object),),
                            np.zeros(3, np.int8))
        assert compute_stats(ds).std[0] == 0.0

    def test_categorical_indicator_std(self):
        # mode "a" with frequency 3/4: indicator std sqrt(3/16)
        ds = TabularDataset(("c",), (CATEGORICAL,), (np.array(["a", "a", "a", "b"], object),),
                            np.zeros(4, np.int8))
        s = compute_stats(ds)
        assert s.std[0] == pytest.approx(np.sqrt(3 / 16), abs=1e-15)
        assert s.mode[0] == "a"


class TestBinarize:
    def test_median_threshold(self):
        b = binarize(numeric_ds([1, 2, 3, 4]), num_thresholds=1)
        assert [(d.op, d.value) for d in b.descriptors] == [(LE, 2.5), (GT, 2.5)]
        assert b.X[:, 0].astype(int).tolist() == [1, 1, 0, 0]
        assert b.X[:, 1].astype(int).tolist() == [0, 0, 1, 1]

    def test_constant_column_dropped(self):
        b = binarize(numeric_ds([1, 2, 3, 4], [7, 7, 7, 7]), num_thresholds=3)
        assert {d.feature for d in b.descriptors} == {0}

    def test_all_constant_is_an_error(self):
        with pytest.raises(DataError, match="no usable literals"):
            binarize(numeric_ds([5, 5, 5]))

    def test_categorical_with_complements(self):
        ds = TabularDataset(("c",), (CATEGORICAL,), (np.array(["red", "blue", "red"], object),),
                            np.zeros(3, np.int8))
        b = binarize(ds)
        assert [(d.op, d.value) for d in b.descriptors] == [
            (EQ, "blue"), (NE, "blue"), (EQ, "red"), (NE, "red")]
        comp = b.complement_index()
        for j in range(b.d):
            assert np.array_equal(b.X[:, j], ~b.X[:, comp[j]])

    def test_without_complements(self):
        b = binarize(numeric_ds([1, 2, 3, 4]), num_thresholds=1, include_complements=False)
        assert [d.op for d in b.descriptors] == [LE]
        assert np.all(b.complement_index() == -1)

    def test_threshold_between_ties(self):
        # the 1/2 quantile sits inside the tie block; the threshold must not split it
        b = binarize(numeric_ds([1, 1, 1, 1, 2]), num_thresholds=1)
        assert [d.value for d in b.descriptors] == [1.5, 1.5]

    def test_xbar_and_index_sets(self):
        b = binarize(numeric_ds([1, 2, 3, 4], labels=[1, 0, 0, 1]), num_thresholds=1)
        assert np.array_equal(b.Xbar, ~b.X)
        assert b.pos_idx.tolist() == [0, 3] and b.neg_idx.tolist() == [1, 2]

    def test_sidecar_json(self, tmp_path):
        b = binarize(numeric_ds([1, 2, 3, 4]), num_thresholds=1)
        b.write_sidecar(tmp_path / "s.json")
        obj = json.loads((tmp_path / "s.json").read_text())
        assert obj["n"] == 4 and obj["d"] == 2
        assert obj["descriptors"][0] == {"feature": 0, "name": "x0", "op": "<=", "value": 2.5}

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.lists(st.integers(-5, 5), min_size=6, max_size=6), min_size=1, max_size=3),
           st.integers(1, 6))
    def test_round_trip_and_complements(self, cols, T):
        ds = numeric_ds(*cols)
        if all(len(set(c)) == 1 for c in cols):
            return
        b = binarize(ds, num_thresholds=T)
        again = apply_descriptors(ds, b.descriptors)
        assert np.array_equal(again.X, b.X)
        for j, k in enumerate(b.complement_index()):
            assert k >= 0
            assert b.X[:, j].sum() + b.X[:, k].sum() == ds.n
        # literal-by-literal evaluation on raw rows matches too
        for i in range(ds.n):
            row = ds.row(i)
            assert [d.holds(row[d.feature]) for d in b.descriptors] == b.X[i].tolist()


class TestSplit:
    def test_deterministic(self):
        ds = numeric_ds(np.arange(10), labels=[0, 1] * 5)
        a = split(ds, 0.2, 7)
        b = split(ds, 0.2, 7)
        assert np.array_equal(a[1].columns[0], b[1].columns[0])

    def test_stratified(self):
        ds = numeric_ds(np.arange(10), labels=[0] * 5 + [1] * 5)
        train, test = split(ds, 0.2, 0)
        assert sorted(test.labels.tolist()) == [0, 1]
        assert train.n == 8

    def test_partition(self):
        ds = numeric_ds(np.arange(23), labels=np.arange(23) % 3 == 0)
        train, test = split(ds, 0.3, 5)
        got = sorted(train.columns[0].tolist() + test.columns[0].tolist())
        assert got == list(range(23))

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.1, 1.5])
    def test_bad_fraction(self, frac):
        with pytest.raises(ValueError):
            split(numeric_ds([1, 2, 3]), frac, 0)

    def test_single_member_class_falls_back(self):
        ds = numeric_ds(np.arange(6), labels=[1, 0, 0, 0, 0, 0])
        with pytest.warns(UserWarning, match="unstratified"):
            train, test = split(ds, 0.5, 0)
        assert train.n + test.n == 6
