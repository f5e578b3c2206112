import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcgprune.data_model import Dataset, FeatureKind, FeatureMask, InstanceMask
from rcgprune.metric import DistanceSpec, distance, pairwise_matrix
from tests.conftest import random_numeric_dataset

from rcgprune.data_model import load_csv


def numeric_ds(values, labels=None):
    values = np.asarray(values, dtype=float)
    if labels is None:
        labels = [i % 2 for i in range(len(values))]
    return Dataset.from_arrays(values, labels, class_names=["a", "b"])


def mixed_ds(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text(
        "num,color,class\n2.0,red,a\n7.0,red,b\n2.0,blue,a\n0.0,blue,b\n10.0,red,a\n",
        encoding="utf-8",
    )
    return load_csv(path, "class")


def test_identity_distance_zero():
    ds = numeric_ds([[1.0, 2.0], [3.0, 4.0]])
    spec = DistanceSpec.for_training(ds)
    assert distance(ds, 0, 0, FeatureMask.full(2), spec) == 0.0


def test_single_categorical_overlap(tmp_path):
    ds = mixed_ds(tmp_path)
    spec = DistanceSpec.for_training(ds)
    only_color = FeatureMask.from_indices(2, [1])
    assert distance(ds, 0, 2, only_color, spec) == 1.0
    assert distance(ds, 0, 1, only_color, spec) == 0.0


def test_range_normalized_numeric(tmp_path):
    ds = mixed_ds(tmp_path)
    spec = DistanceSpec.for_training(ds)
    only_num = FeatureMask.from_indices(2, [0])
    assert distance(ds, 0, 1, only_num, spec) == pytest.approx(0.5, abs=1e-15)


def test_collinear_points():
    ds = numeric_ds([[0.0], [1.0], [2.0]], labels=[0, 1, 0])
    spec = DistanceSpec.for_training(ds)
    m = pairwise_matrix(ds, InstanceMask.full(3), FeatureMask.full(1), spec)
    assert m[0, 1] == pytest.approx(0.5)
    assert m[0, 2] == pytest.approx(1.0)
    assert m[1, 2] == pytest.approx(0.5)


def test_single_alive_row():
    ds = numeric_ds([[0.0], [1.0]])
    spec = DistanceSpec.for_training(ds)
    m = pairwise_matrix(ds, InstanceMask.from_indices(2, [1]), FeatureMask.full(1), spec)
    assert m.shape == (1, 1) and m[0, 0] == 0.0


def test_matrix_matches_double_loop_oracle(rng):
    ds = random_numeric_dataset(rng, 20, 5, 2)
    spec = DistanceSpec.for_training(ds)
    fmask = FeatureMask.full(5)
    m = pairwise_matrix(ds, InstanceMask.full(20), fmask, spec)
    ranges = [(ds.columns[j].min(), ds.columns[j].max()) for j in range(5)]
    for i in range(20):
        for j in range(20):
            total = 0.0
            for col in range(5):
                lo, hi = ranges[col]
                d = abs(ds.columns[col][i] - ds.columns[col][j]) / (hi - lo) if hi > lo else 0.0
                d = min(d, 1.0)
                total += d * d
            assert m[i, j] == pytest.approx(math.sqrt(total), abs=1e-12)


def test_empty_feature_mask_rejected():
    ds = numeric_ds([[0.0], [1.0]])
    spec = DistanceSpec.for_training(ds)
    with pytest.raises(ValueError, match="no columns"):
        pairwise_matrix(ds, InstanceMask.full(2), FeatureMask.from_indices(1, []), spec)


def test_clamping_out_of_range():
    ds = numeric_ds([[0.0], [10.0], [100.0]], labels=[0, 1, 0])
    # ranges frozen on the first two rows only
    spec = DistanceSpec.for_training(ds, InstanceMask.from_indices(3, [0, 1]))
    d = distance(ds, 0, 2, FeatureMask.full(1), spec)
    assert d == 1.0


def test_constant_column_contributes_zero():
    ds = numeric_ds([[5.0, 1.0], [5.0, 2.0]])
    spec = DistanceSpec.for_training(ds)
    only_const = FeatureMask.from_indices(2, [0])
    assert distance(ds, 0, 1, only_const, spec) == 0.0


def test_no_normalize_uses_raw_differences():
    ds = numeric_ds([[0.0], [10.0]])
    spec = DistanceSpec.for_training(ds, normalize=False)
    assert distance(ds, 0, 1, FeatureMask.full(1), spec) == 10.0


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 15), p=st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_symmetry_and_zero_diagonal(seed, n, p):
    ds = random_numeric_dataset(np.random.default_rng(seed), n, p, 2)
    spec = DistanceSpec.for_training(ds)
    m = pairwise_matrix(ds, InstanceMask.full(n), FeatureMask.full(p), spec)
    assert np.allclose(m, m.T)
    assert np.all(np.diag(m) == 0.0)


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_mask_growth_never_shrinks_distance(seed):
    rng = np.random.default_rng(seed)
    ds = random_numeric_dataset(rng, 10, 4, 2)
    spec = DistanceSpec.for_training(ds)
    cols = list(rng.permutation(4))
    prev = np.zeros((10, 10))
    for stop in range(1, 5):
        fmask = FeatureMask.from_indices(4, cols[:stop])
        m = pairwise_matrix(ds, InstanceMask.full(10), fmask, spec)
        assert np.all(m >= prev - 1e-12)
        prev = m
