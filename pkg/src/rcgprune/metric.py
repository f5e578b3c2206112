"""Mixed-type distances restricted to a feature mask.

Numeric features contribute a range-normalized absolute difference (ranges
frozen from the training rows, out-of-range values clamped so one feature
never contributes more than 1); categorical features contribute the overlap
rule (0 if equal, 1 otherwise).  Per-feature differences aggregate as a
Euclidean sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_model import Dataset, FeatureKind, FeatureMask, InstanceMask


@dataclass(frozen=True)
class DistanceSpec:
    """Distance configuration with training-frozen numeric ranges.

    ranges[j] is (lo, hi) for numeric column j and None for categorical
    columns; a None ranges attribute disables normalization entirely
    (raw absolute differences).
    """

    ranges: tuple[tuple[float, float] | None, ...] | None = None

    @classmethod
    def for_training(
        cls, ds: Dataset, imask: InstanceMask | None = None, normalize: bool = True
    ) -> "DistanceSpec":
        """Freeze per-column ranges from the training rows, before any
        reduction touches them; prevents leakage from test rows."""
        if not normalize:
            return cls(ranges=None)
        rows = imask.indices() if imask is not None else np.arange(ds.n)
        ranges: list[tuple[float, float] | None] = []
        for j, meta in enumerate(ds.feature_meta):
            if meta.kind is FeatureKind.NUMERIC:
                vals = ds.columns[j][rows]
                ranges.append((float(vals.min()), float(vals.max())))
            else:
                ranges.append(None)
        return cls(ranges=tuple(ranges))

    def feature_diff_column(self, ds: Dataset, col: int, a_vals: np.ndarray, b_vals: np.ndarray) -> np.ndarray:
        """Vectorized per-feature difference between two aligned value arrays."""
        meta = ds.feature_meta[col]
        if meta.kind is FeatureKind.CATEGORICAL:
            return (a_vals != b_vals).astype(np.float64)
        diff = np.abs(a_vals - b_vals)
        if self.ranges is None:
            return diff
        lo, hi = self.ranges[col]
        width = hi - lo
        if width <= 0.0:
            return np.zeros_like(diff)
        return np.minimum(diff / width, 1.0)


def _feature_diff_scalar(ds: Dataset, spec: DistanceSpec, col: int, a: int, b: int) -> float:
    meta = ds.feature_meta[col]
    va, vb = ds.columns[col][a], ds.columns[col][b]
    if meta.kind is FeatureKind.CATEGORICAL:
        return 0.0 if va == vb else 1.0
    diff = abs(float(va) - float(vb))
    if spec.ranges is None:
        return diff
    lo, hi = spec.ranges[col]
    width = hi - lo
    if width <= 0.0:
        return 0.0
    return min(diff / width, 1.0)


def distance(ds: Dataset, a: int, b: int, fmask: FeatureMask, spec: DistanceSpec) -> float:
    """Distance between two rows over the selected features."""
    if fmask.selected_count < 1:
        raise ValueError("feature mask selects no columns")
    total = 0.0
    for col in fmask.indices():
        d = _feature_diff_scalar(ds, spec, int(col), a, b)
        total += d * d
    return math.sqrt(total)


def pairwise_matrix(
    ds: Dataset, imask: InstanceMask, fmask: FeatureMask, spec: DistanceSpec
) -> np.ndarray:
    """Symmetric distance matrix over the alive rows, in ascending row order.

    Rebuilt from scratch whenever the feature mask changes: removing a
    feature invalidates every pairwise distance, unlike removing a row.
    """
    if fmask.selected_count < 1:
        raise ValueError("feature mask selects no columns")
    rows = imask.indices()
    m = len(rows)
    acc = np.zeros((m, m), dtype=np.float64)
    for col in fmask.indices():
        vals = ds.columns[int(col)][rows]
        d = spec.feature_diff_column(ds, int(col), vals[:, None], vals[None, :])
        acc += d * d
    return np.sqrt(acc)


def query_distances(
    ds: Dataset,
    rows: np.ndarray,
    fmask: FeatureMask,
    spec: DistanceSpec,
    query: int | Sequence,
) -> np.ndarray:
    """Distances from one query to each of the given rows.

    The query is either a row index or a raw value vector of length p
    (floats for numeric columns, category strings for categorical ones;
    unseen categories simply match nothing).
    """
    if fmask.selected_count < 1:
        raise ValueError("feature mask selects no columns")
    acc = np.zeros(len(rows), dtype=np.float64)
    for col in fmask.indices():
        col = int(col)
        vals = ds.columns[col][rows]
        if isinstance(query, (int, np.integer)):
            q = ds.columns[col][int(query)]
        else:
            meta = ds.feature_meta[col]
            raw = query[col]
            if meta.kind is FeatureKind.NUMERIC:
                q = float(raw)
            else:
                q = meta.categories.index(raw) if raw in meta.categories else -1
        d = spec.feature_diff_column(ds, col, np.asarray(q), vals)
        acc += d * d
    return np.sqrt(acc)
