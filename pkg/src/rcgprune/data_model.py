"""Datasets, reduction masks, label-noise injection and train/test splits.

A :class:`Dataset` is an immutable column-major table: numeric columns are
float64 arrays, categorical columns are int64 code arrays backed by a
per-column dictionary.  Reduction state lives in :class:`InstanceMask` /
:class:`FeatureMask` snapshots; algorithms never mutate the dataset itself.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(Exception):
    """Raised for malformed input files or schema violations."""


class DegenerateClassDistribution(Exception):
    """Raised when a sample carries fewer than two classes, making the
    certainty criterion undefined."""


class FeatureKind(Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.setflags(write=False)
    return out


def substream_rng(seed: int, name: str) -> np.random.Generator:
    """Independent, reproducible RNG substream derived from one master seed."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode("utf-8"))])


def substream_seed(seed: int, name: str) -> int:
    """64-bit child seed for components that take a seed rather than an RNG."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1, np.uint64)[0])


def round_half_away(x: float) -> int:
    """round() with ties going away from zero, fixed across platforms."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class ColumnMeta:
    """Per-feature metadata fixed at load time."""

    name: str
    kind: FeatureKind
    lo: float | None = None
    hi: float | None = None
    categories: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled table.

    columns[j] holds float64 values for numeric features and int64
    dictionary codes for categorical ones; labels holds class ids in
    0..c-1 matching class_names.
    """

    columns: tuple[np.ndarray, ...]
    labels: np.ndarray
    feature_meta: tuple[ColumnMeta, ...]
    class_names: tuple[str, ...]
    class_column: str = "class"

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(_frozen(c) for c in self.columns))
        object.__setattr__(self, "labels", _frozen(np.asarray(self.labels, dtype=np.int64)))
        if self.p < 1:
            raise ValueError("dataset needs at least one feature column")
        if self.n < 2:
            raise DataError("empty dataset: need at least 2 rows")
        if self.c < 2:
            raise DegenerateClassDistribution(
                "degenerate class distribution: c >= 2 violated (single class)"
            )
        if len(self.feature_meta) != self.p:
            raise ValueError("feature_meta length does not match column count")
        if self.labels.min() < 0 or self.labels.max() >= self.c:
            raise ValueError("label id out of range")
        for col, meta in zip(self.columns, self.feature_meta):
            if len(col) != self.n:
                raise DataError("ragged columns")
            if meta.kind is FeatureKind.NUMERIC:
                if meta.lo is None or meta.hi is None or meta.lo > meta.hi:
                    raise ValueError(f"column {meta.name!r}: invalid numeric range")
            else:
                if meta.categories is None:
                    raise ValueError(f"column {meta.name!r}: missing category dictionary")
                if len(col) and (col.min() < 0 or col.max() >= len(meta.categories)):
                    raise ValueError(f"column {meta.name!r}: categorical code out of dictionary")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def p(self) -> int:
        return len(self.columns)

    @property
    def c(self) -> int:
        return len(self.class_names)

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        return Dataset(self.columns, labels, self.feature_meta, self.class_names, self.class_column)

    def decode_value(self, row: int, col: int):
        """Original cell value: float for numeric, category string otherwise."""
        meta = self.feature_meta[col]
        if meta.kind is FeatureKind.NUMERIC:
            return float(self.columns[col][row])
        return meta.categories[int(self.columns[col][row])]

    @classmethod
    def from_arrays(
        cls,
        features: np.ndarray,
        labels: Sequence[int],
        feature_names: Sequence[str] | None = None,
        class_names: Sequence[str] | None = None,
        class_column: str = "class",
    ) -> "Dataset":
        """Build an all-numeric dataset from a (n, p) array and integer labels."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be 2-dimensional")
        labels = np.asarray(labels, dtype=np.int64)
        n, p = features.shape
        if feature_names is None:
            feature_names = [f"f{j}" for j in range(p)]
        if class_names is None:
            class_names = [str(j) for j in range(int(labels.max()) + 1 if len(labels) else 0)]
        meta = tuple(
            ColumnMeta(
                name=feature_names[j],
                kind=FeatureKind.NUMERIC,
                lo=float(features[:, j].min()),
                hi=float(features[:, j].max()),
            )
            for j in range(p)
        )
        cols = tuple(features[:, j].copy() for j in range(p))
        return cls(cols, labels, meta, tuple(class_names), class_column)


@dataclass(frozen=True)
class InstanceMask:
    """Boolean row mask; the set of prototypes still alive."""

    alive: np.ndarray
    alive_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alive", _frozen(np.asarray(self.alive, dtype=bool)))
        object.__setattr__(self, "alive_count", int(self.alive.sum()))

    @classmethod
    def full(cls, n: int) -> "InstanceMask":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def from_indices(cls, n: int, rows: Iterable[int]) -> "InstanceMask":
        m = np.zeros(n, dtype=bool)
        m[list(rows)] = True
        return cls(m)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    def without(self, rows: Iterable[int]) -> "InstanceMask":
        m = self.alive.copy()
        m[list(rows)] = False
        return InstanceMask(m)


@dataclass(frozen=True)
class FeatureMask:
    """Boolean column mask; the feature subspace distances are computed in."""

    selected: np.ndarray
    selected_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected", _frozen(np.asarray(self.selected, dtype=bool)))
        object.__setattr__(self, "selected_count", int(self.selected.sum()))

    @classmethod
    def full(cls, p: int) -> "FeatureMask":
        return cls(np.ones(p, dtype=bool))

    @classmethod
    def from_indices(cls, p: int, cols: Iterable[int]) -> "FeatureMask":
        m = np.zeros(p, dtype=bool)
        m[list(cols)] = True
        return cls(m)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.selected)

    def without(self, cols: Iterable[int]) -> "FeatureMask":
        m = self.selected.copy()
        m[list(cols)] = False
        return FeatureMask(m)


@dataclass(frozen=True)
class NoiseSpec:
    """Label-noise request: flip a fraction of rows to a different class."""

    fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"noise fraction must lie in [0, 1], got {self.fraction}")


@dataclass(frozen=True)
class KFoldScheme:
    k_folds: int
    seed: int = 0
    stratified: bool = True


@dataclass(frozen=True)
class HoldoutScheme:
    test_fraction: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")


def _parse_numeric(cells: list[str]) -> np.ndarray | None:
    try:
        return np.array([float(v) for v in cells], dtype=np.float64)
    except ValueError:
        return None


def load_csv(
    path: str | Path,
    class_column: str,
    kind_overrides: dict[str, FeatureKind] | None = None,
) -> Dataset:
    """Load a labeled dataset from an RFC 4180 CSV file with a header row.

    Column kinds are inferred (a column where every cell parses as a number
    becomes numeric, anything else categorical) unless overridden.  Missing
    cells are rejected: there is no imputation story downstream, so failing
    loudly beats inventing one.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    kind_overrides = kind_overrides or {}

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    if class_column not in header:
        raise DataError(f"{path}: class column {class_column!r} not found in header {header}")
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    if len(rows) < 2:
        raise DataError(f"{path}: empty dataset (need at least 2 data rows, got {len(rows)})")
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")

    class_idx = header.index(class_column)
    feature_names = [h for j, h in enumerate(header) if j != class_idx]
    if not feature_names:
        raise DataError(f"{path}: no feature columns besides the class column")

    cells_by_col: dict[str, list[str]] = {h: [] for h in header}
    for i, row in enumerate(rows):
        for h, v in zip(header, row):
            v = v.strip()
            if v == "":
                raise DataError(f"{path}: missing value in column {h!r}, row {i + 2}")
            cells_by_col[h].append(v)

    class_values = cells_by_col[class_column]
    class_names = tuple(sorted(set(class_values)))
    if len(class_names) < 2:
        raise DegenerateClassDistribution(
            f"degenerate class distribution: c >= 2 violated "
            f"(class column {class_column!r} has a single distinct value)"
        )
    class_code = {name: j for j, name in enumerate(class_names)}
    labels = np.array([class_code[v] for v in class_values], dtype=np.int64)

    columns: list[np.ndarray] = []
    meta: list[ColumnMeta] = []
    for name in feature_names:
        cells = cells_by_col[name]
        override = kind_overrides.get(name)
        numeric = _parse_numeric(cells) if override is not FeatureKind.CATEGORICAL else None
        if override is FeatureKind.NUMERIC and numeric is None:
            raise DataError(f"{path}: column {name!r} declared numeric but does not parse")
        if numeric is not None and override is not FeatureKind.CATEGORICAL:
            columns.append(numeric)
            meta.append(
                ColumnMeta(name, FeatureKind.NUMERIC, float(numeric.min()), float(numeric.max()))
            )
        else:
            cats = tuple(sorted(set(cells)))
            code = {v: j for j, v in enumerate(cats)}
            columns.append(np.array([code[v] for v in cells], dtype=np.int64))
            meta.append(ColumnMeta(name, FeatureKind.CATEGORICAL, categories=cats))

    return Dataset(tuple(columns), labels, tuple(meta), class_names, class_column)


def save_csv(
    ds: Dataset,
    path: str | Path,
    imask: InstanceMask | None = None,
    fmask: FeatureMask | None = None,
) -> None:
    """Write the (optionally masked) dataset back out; floats use repr so a
    reload reproduces them exactly."""
    rows = imask.indices() if imask is not None else np.arange(ds.n)
    cols = fmask.indices() if fmask is not None else np.arange(ds.p)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([ds.feature_meta[j].name for j in cols] + [ds.class_column])
        for i in rows:
            record = []
            for j in cols:
                v = ds.decode_value(int(i), int(j))
                record.append(repr(v) if isinstance(v, float) else v)
            record.append(ds.class_names[ds.labels[i]])
            writer.writerow(record)


def inject_label_noise(
    ds: Dataset, spec: NoiseSpec, rows: Iterable[int] | None = None
) -> Dataset:
    """Flip the labels of exactly round(fraction * pool) distinct rows.

    The pool defaults to all rows; the evaluator restricts it to a training
    fold so test labels are never touched.  Each flipped row receives a
    uniformly chosen *different* class.  Deterministic for a fixed seed.
    """
    pool = np.asarray(sorted(rows), dtype=np.int64) if rows is not None else np.arange(ds.n)
    count = round_half_away(spec.fraction * len(pool))
    if count == 0:
        return ds
    rng = np.random.default_rng(spec.seed)
    chosen = np.sort(rng.choice(pool, size=count, replace=False))
    labels = ds.labels.copy()
    for row in chosen:
        shift = int(rng.integers(0, ds.c - 1))
        old = int(labels[row])
        labels[row] = shift + 1 if shift >= old else shift
    return ds.with_labels(labels)


def _round_robin_folds(groups: list[np.ndarray], k: int) -> list[list[int]]:
    folds: list[list[int]] = [[] for _ in range(k)]
    counter = 0
    for g in groups:
        for row in g:
            folds[counter % k].append(int(row))
            counter += 1
    return folds


def split(
    ds: Dataset, scheme: KFoldScheme | HoldoutScheme
) -> list[tuple[InstanceMask, InstanceMask]]:
    """Produce (train, test) mask pairs for cross-validation or a holdout.

    Stratified by class by default (round-robin dealing within shuffled
    class groups); deterministic per seed.
    """
    n = ds.n
    if isinstance(scheme, KFoldScheme):
        if scheme.k_folds < 2:
            raise ValueError("k_folds must be at least 2")
        if scheme.k_folds > n:
            raise ValueError(f"fold count {scheme.k_folds} exceeds dataset size {n}")
        rng = np.random.default_rng(scheme.seed)
        if scheme.stratified:
            groups = [rng.permutation(np.flatnonzero(ds.labels == c)) for c in range(ds.c)]
        else:
            groups = [rng.permutation(n)]
        folds = _round_robin_folds(groups, scheme.k_folds)
        pairs = []
        for f in folds:
            test = InstanceMask.from_indices(n, f)
            train = InstanceMask(~test.alive)
            pairs.append((train, test))
        return pairs

    if isinstance(scheme, HoldoutScheme):
        total = min(max(round_half_away(scheme.test_fraction * n), 1), n - 1)
        rng = np.random.default_rng(scheme.seed)
        if scheme.stratified:
            picked: list[int] = []
            quotas = []
            for c in range(ds.c):
                size = int((ds.labels == c).sum())
                ideal = scheme.test_fraction * size
                quotas.append([math.floor(ideal), ideal - math.floor(ideal), c, size])
            spare = total - sum(q[0] for q in quotas)
            # hand out the remainder by largest fractional part, class id breaking ties
            order = sorted(quotas, key=lambda q: (-q[1], q[2]))
            while spare > 0:
                progressed = False
                for q in order:
                    if spare > 0 and q[0] < q[3]:
                        q[0] += 1
                        spare -= 1
                        progressed = True
                if not progressed:
                    break
            while spare < 0:
                for q in sorted(quotas, key=lambda q: (q[1], -q[2])):
                    if spare < 0 and q[0] > 0:
                        q[0] -= 1
                        spare += 1
            for base, _, c, _ in quotas:
                members = rng.permutation(np.flatnonzero(ds.labels == c))
                picked.extend(int(r) for r in members[:base])
        else:
            picked = [int(r) for r in rng.permutation(n)[:total]]
        test = InstanceMask.from_indices(n, picked)
        train = InstanceMask(~test.alive)
        return [(train, test)]

    raise TypeError(f"unknown split scheme: {scheme!r}")
