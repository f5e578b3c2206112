"""kNN classification over reduced views, cross-validated experiments, and
side-by-side comparison of reduction algorithms.

Reduction always happens per fold, on training rows only; when label noise
is requested it is injected after splitting and only into the training
fold, so test labels and test feature rows never leak into the reduction.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats

from .data_model import (
    Dataset,
    FeatureMask,
    HoldoutScheme,
    InstanceMask,
    KFoldScheme,
    NoiseSpec,
    inject_label_noise,
    split,
    substream_seed,
)
from .metric import DistanceSpec, query_distances
from .reduction import AlgorithmConfig, run_reduction


def knn_classify(
    ds: Dataset,
    prototypes: InstanceMask,
    fmask: FeatureMask,
    query,
    k: int,
    dspec: DistanceSpec | None = None,
) -> int:
    """Majority vote among the k nearest prototypes.

    Neighbor order is (distance, row index); a vote tie goes to the class
    of the nearest prototype belonging to any tied class.  The query is a
    row index or a raw value vector; a query row that is itself a prototype
    simply matches itself at distance zero.
    """
    rows = prototypes.indices()
    if len(rows) == 0:
        raise ValueError("empty prototype set")
    dspec = dspec or DistanceSpec.for_training(ds, prototypes)
    d = query_distances(ds, rows, fmask, dspec, query)
    order = np.lexsort((rows, d))[: min(k, len(rows))]
    neigh_labels = ds.labels[rows[order]]
    counts = np.bincount(neigh_labels, minlength=ds.c)
    top = counts.max()
    for lab in neigh_labels:
        if counts[lab] == top:
            return int(lab)
    raise AssertionError("unreachable: some neighbor must carry a winning class")


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    accuracy: float
    retained_instances_pct: float
    retained_features_pct: float
    size_times_dim_pct: float
    graph_builds: int
    halt_reason: str


@dataclass(frozen=True)
class EvalResult:
    """Aggregate of one algorithm over one split plan.

    The summary size_times_dim_pct is the product identity over the mean
    retained percentages, so the joint storage metric stays consistent
    with the two axes it multiplies.
    """

    algorithm: str
    accuracy: float
    retained_instances_pct: float
    retained_features_pct: float
    size_times_dim_pct: float
    per_fold: tuple[FoldResult, ...]
    runtime_ms: float
    graph_builds: int
    split_digest: str


def _digest_split(pairs) -> str:
    h = hashlib.sha256()
    for train, test in pairs:
        h.update(train.alive.tobytes())
        h.update(test.alive.tobytes())
    return h.hexdigest()


def run_experiment(
    ds: Dataset,
    algorithm: str,
    scheme: KFoldScheme | HoldoutScheme,
    cfg: AlgorithmConfig | None = None,
    noise: NoiseSpec | None = None,
    normalize: bool = True,
) -> EvalResult:
    """Reduce per fold, classify the untouched test fold, aggregate.

    Accuracy is always scored against the original labels; the reduction
    and the prototype labels see the (optionally noised) training fold.
    """
    cfg = cfg or AlgorithmConfig()
    started = time.perf_counter()
    pairs = split(ds, scheme)
    folds: list[FoldResult] = []
    for fold_i, (train, test) in enumerate(pairs):
        if noise is not None and noise.fraction > 0.0:
            fold_noise = NoiseSpec(noise.fraction, substream_seed(noise.seed, f"noise/fold{fold_i}"))
            ds_fold = inject_label_noise(ds, fold_noise, rows=train.indices())
        else:
            ds_fold = ds
        dspec = DistanceSpec.for_training(ds_fold, train, normalize=normalize)
        fmask, imask, trace = run_reduction(algorithm, ds_fold, train, cfg, dspec)
        correct = 0
        for q in test.indices():
            if knn_classify(ds_fold, imask, fmask, int(q), cfg.k, dspec) == int(ds.labels[q]):
                correct += 1
        ri = 100.0 * imask.alive_count / train.alive_count
        rf = 100.0 * fmask.selected_count / ds.p
        folds.append(
            FoldResult(
                fold=fold_i,
                n_train=train.alive_count,
                n_test=test.alive_count,
                accuracy=100.0 * correct / test.alive_count,
                retained_instances_pct=ri,
                retained_features_pct=rf,
                size_times_dim_pct=ri * rf / 100.0,
                graph_builds=trace.graph_builds,
                halt_reason=trace.halt_reason,
            )
        )
    mean_ri = float(np.mean([f.retained_instances_pct for f in folds]))
    mean_rf = float(np.mean([f.retained_features_pct for f in folds]))
    return EvalResult(
        algorithm=algorithm,
        accuracy=float(np.mean([f.accuracy for f in folds])),
        retained_instances_pct=mean_ri,
        retained_features_pct=mean_rf,
        size_times_dim_pct=mean_ri * mean_rf / 100.0,
        per_fold=tuple(folds),
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        graph_builds=sum(f.graph_builds for f in folds),
        split_digest=_digest_split(pairs),
    )


def paired_t(xs, ys) -> tuple[float, float, float] | None:
    """Student paired t over two matched samples.

    Returns (t, two-sided p, one-sided p for mean(x) > mean(y)), or None
    when fewer than two pairs exist.  A zero-variance, zero-mean difference
    is reported as t = 0 with two-sided p = 1.
    """
    d = np.asarray(xs, dtype=np.float64) - np.asarray(ys, dtype=np.float64)
    n = len(d)
    if n < 2:
        return None
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return (0.0, 1.0, 0.5)
        t = math.inf if mean > 0 else -math.inf
        return (t, 0.0, 0.0 if mean > 0 else 1.0)
    t = mean / (sd / math.sqrt(n))
    p_two = 2.0 * float(stats.t.sf(abs(t), n - 1))
    p_one = float(stats.t.sf(t, n - 1))
    return (t, p_two, p_one)


@dataclass(frozen=True)
class ComparisonRow:
    algorithm: str
    retained_instances_pct: float
    retained_features_pct: float
    size_times_dim_pct: float
    accuracy: float


@dataclass(frozen=True)
class PairedTest:
    algo_a: str
    algo_b: str
    t: float
    p_two_sided: float
    p_one_sided: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    t_tests: tuple[PairedTest, ...]


def compare_table(results: dict[str, EvalResult]) -> ComparisonTable:
    """Rank algorithms by joint storage and attach pairwise paired-t tests
    over per-fold accuracies.  All results must come from identical splits.
    """
    if not results:
        raise ValueError("no results to compare")
    digests = {r.split_digest for r in results.values()}
    if len(digests) != 1:
        raise ValueError("results were computed over different splits")
    rows = tuple(
        ComparisonRow(
            algorithm=name,
            retained_instances_pct=r.retained_instances_pct,
            retained_features_pct=r.retained_features_pct,
            size_times_dim_pct=r.size_times_dim_pct,
            accuracy=r.accuracy,
        )
        for name, r in sorted(
            results.items(), key=lambda kv: (kv[1].size_times_dim_pct, kv[0])
        )
    )
    tests = []
    for a, b in combinations(results.keys(), 2):
        got = paired_t(
            [f.accuracy for f in results[a].per_fold],
            [f.accuracy for f in results[b].per_fold],
        )
        if got is not None:
            tests.append(PairedTest(a, b, *got))
    return ComparisonTable(rows=rows, t_tests=tuple(tests))


def format_comparison(table: ComparisonTable) -> str:
    """Aligned-column rendering of a comparison table for standard output."""
    lines = [f"{'algorithm':<14} {'Size%':>8} {'Dim%':>8} {'SizexDim%':>10} {'Accuracy':>9}"]
    for r in table.rows:
        lines.append(
            f"{r.algorithm:<14} {r.retained_instances_pct:>8.1f} {r.retained_features_pct:>8.1f}"
            f" {r.size_times_dim_pct:>10.1f} {r.accuracy:>9.1f}"
        )
    if table.t_tests:
        lines.append("")
        lines.append(f"{'paired t (accuracy)':<30} {'t':>9} {'p(2-sided)':>11} {'p(1-sided)':>11}")
        for t in table.t_tests:
            lines.append(
                f"{t.algo_a + ' vs ' + t.algo_b:<30} {t.t:>9.3f} {t.p_two_sided:>11.4f} {t.p_one_sided:>11.4f}"
            )
    return "\n".join(lines)
