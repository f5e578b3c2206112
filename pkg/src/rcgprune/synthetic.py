"""Synthetic dataset generators for experiments and the acceptance suite.

Gaussian blob families with optional uniform noise columns, an iris-shaped
three-class set (two informative petal-like columns, two overlapping
sepal-like ones), and a mislabeling planter that flips labels of points
spread far enough apart that each sits alone inside its own neighborhood.
"""

from __future__ import annotations

import numpy as np

from .data_model import Dataset, FeatureMask, InstanceMask, substream_seed
from .metric import DistanceSpec, pairwise_matrix


def make_blobs(
    n_per_class,
    centers,
    scale: float = 1.0,
    noise_features: int = 0,
    seed: int = 0,
) -> Dataset:
    """Gaussian clusters, one per row of centers, with optional uniform
    noise columns spanning the same coordinate range as the signal."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2:
        raise ValueError("centers must be a (classes, features) array")
    c, p_inf = centers.shape
    counts = [n_per_class] * c if np.isscalar(n_per_class) else list(n_per_class)
    rng = np.random.default_rng(seed)
    parts = []
    labels = []
    for cls, cnt in enumerate(counts):
        parts.append(rng.normal(loc=centers[cls], scale=scale, size=(cnt, p_inf)))
        labels.extend([cls] * cnt)
    X = np.vstack(parts)
    y = np.asarray(labels, dtype=np.int64)
    if noise_features:
        lo = centers.min() - 2.0 * scale
        hi = centers.max() + 2.0 * scale
        X = np.hstack([X, rng.uniform(lo, hi, size=(len(X), noise_features))])
    perm = rng.permutation(len(X))
    names = [f"x{j}" for j in range(p_inf)] + [f"noise{j}" for j in range(noise_features)]
    return Dataset.from_arrays(
        X[perm], y[perm], feature_names=names, class_names=[f"c{j}" for j in range(c)]
    )


def make_two_blobs(
    n: int = 200,
    separation: float = 8.0,
    scale: float = 1.0,
    noise_features: int = 0,
    seed: int = 0,
) -> Dataset:
    """Two equal Gaussian blobs in two informative dimensions; with the
    default separation they are linearly separable for all practical seeds.
    """
    half = separation / 2.0
    centers = [[-half, -half], [half, half]]
    return make_blobs([n // 2, n - n // 2], centers, scale, noise_features, seed)


def make_three_blobs(
    n: int = 240,
    separation: float = 4.0,
    scale: float = 1.0,
    noise_features: int = 0,
    seed: int = 0,
) -> Dataset:
    centers = [[0.0, 0.0], [separation, 0.0], [separation / 2.0, separation]]
    base = n // 3
    return make_blobs([base, base, n - 2 * base], centers, scale, noise_features, seed)


# Shaped after the classic three-species flower table: the two petal-like
# columns carry the signal, with neighboring classes in light contact; the
# two sepal-like columns overlap heavily and mostly add noise.
_SEPAL_MEANS = np.array([[5.01, 3.42], [5.94, 2.77], [6.59, 2.97]])
_SEPAL_SDS = np.array([[0.35, 0.38], [0.52, 0.31], [0.64, 0.32]]) * 2.2
_PETAL_LENGTH_MEANS = np.array([2.9, 4.15, 5.4])
_PETAL_WIDTH_MEANS = np.array([0.6, 1.29, 1.98])
_PETAL_SDS = (0.45, 0.20)


def make_iris_like(seed: int = 0, n_per_class: int = 50) -> Dataset:
    rng = np.random.default_rng(seed)
    parts = []
    labels = []
    for cls in range(3):
        sepal = rng.normal(_SEPAL_MEANS[cls], _SEPAL_SDS[cls], size=(n_per_class, 2))
        length = rng.normal(_PETAL_LENGTH_MEANS[cls], _PETAL_SDS[0], size=(n_per_class, 1))
        width = rng.normal(_PETAL_WIDTH_MEANS[cls], _PETAL_SDS[1], size=(n_per_class, 1))
        parts.append(np.hstack([sepal, length, width]))
        labels.extend([cls] * n_per_class)
    X = np.vstack(parts)
    y = np.asarray(labels, dtype=np.int64)
    perm = rng.permutation(len(X))
    return Dataset.from_arrays(
        X[perm],
        y[perm],
        feature_names=["sepal_length", "sepal_width", "petal_length", "petal_width"],
        class_names=["setosa_like", "versicolor_like", "virginica_like"],
    )


def plant_mislabeled(
    ds: Dataset,
    count: int,
    seed: int = 0,
    spaces=None,
    plant_k: int = 7,
) -> tuple[Dataset, list[int]]:
    """Flip the labels of `count` rows sitting deep inside pure regions.

    In every given feature space (default: the full one), candidates must
    have a unanimously same-class neighborhood in a plant_k graph (so after
    the flip every neighbor contradicts them) and must lie several graph
    hops away from each other (so no planted point ends up inside
    another's neighborhood even after the surroundings thin out).  The hop
    constraint relaxes only when placement would otherwise fail.
    """
    from collections import deque

    from .knn_graph import build_graph

    if spaces is None:
        spaces = [FeatureMask.full(ds.p)]
    elif isinstance(spaces, FeatureMask):
        spaces = [spaces]
    dspec = DistanceSpec.for_training(ds)
    graphs = []
    for fm in spaces:
        matrix = pairwise_matrix(ds, InstanceMask.full(ds.n), fm, dspec)
        graphs.append(build_graph(matrix, ds.labels, plant_k, ds.c))

    def hops_within(g, start: int, limit: int) -> set[int]:
        seen = {start}
        frontier = deque([(start, 0)])
        while frontier:
            node, d = frontier.popleft()
            if d == limit:
                continue
            for nxt in g.adjacency[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append((nxt, d + 1))
        return seen

    rng = np.random.default_rng(seed)
    order = [int(r) for r in rng.permutation(ds.n)]
    chosen: list[int] = []
    for min_hops in (4, 3, 2, 1):
        chosen = []
        excluded: set[int] = set()
        for r in order:
            if r in excluded or not all(g.is_center(r) for g in graphs):
                continue
            chosen.append(r)
            if len(chosen) == count:
                break
            for g in graphs:
                excluded |= hops_within(g, r, min_hops)
        if len(chosen) == count:
            break
    if len(chosen) < count:
        raise ValueError(f"cannot place {count} separated interior points in {ds.n} rows")

    labels = ds.labels.copy()
    for r in sorted(chosen):
        shift = int(rng.integers(0, ds.c - 1))
        old = int(labels[r])
        labels[r] = shift + 1 if shift >= old else shift
    return ds.with_labels(labels), sorted(chosen)


def synthetic_suite(seed: int = 0, flip_fraction: float = 0.12) -> dict[str, Dataset]:
    """The fixed benchmark family used by the experiment scripts and the
    acceptance checks: every member carries droppable noise columns, class
    contact, and a pinch of baked-in label noise, the texture pruning
    decisions are non-trivial on."""
    from .data_model import NoiseSpec, inject_label_noise

    raw = {
        "blobs2n4": make_two_blobs(
            n=200, separation=4.0, noise_features=4, seed=substream_seed(seed, "blobs2n4")
        ),
        "blobs3n3": make_three_blobs(
            n=240, separation=4.5, noise_features=3, seed=substream_seed(seed, "blobs3n3")
        ),
        "iris_like": make_iris_like(seed=substream_seed(seed, "iris_like")),
    }
    if flip_fraction <= 0.0:
        return raw
    return {
        name: inject_label_noise(ds, NoiseSpec(flip_fraction, substream_seed(seed, f"flip/{name}")))
        for name, ds in raw.items()
    }
