import math

import numpy as np
import pytest

from rcgprune.data_model import Dataset, FeatureKind


def random_numeric_dataset(rng: np.random.Generator, n: int, p: int, c: int) -> Dataset:
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3.0, size=p)
    labels = rng.integers(0, c, size=n)
    # guarantee every class appears at least once
    labels[:c] = np.arange(c)
    return Dataset.from_arrays(X, labels, class_names=[f"c{j}" for j in range(c)])


# -- independent brute-force oracles ------------------------------------
# These reimplement the neighborhood and uncertainty definitions with
# plain Python loops, never touching the package's vectorized paths.


def oracle_out_neighbors(matrix, alive, k):
    out = {}
    for i in alive:
        ranked = sorted((float(matrix[i][j]), j) for j in alive if j != i)
        out[i] = [j for _, j in ranked[: min(k, len(alive) - 1)]]
    return out


def oracle_graph(matrix, alive, k):
    out = oracle_out_neighbors(matrix, alive, k)
    adj = {i: set() for i in alive}
    for i in alive:
        for j in out[i]:
            adj[i].add(j)
            adj[j].add(i)
    edges = set()
    for i in alive:
        for j in adj[i]:
            edges.add((min(i, j), max(i, j)))
    return out, adj, edges


def oracle_uncertainty(adj, labels, c):
    """Local and total uncertainty plus RCG, straight from the definitions."""
    alive = sorted(adj)
    degree_sum = sum(len(adj[i]) for i in alive)
    u_loc = {}
    for i in alive:
        counts = [0] * c
        for j in adj[i]:
            counts[labels[j]] += 1
        deg = len(adj[i])
        u_loc[i] = sum((m / deg) * (1 - m / deg) for m in counts)
    u_tot = sum((len(adj[i]) / degree_sum) * u_loc[i] for i in alive)
    counts = [0] * c
    for i in alive:
        counts[labels[i]] += 1
    prior = sum((m / len(alive)) * (1 - m / len(alive)) for m in counts)
    rcg = (prior - u_tot) / prior if prior > 0 else math.nan
    return u_loc, u_tot, prior, rcg


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
