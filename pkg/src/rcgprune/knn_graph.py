"""Symmetrized kNN graph with local-only updates on instance deletion.

Nodes are row positions of the distance matrix the graph was built on.
Each node points at its k nearest active peers; the undirected edge set is
the union of those choices, so a node is linked both to the neighbors it
picked and to the nodes that picked it (its associates).  Deleting a node
touches only its graph neighborhood: everyone who had the victim in their
out-list gets the next nearest survivor, everyone else keeps their lists
bit for bit.  Feature-space changes, by contrast, invalidate every distance
and require a fresh build.

Ties in distance break toward the lower row index, giving every downstream
algorithm a deterministic total order.
"""

from __future__ import annotations

from typing import IO, Iterable

import numpy as np


class NeighborhoodGraph:
    """Union-symmetrized kNN graph with per-node class tallies.

    Invariants maintained across deletions:
      * out_neighbors[i] is the k nearest active peers of i, ordered by
        (distance, index), truncated to active_count - 1;
      * adjacency[i] = {j : j in out(i) or i in out(j)};
      * sum of degrees equals 2 * edge_count;
      * class_tallies[i] counts the labels within adjacency[i].
    """

    def __init__(self, matrix: np.ndarray, labels: np.ndarray, k: int, class_count: int):
        if k < 1:
            raise ValueError("k must be at least 1")
        m = matrix.shape[0]
        if m < 2:
            raise ValueError("need at least 2 alive instances to build a graph")
        if matrix.shape != (m, m) or len(labels) != m:
            raise ValueError("matrix and labels disagree on instance count")
        self.matrix = matrix
        self.labels = np.asarray(labels, dtype=np.int64)
        self.k = int(k)
        self.class_count = int(class_count)
        self._alive = np.ones(m, dtype=bool)
        self.out_neighbors: dict[int, list[int]] = {}
        self.adjacency: dict[int, set[int]] = {i: set() for i in range(m)}
        self.edge_count = 0
        for i in range(m):
            self.out_neighbors[i] = self._k_nearest(i)
        for i in range(m):
            for j in self.out_neighbors[i]:
                self.adjacency[i].add(j)
                self.adjacency[j].add(i)
        self.class_tallies: dict[int, np.ndarray] = {
            i: np.bincount(self.labels[sorted(self.adjacency[i])], minlength=class_count)
            for i in range(m)
        }
        self.edge_count = sum(len(s) for s in self.adjacency.values()) // 2
        self.label_counts = np.bincount(self.labels, minlength=class_count)

    # -- queries ---------------------------------------------------------

    @property
    def active_count(self) -> int:
        return int(self._alive.sum())

    def active_ids(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self._alive)]

    def is_active(self, i: int) -> bool:
        return bool(self._alive[i])

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def degree_sum(self) -> int:
        return 2 * self.edge_count

    def tally_pure(self, i: int) -> bool:
        """True when every neighbor of i carries one and the same class,
        i.e. the node's local uncertainty is exactly zero."""
        t = self.class_tallies[i]
        return int(t.max()) == int(t.sum())

    def unanimous_class(self, i: int) -> int | None:
        """The single class filling i's neighborhood, or None if mixed."""
        t = self.class_tallies[i]
        top = int(t.argmax())
        return top if int(t[top]) == int(t.sum()) else None

    def is_mislabeled(self, i: int) -> bool:
        """Unanimity test: every neighbor (associates included) disagrees
        with i's own label."""
        u = self.unanimous_class(i)
        return u is not None and u != int(self.labels[i])

    def is_center(self, i: int) -> bool:
        """Every neighbor (associates included) shares i's label."""
        u = self.unanimous_class(i)
        return u is not None and u == int(self.labels[i])

    def _k_nearest(self, i: int, extra_dead: int | None = None) -> list[int]:
        others = np.flatnonzero(self._alive)
        others = others[others != i]
        if extra_dead is not None:
            others = others[others != extra_dead]
        if len(others) == 0:
            return []
        d = self.matrix[i, others]
        order = np.lexsort((others, d))
        take = others[order[: min(self.k, len(others))]]
        return [int(x) for x in take]

    # -- mutation --------------------------------------------------------

    def affected_set(self, victim: int) -> set[int]:
        """Everything whose local uncertainty can change when victim goes:
        the victim's neighborhood plus the predicted replacement neighbors
        (new associates) of nodes that lose the victim from their out-list.
        """
        if not self._alive[victim]:
            raise ValueError(f"instance {victim} is not alive")
        affected = set(self.adjacency[victim])
        for j in self.adjacency[victim]:
            if victim in self.out_neighbors[j]:
                replacement = self._k_nearest(j, extra_dead=victim)
                for w in replacement:
                    if w not in self.out_neighbors[j]:
                        affected.add(w)
        return affected

    def remove_instance(self, victim: int) -> None:
        """Delete one node, repairing only the structures around it.

        Post: the graph equals a fresh build over the survivors.
        """
        if not self._alive[victim]:
            raise ValueError(f"instance {victim} is not alive")
        if self.active_count - 1 < 2:
            raise ValueError("cannot remove below 2 alive instances")
        neigh = sorted(self.adjacency[victim])
        losers = [j for j in neigh if victim in self.out_neighbors[j]]
        self._alive[victim] = False
        self.label_counts[self.labels[victim]] -= 1
        for j in neigh:
            self.adjacency[j].discard(victim)
            self.class_tallies[j][self.labels[victim]] -= 1
        self.edge_count -= len(neigh)
        for j in losers:
            old = self.out_neighbors[j]
            new = self._k_nearest(j)
            self.out_neighbors[j] = new
            for w in new:
                if w not in old and w not in self.adjacency[j]:
                    self.adjacency[j].add(w)
                    self.adjacency[w].add(j)
                    self.class_tallies[j][self.labels[w]] += 1
                    self.class_tallies[w][self.labels[j]] += 1
                    self.edge_count += 1
        del self.out_neighbors[victim]
        del self.adjacency[victim]
        del self.class_tallies[victim]

    # -- io ----------------------------------------------------------------

    def write_edge_list(self, fh: IO[str]) -> None:
        """Debug dump: one `i j distance` line per undirected edge."""
        seen = set()
        for i in self.active_ids():
            for j in sorted(self.adjacency[i]):
                e = (min(i, j), max(i, j))
                if e not in seen:
                    seen.add(e)
                    fh.write(f"{e[0]} {e[1]} {float(self.matrix[e[0], e[1]])!r}\n")


def build_graph(
    matrix: np.ndarray, labels: np.ndarray, k: int, class_count: int | None = None
) -> NeighborhoodGraph:
    """Build the symmetrized kNN graph over all rows of a distance matrix."""
    labels = np.asarray(labels, dtype=np.int64)
    if class_count is None:
        class_count = int(labels.max()) + 1 if len(labels) else 0
    return NeighborhoodGraph(matrix, labels, k, class_count)


def restrict_matrix(matrix: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Slice a pairwise matrix down to a subset of its rows/columns."""
    idx = np.asarray(sorted(keep), dtype=np.int64)
    return matrix[np.ix_(idx, idx)]
