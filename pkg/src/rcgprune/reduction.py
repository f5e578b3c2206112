"""Selection algorithms: certainty-gain driven feature selection (fsrcg),
prototype selection (psrcg), the joint backward procedure (fsps), and the
classic condensing baselines (cnn, rnn).

All algorithms consume an immutable dataset plus masks and produce new
masks together with an auditable step-by-step trace.  Determinism is
guaranteed by fixed tie-break rules: candidate features break RCG ties
toward the lower column index, deletion candidates break local-uncertainty
ties toward fewer neighbors and then the lower row index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import (
    Dataset,
    DegenerateClassDistribution,
    FeatureMask,
    InstanceMask,
)
from .knn_graph import NeighborhoodGraph, build_graph
from .metric import DistanceSpec, pairwise_matrix
from .uncertainty import (
    SignificanceSpec,
    UncertaintyState,
    compute_state,
    significantly_greater,
    update_state_after_removal,
)

ADD_FEATURE = "add_feature"
REMOVE_FEATURE = "remove_feature"
REMOVE_INSTANCE = "remove_instance"
BULK_REMOVE_ZERO_ULOC = "bulk_remove_zero_uloc"
ROLLBACK = "rollback"


@dataclass(frozen=True)
class TraceStep:
    """One audited action.  target holds original dataset coordinates
    (column ids for feature actions, row ids otherwise); counts are the
    mask-level totals after the step.  Bulk sweeps do not re-evaluate the
    criterion, so their rcg_after repeats rcg_before."""

    action: str
    target: tuple[int, ...]
    rcg_before: float
    rcg_after: float
    alive_count: int
    selected_count: int


@dataclass
class ReductionTrace:
    algorithm: str
    steps: list[TraceStep] = field(default_factory=list)
    halt_reason: str = ""
    graph_builds: int = 0

    def record(
        self,
        action: str,
        target,
        rcg_before: float,
        rcg_after: float,
        alive_count: int,
        selected_count: int,
    ) -> None:
        targets = (int(target),) if np.isscalar(target) else tuple(int(t) for t in target)
        self.steps.append(
            TraceStep(action, targets, float(rcg_before), float(rcg_after), alive_count, selected_count)
        )

    def removed_rows(self) -> set[int]:
        rows: set[int] = set()
        for s in self.steps:
            if s.action in (REMOVE_INSTANCE, BULK_REMOVE_ZERO_ULOC):
                rows.update(s.target)
            elif s.action == ROLLBACK:
                rows.difference_update(s.target)
        return rows


@dataclass(frozen=True)
class AlgorithmConfig:
    """Shared knobs for all certainty-gain algorithms.

    min_alive defaults to max(c, k + 2) at run time; the literal-min flag
    reproduces the published joint pseudocode's candidate rule, which picks
    the feature whose removal *minimizes* the gain (kept for archaeology,
    off by default because it contradicts the acceptance test it feeds).
    """

    k: int = 5
    significance: SignificanceSpec = field(default_factory=SignificanceSpec)
    rollback_last_deletion: bool = True
    min_alive: int | None = None
    stage_a_literal_min: bool = False
    final_centers_pass: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.min_alive is not None and self.min_alive < 2:
            raise ValueError("min_alive must be at least 2")

    def resolved_min_alive(self, class_count: int) -> int:
        if self.min_alive is not None:
            return self.min_alive
        return max(class_count, self.k + 2)


def replay_trace(
    trace: ReductionTrace, initial_fmask: FeatureMask, initial_imask: InstanceMask
) -> tuple[FeatureMask, InstanceMask]:
    """Re-apply a trace's actions to the starting masks; reproduces the
    algorithm's final masks exactly."""
    selected = initial_fmask.selected.copy()
    alive = initial_imask.alive.copy()
    for s in trace.steps:
        if s.action == ADD_FEATURE:
            selected[list(s.target)] = True
        elif s.action == REMOVE_FEATURE:
            selected[list(s.target)] = False
        elif s.action in (REMOVE_INSTANCE, BULK_REMOVE_ZERO_ULOC):
            alive[list(s.target)] = False
        elif s.action == ROLLBACK:
            alive[list(s.target)] = True
        else:
            raise ValueError(f"unknown trace action {s.action!r}")
    return FeatureMask(selected), InstanceMask(alive)


def _check_two_classes(ds: Dataset, rows: np.ndarray) -> None:
    if len(np.unique(ds.labels[rows])) < 2:
        raise DegenerateClassDistribution(
            "degenerate class distribution: training sample carries a single class"
        )


def _build(
    ds: Dataset,
    rows,
    cols,
    dspec: DistanceSpec,
    k: int,
    trace: ReductionTrace,
) -> NeighborhoodGraph:
    """Distance matrix + graph over the given original rows/columns."""
    imask = InstanceMask.from_indices(ds.n, rows)
    fmask = FeatureMask.from_indices(ds.p, cols)
    matrix = pairwise_matrix(ds, imask, fmask, dspec)
    trace.graph_builds += 1
    return build_graph(matrix, ds.labels[imask.indices()], k, ds.c)


def _argmax_uloc(g: NeighborhoodGraph, state: UncertaintyState) -> int:
    """Deletion candidate: maximal local uncertainty, ties resolved toward
    the smaller neighborhood, then the smaller index."""
    best = -1
    best_u = -1.0
    best_deg = -1
    for i in sorted(state.per_instance):
        u = state.per_instance[i]
        deg = g.degree(i)
        if u > best_u or (u == best_u and deg < best_deg):
            best, best_u, best_deg = i, u, deg
    return best


def _truncated_sweep(candidates: list[int], g: NeighborhoodGraph, alive: int, min_alive: int) -> list[int]:
    """Floor protection for a simultaneous sweep: when the full removal
    would drop below min_alive, the list is cut after ordering by
    descending degree (the most central go first)."""
    budget = alive - min_alive
    if budget <= 0:
        return []
    return sorted(candidates, key=lambda i: (-g.degree(i), i))[:budget]


def _zero_uloc_sweep(g: NeighborhoodGraph, alive_rows: list[int], min_alive: int) -> list[int]:
    """Graph positions for the (k+1) post-process: every node with zero
    local uncertainty, cluster centers and mislabeled instances alike."""
    zeros = [i for i in g.active_ids() if g.tally_pure(i)]
    return _truncated_sweep(zeros, g, len(alive_rows), min_alive)


def _mislabeled_sweep(g: NeighborhoodGraph, alive_rows: list[int], min_alive: int) -> list[int]:
    """Graph positions for the interleaved sweep: nodes whose neighborhood
    unanimously contradicts their own label.  Their status will not improve
    as the feature space keeps shrinking; centers, by contrast, are left to
    the dedicated post-process."""
    flips = [i for i in g.active_ids() if g.is_mislabeled(i)]
    return _truncated_sweep(flips, g, len(alive_rows), min_alive)


def _uncertainty_prune(
    g: NeighborhoodGraph,
    state: UncertaintyState,
    cfg: AlgorithmConfig,
    min_alive: int,
    trace: ReductionTrace,
    rows: np.ndarray,
    selected_count: int,
) -> tuple[list[int], UncertaintyState]:
    """The max-uncertainty deletion loop shared by psrcg's first phase and
    the final stage of the joint algorithm.

    Deletion at step t stands only when the new gain is significantly above
    both the previous gain and zero; the deletion that fails the test is
    undone when the config says so.  Returns surviving original rows and
    the last committed state.
    """
    committed: set[int] = set()
    alive_now = len(rows)
    while True:
        if g.active_count <= min_alive:
            trace.halt_reason = "instance floor reached"
            break
        victim = _argmax_uloc(g, state)
        left = g.label_counts.copy()
        left[g.labels[victim]] -= 1
        if int(np.count_nonzero(left)) < 2:
            trace.halt_reason = "deletion would leave a single class"
            break
        affected = g.affected_set(victim)
        g.remove_instance(victim)
        new_state = update_state_after_removal(state, g, affected)
        nv, ov = new_state.value(), state.value()
        if significantly_greater(nv, ov, cfg.significance) and significantly_greater(
            nv, None, cfg.significance
        ):
            committed.add(victim)
            alive_now -= 1
            trace.record(
                REMOVE_INSTANCE, rows[victim], state.rcg, new_state.rcg, alive_now, selected_count
            )
            state = new_state
            continue
        if cfg.rollback_last_deletion:
            trace.record(
                REMOVE_INSTANCE, rows[victim], state.rcg, new_state.rcg, alive_now - 1, selected_count
            )
            trace.record(
                ROLLBACK, rows[victim], new_state.rcg, state.rcg, alive_now, selected_count
            )
        else:
            committed.add(victim)
            alive_now -= 1
            trace.record(
                REMOVE_INSTANCE, rows[victim], state.rcg, new_state.rcg, alive_now, selected_count
            )
            state = new_state
        trace.halt_reason = "no significant certainty gain from further deletion"
        break
    survivors = [int(rows[i]) for i in range(len(rows)) if i not in committed]
    return survivors, state


def fsrcg(
    ds: Dataset,
    train_mask: InstanceMask,
    cfg: AlgorithmConfig | None = None,
    dspec: DistanceSpec | None = None,
) -> tuple[FeatureMask, ReductionTrace]:
    """Forward feature selection by certainty gain.

    Starting from the empty subset, each round evaluates the gain of every
    unselected feature joined to the current subset, takes the maximizer,
    and commits it only when it beats the current gain significantly (the
    first round is tested against zero).  When not even one single feature
    is significant, the best single feature is returned anyway so a
    downstream classifier has something to stand on.
    """
    cfg = cfg or AlgorithmConfig()
    dspec = dspec or DistanceSpec.for_training(ds, train_mask)
    rows = train_mask.indices()
    if len(rows) < 2:
        raise ValueError("need at least 2 training instances")
    _check_two_classes(ds, rows)

    trace = ReductionTrace("fsrcg")
    selected: list[int] = []
    remaining = list(range(ds.p))
    current: UncertaintyState | None = None
    while remaining:
        best_state: UncertaintyState | None = None
        best_col = -1
        for col in remaining:
            st = compute_state(_build(ds, rows, selected + [col], dspec, cfg.k, trace))
            if best_state is None or st.rcg > best_state.rcg:
                best_state, best_col = st, col
        if current is None:
            ok = significantly_greater(best_state.value(), None, cfg.significance)
        else:
            ok = significantly_greater(best_state.value(), current.value(), cfg.significance)
        if ok or current is None:
            selected.append(best_col)
            remaining.remove(best_col)
            trace.record(
                ADD_FEATURE,
                best_col,
                current.rcg if current is not None else 0.0,
                best_state.rcg,
                len(rows),
                len(selected),
            )
            current = best_state
            if not ok:
                trace.halt_reason = "no significant single feature"
                break
        else:
            trace.halt_reason = "no remaining feature adds a significant gain"
            break
    if not trace.halt_reason:
        trace.halt_reason = "all features selected"
    return FeatureMask.from_indices(ds.p, selected), trace


def psrcg(
    ds: Dataset,
    train_mask: InstanceMask,
    fmask: FeatureMask | None = None,
    cfg: AlgorithmConfig | None = None,
    dspec: DistanceSpec | None = None,
) -> tuple[InstanceMask, ReductionTrace]:
    """Prototype selection by certainty gain.

    Phase 1 repeatedly deletes the instance with maximal local uncertainty
    under local graph updates, as long as the gain keeps improving
    significantly.  Phase 2 rebuilds the graph with neighborhood size k + 1
    and removes, in one simultaneous sweep, every instance whose local
    uncertainty is zero there (cluster centers and mislabeled points).
    """
    cfg = cfg or AlgorithmConfig()
    fmask = fmask if fmask is not None else FeatureMask.full(ds.p)
    dspec = dspec or DistanceSpec.for_training(ds, train_mask)
    rows = train_mask.indices()
    min_alive = cfg.resolved_min_alive(ds.c)
    if len(rows) < min_alive:
        raise ValueError(f"training sample of {len(rows)} is below the instance floor {min_alive}")
    _check_two_classes(ds, rows)

    trace = ReductionTrace("psrcg")
    cols = [int(j) for j in fmask.indices()]
    g = _build(ds, rows, cols, dspec, cfg.k, trace)
    state = compute_state(g)
    survivors, state = _uncertainty_prune(
        g, state, cfg, min_alive, trace, rows, fmask.selected_count
    )

    if len(survivors) >= 2:
        g2 = _build(ds, survivors, cols, dspec, cfg.k + 1, trace)
        state2 = compute_state(g2)
        victims = _zero_uloc_sweep(g2, survivors, min_alive)
        if victims:
            removed = [survivors[i] for i in victims]
            keep = set(victims)
            survivors = [r for i, r in enumerate(survivors) if i not in keep]
            trace.record(
                BULK_REMOVE_ZERO_ULOC,
                removed,
                state2.rcg,
                state2.rcg,
                len(survivors),
                fmask.selected_count,
            )
    return InstanceMask.from_indices(ds.n, survivors), trace


def fsps_rcg(
    ds: Dataset,
    train_mask: InstanceMask,
    cfg: AlgorithmConfig | None = None,
    dspec: DistanceSpec | None = None,
) -> tuple[FeatureMask, InstanceMask, ReductionTrace]:
    """Joint backward feature and prototype reduction.

    Stage A starts from the full feature set; each round evaluates the gain
    with every single remaining feature dropped, and commits the best drop
    when it improves the current gain significantly.  Each committed drop
    is followed by a simultaneous sweep of the mislabeled instances in the
    new space (zero local uncertainty with a unanimously different-class
    neighborhood); their status will not improve as the space keeps
    shrinking.  Border instances are left alone until the space is stable:
    stage B runs the max-uncertainty deletion loop in the final space.
    Cluster centers are the business of the dedicated (k + 1) post-process,
    which final_centers_pass optionally appends.

    Following the loop structure literally, the gain that later rounds are
    compared against is the one measured when the feature drop was
    accepted, not re-measured after the instance sweep.
    """
    cfg = cfg or AlgorithmConfig()
    dspec = dspec or DistanceSpec.for_training(ds, train_mask)
    rows = train_mask.indices()
    min_alive = cfg.resolved_min_alive(ds.c)
    if ds.p < 2:
        raise ValueError("joint reduction needs at least 2 features")
    if len(rows) < min_alive:
        raise ValueError(f"training sample of {len(rows)} is below the instance floor {min_alive}")
    _check_two_classes(ds, rows)

    trace = ReductionTrace("fsps")
    selected = list(range(ds.p))
    alive: list[int] = [int(r) for r in rows]
    current = compute_state(_build(ds, alive, selected, dspec, cfg.k, trace))

    halt_a = ""
    while True:
        if len(selected) <= 1:
            halt_a = "feature floor reached"
            break
        best_state: UncertaintyState | None = None
        best_col = -1
        best_graph: NeighborhoodGraph | None = None
        for col in selected:
            reduced = [j for j in selected if j != col]
            g_c = _build(ds, alive, reduced, dspec, cfg.k, trace)
            st = compute_state(g_c)
            if best_state is None:
                better = True
            elif cfg.stage_a_literal_min:
                better = st.rcg < best_state.rcg
            else:
                better = st.rcg > best_state.rcg
            if better:
                best_state, best_col, best_graph = st, col, g_c
        if not significantly_greater(best_state.value(), current.value(), cfg.significance):
            halt_a = "no significant feature removal"
            break
        selected.remove(best_col)
        trace.record(
            REMOVE_FEATURE, best_col, current.rcg, best_state.rcg, len(alive), len(selected)
        )
        current = best_state
        victims = _mislabeled_sweep(best_graph, alive, min_alive)
        if victims:
            removed = [alive[i] for i in victims]
            keep = set(victims)
            alive = [r for i, r in enumerate(alive) if i not in keep]
            trace.record(
                BULK_REMOVE_ZERO_ULOC, removed, current.rcg, current.rcg, len(alive), len(selected)
            )
            if len(np.unique(ds.labels[np.asarray(alive)])) < 2:
                halt_a = "sweep left a single class"
                break

    halt_b = "skipped (degenerate sample)"
    if len(alive) >= max(2, min_alive) and len(np.unique(ds.labels[np.asarray(alive)])) >= 2:
        g_b = _build(ds, alive, selected, dspec, cfg.k, trace)
        state_b = compute_state(g_b)
        alive, state_b = _uncertainty_prune(
            g_b, state_b, cfg, min_alive, trace, np.asarray(alive), len(selected)
        )
        halt_b = trace.halt_reason or "instance floor reached"
        if cfg.final_centers_pass and len(alive) >= 2:
            g2 = _build(ds, alive, selected, dspec, cfg.k + 1, trace)
            state2 = compute_state(g2)
            victims = _zero_uloc_sweep(g2, alive, min_alive)
            if victims:
                removed = [alive[i] for i in victims]
                keep = set(victims)
                alive = [r for i, r in enumerate(alive) if i not in keep]
                trace.record(
                    BULK_REMOVE_ZERO_ULOC, removed, state2.rcg, state2.rcg, len(alive), len(selected)
                )

    trace.halt_reason = f"stage A: {halt_a}; stage B: {halt_b}"
    return (
        FeatureMask.from_indices(ds.p, selected),
        InstanceMask.from_indices(ds.n, alive),
        trace,
    )


def _one_nn_label(matrix: np.ndarray, subset: np.ndarray, labels: np.ndarray, q: int) -> int:
    cand = np.flatnonzero(subset)
    d = matrix[q, cand]
    best = cand[np.lexsort((cand, d))[0]]
    return int(labels[best])


def _consistent(matrix: np.ndarray, subset: np.ndarray, labels: np.ndarray) -> bool:
    if not subset.any():
        return False
    return all(_one_nn_label(matrix, subset, labels, q) == labels[q] for q in range(len(labels)))


def cnn_baseline(
    ds: Dataset,
    train_mask: InstanceMask,
    fmask: FeatureMask | None = None,
    k: int = 1,
    dspec: DistanceSpec | None = None,
) -> InstanceMask:
    """Hart's condensing: grow a subset, seeded with one instance per class,
    by adding every training instance the current subset misclassifies under
    the 1NN rule, until a full pass adds nothing.  The result classifies the
    whole training set correctly.  Scan order is row order, fixed for
    determinism; k is accepted for interface uniformity (the rule is 1NN).
    """
    del k
    fmask = fmask if fmask is not None else FeatureMask.full(ds.p)
    dspec = dspec or DistanceSpec.for_training(ds, train_mask)
    rows = train_mask.indices()
    if len(rows) < 1:
        raise ValueError("empty training sample")
    matrix = pairwise_matrix(ds, train_mask, fmask, dspec)
    labels = ds.labels[rows]

    subset = np.zeros(len(rows), dtype=bool)
    for c in np.unique(labels):
        subset[int(np.flatnonzero(labels == c)[0])] = True
    changed = True
    while changed:
        changed = False
        for q in range(len(rows)):
            if subset[q]:
                continue
            if _one_nn_label(matrix, subset, labels, q) != labels[q]:
                subset[q] = True
                changed = True
    return InstanceMask.from_indices(ds.n, rows[subset])


def rnn_baseline(
    ds: Dataset,
    train_mask: InstanceMask,
    fmask: FeatureMask | None = None,
    k: int = 1,
    dspec: DistanceSpec | None = None,
) -> InstanceMask:
    """Gates' reduction: take the condensed subset and greedily drop each
    member (single pass, row order) whenever the remainder still classifies
    every training instance correctly."""
    fmask = fmask if fmask is not None else FeatureMask.full(ds.p)
    dspec = dspec or DistanceSpec.for_training(ds, train_mask)
    rows = train_mask.indices()
    condensed = cnn_baseline(ds, train_mask, fmask, k, dspec)
    matrix = pairwise_matrix(ds, train_mask, fmask, dspec)
    labels = ds.labels[rows]

    keep_rows = set(condensed.indices())
    subset = np.array([r in keep_rows for r in rows], dtype=bool)
    for s in np.flatnonzero(subset):
        subset[s] = False
        if not _consistent(matrix, subset, labels):
            subset[s] = True
    return InstanceMask.from_indices(ds.n, rows[subset])


ALGORITHMS = ("none", "fsrcg", "psrcg", "fsps", "cnn", "rnn", "fsrcg+psrcg")


def run_reduction(
    name: str,
    ds: Dataset,
    train_mask: InstanceMask,
    cfg: AlgorithmConfig | None = None,
    dspec: DistanceSpec | None = None,
) -> tuple[FeatureMask, InstanceMask, ReductionTrace]:
    """Uniform dispatch: every algorithm, including the identity pipeline
    and the literal fsrcg-then-psrcg composition, as (features, instances,
    trace)."""
    cfg = cfg or AlgorithmConfig()
    dspec = dspec or DistanceSpec.for_training(ds, train_mask)
    name = name.lower()
    if name == "none":
        trace = ReductionTrace("none", halt_reason="no reduction")
        return FeatureMask.full(ds.p), train_mask, trace
    if name == "fsrcg":
        fm, trace = fsrcg(ds, train_mask, cfg, dspec)
        return fm, train_mask, trace
    if name == "psrcg":
        im, trace = psrcg(ds, train_mask, None, cfg, dspec)
        return FeatureMask.full(ds.p), im, trace
    if name == "fsps":
        return fsps_rcg(ds, train_mask, cfg, dspec)
    if name == "cnn":
        im = cnn_baseline(ds, train_mask, None, cfg.k, dspec)
        return FeatureMask.full(ds.p), im, ReductionTrace("cnn", halt_reason="consistent subset reached")
    if name == "rnn":
        im = rnn_baseline(ds, train_mask, None, cfg.k, dspec)
        return FeatureMask.full(ds.p), im, ReductionTrace("rnn", halt_reason="minimal consistent subset reached")
    if name == "fsrcg+psrcg":
        fm, t1 = fsrcg(ds, train_mask, cfg, dspec)
        im, t2 = psrcg(ds, train_mask, fm, cfg, dspec)
        trace = ReductionTrace(
            "fsrcg+psrcg",
            steps=t1.steps + t2.steps,
            halt_reason=f"fsrcg: {t1.halt_reason}; psrcg: {t2.halt_reason}",
            graph_builds=t1.graph_builds + t2.graph_builds,
        )
        return fm, im, trace
    raise ValueError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
