"""Quadratic-entropy uncertainty over a neighborhood graph, and the
significance test that gates every accept/halt decision.

Per node, the local uncertainty is the quadratic entropy of the class mix
inside its neighborhood; the total uncertainty averages those values with
weights degree / degree_sum.  The relative certainty gain

    rcg = (prior - total) / prior

measures how much sharper the graph's neighborhoods are than the bare
class distribution: 1 when every neighborhood is pure, negative when the
graph is more confused than the prior (never clamped).

Two realizations of "significantly greater" are provided.  The chi-square
mode scales the gain into the statistic (degree_sum - 1) * (c - 1) * rcg
and compares against the (1 - alpha) quantile at (n - 1) * (c - 1) degrees
of freedom, n being the current alive count.  The epsilon-margin mode is a
deterministic fallback (plain margin on the gain) that keeps algorithm
logic testable apart from the statistical calibration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data_model import DegenerateClassDistribution
from .knn_graph import NeighborhoodGraph

PROB_TOLERANCE = 1e-9


def quadratic_entropy(dist) -> float:
    """Sum of g * (1 - g) over a probability vector; 0 for a pure
    distribution, 1 - 1/c for the uniform one."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 1 or len(dist) == 0:
        raise ValueError("expected a non-empty probability vector")
    if dist.min() < -PROB_TOLERANCE:
        raise ValueError("probabilities must be nonnegative")
    if abs(float(dist.sum()) - 1.0) > PROB_TOLERANCE:
        raise ValueError(f"probability vector sums to {dist.sum()!r}, not 1")
    return float(np.sum(dist * (1.0 - dist)))


def prior_uncertainty(labels, class_count: int) -> float:
    """Quadratic entropy of the empirical class frequencies."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise ValueError("no labels")
    counts = np.bincount(labels, minlength=class_count)
    return quadratic_entropy(counts / len(labels))


def local_uncertainty(tallies: np.ndarray) -> float:
    """Quadratic entropy of one node's neighborhood class counts."""
    deg = int(tallies.sum())
    if deg <= 0:
        raise ValueError("node with empty neighborhood")
    frac = tallies / deg
    return float(np.sum(frac * (1.0 - frac)))


@dataclass(frozen=True)
class RcgValue:
    """A relative certainty gain plus the context the significance test
    needs: alive count, class count, degree sum of the graph it came from."""

    rcg: float
    alive_count: int
    class_count: int
    degree_sum: int


@dataclass(frozen=True)
class UncertaintyState:
    """Snapshot of the uncertainty bookkeeping for one graph state."""

    per_instance: dict[int, float]
    total: float
    prior: float
    rcg: float
    degree_sum: int
    alive_count: int
    class_count: int

    def value(self) -> RcgValue:
        return RcgValue(self.rcg, self.alive_count, self.class_count, self.degree_sum)


def _assemble_state(g: NeighborhoodGraph, per: dict[int, float]) -> UncertaintyState:
    prior = prior_uncertainty(g.labels[np.asarray(g.active_ids())], g.class_count)
    if prior == 0.0:
        raise DegenerateClassDistribution(
            "degenerate class distribution: all alive instances share one class"
        )
    degree_sum = g.degree_sum
    total = 0.0
    for i in sorted(per):
        total += (g.degree(i) / degree_sum) * per[i]
    rcg = (prior - total) / prior
    return UncertaintyState(
        per_instance=per,
        total=total,
        prior=prior,
        rcg=rcg,
        degree_sum=degree_sum,
        alive_count=g.active_count,
        class_count=g.class_count,
    )


def compute_state(g: NeighborhoodGraph) -> UncertaintyState:
    """Evaluate local and total uncertainty from scratch."""
    per = {i: local_uncertainty(g.class_tallies[i]) for i in g.active_ids()}
    return _assemble_state(g, per)


def update_state_after_removal(
    prev: UncertaintyState, g: NeighborhoodGraph, affected: set[int]
) -> UncertaintyState:
    """Refresh the state after one deletion, recomputing local values only
    where the graph changed.  Result is identical to a scratch evaluation.
    """
    per: dict[int, float] = {}
    for i in g.active_ids():
        if i in affected:
            per[i] = local_uncertainty(g.class_tallies[i])
        else:
            per[i] = prev.per_instance[i]
    return _assemble_state(g, per)


def chi_square_quantile(p: float, df: int) -> float:
    """Quantile of the chi-square distribution with df degrees of freedom."""
    if df < 1:
        raise ValueError(f"invalid degrees of freedom: {df}")
    return float(stats.chi2.ppf(p, df))


@dataclass(frozen=True)
class SignificanceSpec:
    """Configuration of the ">>" comparison."""

    mode: str = "chi_square"
    alpha: float = 0.05
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if self.mode not in ("chi_square", "epsilon_margin"):
            raise ValueError(f"unknown significance mode {self.mode!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")

    @classmethod
    def chi_square_mode(cls, alpha: float = 0.05) -> "SignificanceSpec":
        return cls(mode="chi_square", alpha=alpha)

    @classmethod
    def epsilon_margin(cls, epsilon: float = 1e-9) -> "SignificanceSpec":
        return cls(mode="epsilon_margin", epsilon=epsilon)


def _statistic(v: RcgValue) -> float:
    return (v.degree_sum - 1) * (v.class_count - 1) * v.rcg


def significantly_greater(a: RcgValue, b: RcgValue | None, spec: SignificanceSpec) -> bool:
    """The ">>" operator: is gain a significantly above gain b (or above the
    constant zero when b is None)?

    Chi-square mode requires, against zero, the scaled statistic of a to
    exceed the (1 - alpha) quantile; against a real b it additionally
    requires a strict gain improvement and a positive statistic difference.
    Epsilon-margin mode is a plain margin comparison on the gains.
    """
    if spec.mode == "epsilon_margin":
        floor = 0.0 if b is None else b.rcg
        return a.rcg > floor + spec.epsilon

    for v in (a,) if b is None else (a, b):
        if v.alive_count < 2 or v.class_count < 2:
            raise ValueError(
                f"invalid degrees of freedom: alive={v.alive_count}, classes={v.class_count}"
            )
    df = (a.alive_count - 1) * (a.class_count - 1)
    significant = _statistic(a) > chi_square_quantile(1.0 - spec.alpha, df)
    if b is None:
        return significant
    return a.rcg > b.rcg and (_statistic(a) - _statistic(b)) > 0.0 and significant
