import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcgprune.data_model import DegenerateClassDistribution
from rcgprune.knn_graph import build_graph
from rcgprune.uncertainty import (
    RcgValue,
    SignificanceSpec,
    chi_square_quantile,
    compute_state,
    local_uncertainty,
    prior_uncertainty,
    quadratic_entropy,
    significantly_greater,
    update_state_after_removal,
)
from tests.conftest import oracle_graph, oracle_uncertainty


def random_graph(rng, n, c, k):
    pts = rng.normal(size=(n, 2))
    m = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    labels = rng.integers(0, c, size=n)
    labels[:c] = np.arange(c)
    return build_graph(m, labels, k=k, class_count=c), m, labels


class TestQuadraticEntropy:
    def test_pure(self):
        assert quadratic_entropy([1.0, 0.0]) == 0.0

    def test_uniform_two(self):
        assert quadratic_entropy([0.5, 0.5]) == pytest.approx(0.5)

    def test_skewed(self):
        assert quadratic_entropy([0.25, 0.75]) == pytest.approx(0.375)

    def test_rejects_non_normalized(self):
        with pytest.raises(ValueError, match="sums to"):
            quadratic_entropy([0.5, 0.6])

    @given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6))
    @settings(max_examples=50, deadline=None)
    def test_bounds(self, weights):
        total = sum(weights)
        if total == 0:
            return
        dist = [w / total for w in weights]
        q = quadratic_entropy(dist)
        c = len(dist)
        assert -1e-12 <= q <= 1 - 1 / c + 1e-12


class TestPrior:
    def test_six_four(self):
        assert prior_uncertainty([0] * 6 + [1] * 4, 2) == pytest.approx(0.48)

    def test_single_class(self):
        assert prior_uncertainty([1, 1, 1], 2) == 0.0

    def test_uniform_three(self):
        assert prior_uncertainty([0, 1, 2], 3) == pytest.approx(2 / 3)


def test_local_uncertainty_two_one():
    assert local_uncertainty(np.array([2, 1])) == pytest.approx(4 / 9)


class TestComputeState:
    def test_pure_neighborhoods(self, rng):
        pts = np.vstack([rng.normal(size=(10, 2)), rng.normal(size=(10, 2)) + 50.0])
        m = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        labels = np.array([0] * 10 + [1] * 10)
        g = build_graph(m, labels, k=3, class_count=2)
        state = compute_state(g)
        assert state.total == 0.0
        assert state.rcg == 1.0

    def test_matches_independent_oracle(self, rng):
        g, m, labels = random_graph(rng, 20, 3, 4)
        state = compute_state(g)
        _, adj, _ = oracle_graph(m, list(range(20)), 4)
        u_loc, u_tot, prior, rcg = oracle_uncertainty(adj, labels, 3)
        assert state.total == pytest.approx(u_tot, abs=1e-12)
        assert state.prior == pytest.approx(prior, abs=1e-12)
        assert state.rcg == pytest.approx(rcg, abs=1e-12)
        for i, u in state.per_instance.items():
            assert u == pytest.approx(u_loc[i], abs=1e-12)

    def test_degenerate_single_class(self, rng):
        pts = rng.normal(size=(6, 2))
        m = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        g = build_graph(m, np.zeros(6, dtype=int), k=2, class_count=2)
        with pytest.raises(DegenerateClassDistribution):
            compute_state(g)


class TestIncrementalUpdate:
    def test_sequence_matches_scratch(self, rng):
        g, m, labels = random_graph(rng, 30, 3, 3)
        state = compute_state(g)
        removable = [i for i in range(30) if labels[i] == labels.max()][: 0]  # noqa: unused
        victims = [int(v) for v in rng.permutation(30)[:10]]
        for v in victims:
            counts = np.bincount(labels[g.active_ids()], minlength=3)
            counts[labels[v]] -= 1
            if np.count_nonzero(counts) < 2 or g.active_count <= 3:
                break
            affected = g.affected_set(v)
            g.remove_instance(v)
            state = update_state_after_removal(state, g, affected)
            scratch = compute_state(g)
            assert state.total == pytest.approx(scratch.total, abs=1e-12)
            assert state.rcg == pytest.approx(scratch.rcg, abs=1e-12)
            assert state.per_instance == scratch.per_instance

    def test_removing_last_of_class_degenerates(self, rng):
        pts = rng.normal(size=(8, 2))
        m = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        labels = np.array([0, 0, 0, 0, 0, 0, 0, 1])
        g = build_graph(m, labels, k=2, class_count=2)
        state = compute_state(g)
        affected = g.affected_set(7)
        g.remove_instance(7)
        with pytest.raises(DegenerateClassDistribution):
            update_state_after_removal(state, g, affected)


class TestChiSquare:
    def test_published_quantiles(self):
        assert chi_square_quantile(0.95, 1) == pytest.approx(3.841, abs=1e-3)
        assert chi_square_quantile(0.95, 10) == pytest.approx(18.307, abs=1e-3)
        assert chi_square_quantile(0.95, 5) == pytest.approx(11.070, abs=1e-3)

    def test_invalid_df(self):
        with pytest.raises(ValueError):
            chi_square_quantile(0.95, 0)


class TestSignificantlyGreater:
    def c(self, rcg, n=100, classes=2, degree_sum=1300):
        return RcgValue(rcg, n, classes, degree_sum)

    def test_equal_rcg_false_both_modes(self):
        a = self.c(0.5)
        for spec in (SignificanceSpec.chi_square_mode(), SignificanceSpec.epsilon_margin()):
            assert not significantly_greater(a, self.c(0.5), spec)

    def test_perfect_gain_beats_zero(self):
        # statistic (1300-1)*1*1 vastly exceeds the df=99 quantile (~123.2)
        a = self.c(1.0, n=100, classes=2, degree_sum=1300)
        assert significantly_greater(a, None, SignificanceSpec.chi_square_mode())
        assert (1300 - 1) * 1.0 > chi_square_quantile(0.95, 99)

    def test_small_gain_insignificant(self):
        a = self.c(0.01, n=10, classes=2, degree_sum=30)
        assert not significantly_greater(a, None, SignificanceSpec.chi_square_mode())

    def test_epsilon_margin(self):
        spec = SignificanceSpec.epsilon_margin(1e-9)
        assert significantly_greater(self.c(0.5000001), self.c(0.5), spec)
        assert not significantly_greater(self.c(0.5), self.c(0.5000001), spec)

    def test_negative_rcg_never_beats_zero(self):
        a = self.c(-0.5)
        assert not significantly_greater(a, None, SignificanceSpec.chi_square_mode())
        assert not significantly_greater(a, None, SignificanceSpec.epsilon_margin())

    def test_invalid_df_errors(self):
        with pytest.raises(ValueError, match="degrees of freedom"):
            significantly_greater(self.c(0.5, n=1), None, SignificanceSpec.chi_square_mode())

    def test_two_sample_needs_individual_significance(self):
        spec = SignificanceSpec.chi_square_mode()
        weak_a = self.c(0.02, n=10, degree_sum=30)
        weak_b = self.c(0.01, n=10, degree_sum=30)
        assert not significantly_greater(weak_a, weak_b, spec)

    @given(rcg=st.floats(-1.0, 1.0), n=st.integers(2, 500), degsum=st.integers(2, 5000))
    @settings(max_examples=50, deadline=None)
    def test_irreflexive(self, rcg, n, degsum):
        a = RcgValue(rcg, n, 2, degsum)
        for spec in (SignificanceSpec.chi_square_mode(), SignificanceSpec.epsilon_margin()):
            assert not significantly_greater(a, a, spec)
