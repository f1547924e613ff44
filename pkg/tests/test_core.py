import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noiselab.core import (ATOL, Coupling, DiscreteDistribution, Domain,
                           DomainMismatchError, RandomSource, SampleMultiset,
                           mixture, sample_iid, tv_distance, uniform_of)

DOM2 = Domain(2)


def dist(*w):
    return DiscreteDistribution(Domain(len(w)), w)


def tv_best_test_set(d1, d2):
    """Independent oracle: max over all 2^|X| test sets of P1[T] - P2[T]."""
    best = 0.0
    k = d1.domain.size
    for mask in itertools.product([0, 1], repeat=k):
        m = np.array(mask, dtype=float)
        best = max(best, float(m @ (d1.weights - d2.weights)))
    return best


class TestTvDistance:
    def test_identical_uniform(self):
        d = DiscreteDistribution.uniform(DOM2)
        assert tv_distance(d, d) == 0.0

    def test_uniform_vs_point_mass(self):
        d1 = DiscreteDistribution.uniform(DOM2)
        d2 = DiscreteDistribution.point_mass(DOM2, 0)
        assert tv_distance(d1, d2) == pytest.approx(0.5, abs=ATOL)

    def test_half_l1_matches_best_test_set(self):
        d1, d2 = dist(0.7, 0.3), dist(0.4, 0.6)
        assert tv_distance(d1, d2) == pytest.approx(0.3, abs=1e-12)
        assert tv_distance(d1, d2) == pytest.approx(tv_best_test_set(d1, d2),
                                                    abs=1e-12)

    def test_best_test_set_oracle_random(self):
        gen = np.random.default_rng(0)
        dom = Domain(5)
        for _ in range(50):
            d1 = DiscreteDistribution(dom, gen.dirichlet(np.ones(5)))
            d2 = DiscreteDistribution(dom, gen.dirichlet(np.ones(5)))
            assert tv_distance(d1, d2) == pytest.approx(
                tv_best_test_set(d1, d2), abs=1e-12)

    def test_domain_mismatch(self):
        with pytest.raises(DomainMismatchError):
            tv_distance(DiscreteDistribution.uniform(Domain(2)),
                        DiscreteDistribution.uniform(Domain(3)))


@st.composite
def weight_vectors(draw, size=4):
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=size, max_size=size))
    arr = np.array(raw)
    return arr / arr.sum()


class TestMetricProperties:
    @given(weight_vectors(), weight_vectors(), weight_vectors())
    @settings(max_examples=150, deadline=None)
    def test_metric_axioms(self, w1, w2, w3):
        dom = Domain(4)
        a, b, c = (DiscreteDistribution(dom, w) for w in (w1, w2, w3))
        assert tv_distance(a, b) == pytest.approx(tv_distance(b, a), abs=1e-12)
        assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12
        assert tv_distance(a, a) == 0.0
        if tv_distance(a, b) < 1e-12:
            assert np.abs(a.weights - b.weights).max() < 1e-9


class TestUniformOf:
    def test_two_one(self):
        s = SampleMultiset.from_elements(DOM2, [0, 0, 1])
        np.testing.assert_allclose(uniform_of(s).weights, [2 / 3, 1 / 3])

    def test_singleton(self):
        s = SampleMultiset.from_elements(DOM2, [0])
        assert uniform_of(s) == DiscreteDistribution.point_mass(DOM2, 0)

    def test_quarter(self):
        s = SampleMultiset.from_elements(DOM2, [0, 1, 1, 1])
        np.testing.assert_allclose(uniform_of(s).weights, [0.25, 0.75])

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            uniform_of(SampleMultiset.empty(DOM2))


class TestSampleIid:
    def test_zero_draws(self):
        d = DiscreteDistribution.uniform(DOM2)
        assert sample_iid(d, 0, RandomSource(0)).size == 0

    def test_point_mass_support(self):
        d = DiscreteDistribution.point_mass(DOM2, 0)
        s = sample_iid(d, 5, RandomSource(1))
        assert s.counts.tolist() == [5, 0]

    def test_large_sample_frequency(self):
        d = DiscreteDistribution.uniform(DOM2)
        for seed in (11, 12):
            s = sample_iid(d, 10 ** 6, RandomSource(seed))
            assert abs(s.counts[0] / 10 ** 6 - 0.5) < 0.002

    def test_determinism(self):
        d = dist(0.2, 0.5, 0.3)
        a = sample_iid(d, 1000, RandomSource(3, 7))
        b = sample_iid(d, 1000, RandomSource(3, 7))
        assert a == b

    def test_streams_differ(self):
        d = dist(0.2, 0.5, 0.3)
        a = sample_iid(d, 1000, RandomSource(3, 0))
        b = sample_iid(d, 1000, RandomSource(3, 1))
        assert a != b

    def test_negative_raises(self):
        with pytest.raises(ValueError):
            sample_iid(DiscreteDistribution.uniform(DOM2), -1, RandomSource(0))


class TestMixture:
    def test_endpoints(self):
        d1, d2 = dist(0.7, 0.3), dist(0.4, 0.6)
        assert mixture(1.0, d1, d2) == d1
        assert mixture(0.0, d1, d2) == d2

    def test_point_masses(self):
        d1 = DiscreteDistribution.point_mass(DOM2, 0)
        d2 = DiscreteDistribution.point_mass(DOM2, 1)
        np.testing.assert_allclose(mixture(0.9, d1, d2).weights, [0.9, 0.1])

    def test_out_of_range(self):
        d = DiscreteDistribution.uniform(DOM2)
        with pytest.raises(ValueError):
            mixture(1.5, d, d)

    @given(st.floats(0.0, 1.0), weight_vectors())
    @settings(max_examples=50, deadline=None)
    def test_self_mixture_identity(self, theta, w):
        d = DiscreteDistribution(Domain(4), w)
        assert np.abs(mixture(theta, d, d).weights - d.weights).max() < 1e-12


class TestCoupling:
    def test_optimal_achieves_tv(self):
        gen = np.random.default_rng(5)
        dom = Domain(6)
        for _ in range(30):
            d1 = DiscreteDistribution(dom, gen.dirichlet(np.ones(6)))
            d2 = DiscreteDistribution(dom, gen.dirichlet(np.ones(6)))
            c = Coupling.optimal(d1, d2)
            assert c.check_marginals(d1, d2, atol=1e-12)
            assert c.prob_different() == pytest.approx(tv_distance(d1, d2),
                                                       abs=1e-12)

    def test_any_coupling_dominates_tv(self):
        # mixtures of the optimal and independent couplings stay couplings
        gen = np.random.default_rng(6)
        dom = Domain(4)
        for _ in range(30):
            d1 = DiscreteDistribution(dom, gen.dirichlet(np.ones(4)))
            d2 = DiscreteDistribution(dom, gen.dirichlet(np.ones(4)))
            best = Coupling.optimal(d1, d2)
            indep = Coupling.independent(d1, d2)
            theta = float(gen.uniform())
            mixed = Coupling.mix(theta, best, indep)
            assert mixed.check_marginals(d1, d2, atol=1e-9)
            assert mixed.prob_different() >= tv_distance(d1, d2) - 1e-12


class TestSerialization:
    def test_distribution_roundtrip(self):
        d = dist(0.25, 0.75)
        again = DiscreteDistribution.from_json(d.to_json())
        assert again == d
        payload = json.loads(d.to_json())
        assert payload["domain_size"] == 2

    def test_multiset_roundtrip(self):
        s = SampleMultiset.from_elements(Domain(4), [0, 0, 3])
        again = SampleMultiset.from_json(s.to_json())
        assert again == s
        payload = json.loads(s.to_json())
        assert payload["counts"] == {"0": 2, "3": 1}


class TestImmutability:
    def test_distribution_frozen(self):
        d = dist(0.5, 0.5)
        with pytest.raises(AttributeError):
            d.weights = np.array([1.0, 0.0])
        with pytest.raises(ValueError):
            d.weights[0] = 1.0  # read-only buffer

    def test_invalid_weights(self):
        with pytest.raises(ValueError):
            dist(0.5, 0.4)
        with pytest.raises(ValueError):
            dist(-0.1, 1.1)
        with pytest.raises(ValueError):
            dist(float("nan"), float("nan"))
        with pytest.raises(ValueError):
            Coupling(Domain(2), [[float("inf"), 0.0], [0.0, 0.0]])
