import numpy as np
import pytest

from noiselab.core import RandomSource
from noiselab.hypercube import (HypercubePoint, LowerBoundConfig,
                                cluster_mean_correlation,
                                correlated_pair_algorithm, good_center_count,
                                majority_cluster_attack,
                                oblivious_failure_bound, pack_signs,
                                packed_inner_products, parameter_search,
                                run_separation, sample_sign_matrix)


class TestPackedArithmetic:
    def test_inner_products_match_integer_matmul(self):
        gen = np.random.default_rng(0)
        for d in (7, 64, 130, 1000):
            pts = sample_sign_matrix(12, d, gen)
            packed = pack_signs(pts)
            fast = packed_inner_products(packed, packed, d)
            slow = pts.astype(np.int64) @ pts.astype(np.int64).T
            np.testing.assert_array_equal(fast, slow)

    def test_point_wrapper_roundtrip(self):
        gen = np.random.default_rng(1)
        signs = sample_sign_matrix(1, 77, gen)[0]
        p = HypercubePoint.from_signs(signs)
        np.testing.assert_array_equal(p.to_signs(), signs)
        assert p.inner(p) == 77

    def test_point_inner(self):
        a = HypercubePoint.from_signs([1, -1, 1, 1])
        b = HypercubePoint.from_signs([1, -1, 1, -1])
        assert a.inner(b) == 2

    def test_invalid_signs(self):
        with pytest.raises(ValueError):
            HypercubePoint.from_signs([1, 0, -1])


class TestCorrelatedPairAlgorithm:
    def test_identical_points_accept(self):
        pts = np.array([[1, -1, 1, 1], [1, -1, 1, 1]], dtype=np.int8)
        assert correlated_pair_algorithm(pts, t=4) == 1

    def test_antipodal_points_reject(self):
        pts = np.array([[1, 1, 1, 1], [-1, -1, -1, -1]], dtype=np.int8)
        assert correlated_pair_algorithm(pts, t=-3) == 0
        assert correlated_pair_algorithm(pts, t=-4) == 1

    def test_isolated_point_rejects(self):
        # first two points agree in all 4 coordinates; the third disagrees
        # with both in 3 of 4, giving inner product -2 < t = 2
        pts = np.array([[1, 1, 1, 1],
                        [1, 1, 1, 1],
                        [-1, -1, -1, 1]], dtype=np.int8)
        gram = pts.astype(int) @ pts.astype(int).T
        assert gram[0, 2] == -2 and gram[0, 1] == 4
        assert correlated_pair_algorithm(pts, t=2) == 0

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            correlated_pair_algorithm(np.ones((1, 4), dtype=np.int8), 0)


class TestMajorityClusterAttack:
    def test_k_one_copies_points(self):
        gen = np.random.default_rng(2)
        pts = sample_sign_matrix(4, 16, gen)
        centers = majority_cluster_attack(pts, eta=0.5, k=1)
        np.testing.assert_array_equal(centers, pts)

    def test_three_point_majority(self):
        pts = np.array([[1, 1, -1], [1, -1, -1], [1, 1, 1]], dtype=np.int8)
        centers = majority_cluster_attack(pts, eta=0.5, k=3)
        assert centers.shape == (3, 3)
        np.testing.assert_array_equal(centers[0], [1, 1, -1])

    def test_zero_budget(self):
        gen = np.random.default_rng(3)
        pts = sample_sign_matrix(6, 8, gen)
        assert majority_cluster_attack(pts, eta=0.0, k=3).shape == (0, 8)

    def test_mean_correlation_tracks_formula(self):
        # chunk of k points: the average inner product with the majority
        # center approaches sqrt(2/pi) d / sqrt(k)
        d, k, trials = 1000, 100, 100
        gen = RandomSource(4).generator()
        mu = cluster_mean_correlation(d, k)
        acc = 0.0
        for _ in range(trials):
            pts = sample_sign_matrix(k, d, gen)
            center = majority_cluster_attack(pts, eta=0.5, k=k)[0]
            acc += float((pts.astype(np.int32) @ center.astype(np.int32)).mean())
        measured = acc / trials
        assert abs(measured - mu) / mu < 0.05

    def test_good_center_counting(self):
        # every sample index lands in at least floor(C k / m) chunks
        m, k, eta = 256, 63, 0.5
        C = 256
        idx = (np.arange(C)[:, None] * k + np.arange(k)[None, :]) % m
        counts = np.bincount(idx.ravel(), minlength=m)
        assert counts.min() >= good_center_count(m, k, C)
        assert good_center_count(m, k, C) == (C * k) // m


class TestBoundsAndConfig:
    def test_oblivious_bound_reference_point(self):
        cfg = LowerBoundConfig(n=64, m=256, d=1024, eta=0.5, eps=0.2, k=33,
                               trials=1, seed=0)
        assert cfg.t == 71
        bound = oblivious_failure_bound(64, 1024, cfg.t, 0.5)
        assert 5.3 < bound < 5.6  # vacuous at this dimension, by design

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LowerBoundConfig(n=64, m=256, d=1024, eta=0.5, eps=0.2, k=32)

    def test_eta_zero_attack_adds_nothing(self):
        cfg = LowerBoundConfig(n=8, m=32, d=64, eta=0.0, eps=0.5, k=3,
                               trials=5, seed=1)
        report = run_separation(cfg)
        assert cfg.additions == 0
        assert not report.separated  # nothing separates without corruption


class TestRunSeparation:
    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_reproducible_rows(self):
        cfg = LowerBoundConfig(n=16, m=64, d=512, eta=0.5, eps=0.4, k=17,
                               trials=8, seed=7)
        r1 = run_separation(cfg)
        r2 = run_separation(cfg)
        assert [row.adaptive_accept for row in r1.rows] == \
            [row.adaptive_accept for row in r2.rows]
        assert r1.adaptive_rate == r2.adaptive_rate
        assert r1.oblivious_bound == r2.oblivious_bound

    def test_witness_scale_accepts(self):
        cfg = LowerBoundConfig(n=64, m=256, d=8192, eta=0.5, eps=0.2, k=63,
                               trials=10, seed=3)
        report = run_separation(cfg)
        assert report.oblivious_bound <= 0.1
        assert report.adaptive_rate >= 0.9
        assert report.clean_rate == 0.0


class TestFrontierSweep:
    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_bound_degrades_as_m_grows(self):
        from noiselab.hypercube import frontier_sweep
        rows = frontier_sweep(n=16, eta=0.5, eps=0.2, d=1024,
                              m_values=(32, 64, 128, 256), trials=3, seed=5)
        bounds = [r.oblivious_bound for r in rows]
        assert all(a <= b + 1e-12 for a, b in zip(bounds, bounds[1:]))
        assert [r.m for r in rows] == [32, 64, 128, 256]

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_undersized_clusters_accept_less(self):
        # at the witness scale, shrinking k well below the recipe hurts the
        # adaptive side
        good = LowerBoundConfig(n=64, m=256, d=8192, eta=0.5, eps=0.2, k=63,
                                trials=12, seed=9)
        weak = LowerBoundConfig(n=64, m=256, d=8192, eta=0.5, eps=0.2, k=11,
                                trials=12, seed=9)
        assert run_separation(good).adaptive_rate > \
            run_separation(weak).adaptive_rate


class TestParameterSearch:
    def test_tiny_budget_reports_near_misses(self):
        out = parameter_search(16, 0.5, 0.5, budget=10, seed=0,
                               d_max=2048, screen_trials=10)
        assert out.config is None
        assert out.trials_spent <= 10

    def test_respects_dimension_cap(self):
        out = parameter_search(16, 0.5, 0.2, budget=200, seed=0, d_max=64,
                               screen_trials=5, confirm_trials=10)
        if out.config is not None:
            assert out.config.d <= 64
