import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fel.curves import Curve, FunctionalDataset, Grid
from fel.empirical_likelihood import (
    ELProblem,
    bias_corrected_scores,
    chi2_quantile,
    corrected_responses,
    el_confidence_interval,
    el_log_ratio,
    euclidean_log_ratio,
    normal_quantile,
    profile_interval,
    solve_lambda,
)
from fel.errors import (
    BracketingFailed,
    DegenerateScores,
    EmptyNeighborhood,
    InsufficientSupport,
    InvalidArgument,
)
from fel.kernel_smoothing import KernelSmoother, SmootherConfig

from oracles import bisect_lambda, el_primal_log_ratio, euclidean_kkt, random_instance


class TestSolveLambda:
    def test_symmetric_scores(self):
        ev = solve_lambda([-1.0, 1.0])
        assert ev.lam == pytest.approx(0.0, abs=1e-12) and ev.lr == pytest.approx(0.0, abs=1e-20)

    def test_known_root(self):
        ev = solve_lambda([-1.0, 2.0])
        assert ev.lam == pytest.approx(0.25, abs=1e-12)
        assert ev.lam == pytest.approx(bisect_lambda([-1.0, 2.0]), abs=1e-12)
        assert ev.converged and not ev.boundary

    @pytest.mark.parametrize("w", [[1.0, 2.0], [-1.0, -0.5, 0.0], [0.0, 3.0]])
    def test_outside_hull(self, w):
        ev = solve_lambda(w)
        assert ev.boundary and ev.lr == math.inf

    def test_all_zero(self):
        ev = solve_lambda(np.zeros(4))
        assert ev.lr == 0.0 and ev.lam == 0.0 and not ev.boundary

    def test_problem_validation(self):
        with pytest.raises(InvalidArgument):
            ELProblem(np.ones(5), 3)
        with pytest.raises(InvalidArgument):
            ELProblem(np.array([1.0, np.nan]), 3)
        assert solve_lambda(ELProblem(np.array([-1.0, 2.0]), 5)).lam == pytest.approx(0.25)

    @given(st.lists(st.floats(-1e3, 1e3, allow_subnormal=False), min_size=2, max_size=30))
    def test_converged_contract(self, w):
        w = np.array(w)
        if not (w.max() > 0 > w.min()):
            return
        ev = solve_lambda(w)
        assert ev.converged
        g = np.sum(w / (1 + ev.lam * w))
        assert abs(g) <= 1e-9 * np.abs(w).max() * w.size
        assert np.all(1 + ev.lam * w > 0)
        assert ev.lr >= 0

    def test_bisection_oracle(self, rng):
        for _ in range(50):
            w = rng.normal(size=int(rng.integers(2, 20)))
            if not (w.max() > 0 > w.min()):
                continue
            assert solve_lambda(w).lam == pytest.approx(bisect_lambda(w), rel=1e-8, abs=1e-10)


class TestELLogRatio:
    def test_zero_at_nw_estimate(self, rng):
        k = rng.uniform(0.1, 1, 8)
        y = rng.normal(size=8)
        mu = float(k @ y / k.sum())
        assert el_log_ratio(k, y, mu).lr == pytest.approx(0.0, abs=1e-24)

    def test_two_point_example(self):
        ev = el_log_ratio([1.0, 1.0], [0.0, 2.0], 0.5)
        assert ev.lam == pytest.approx(2 / 3, abs=1e-12)
        assert ev.lr == pytest.approx(2 * (math.log(2 / 3) + math.log(2)), abs=1e-12)
        assert ev.lr == pytest.approx(0.575364, abs=1e-6)

    def test_simplex_grid(self):
        # The constraint pins p on two points; scan a fine simplex grid anyway.
        p1 = np.linspace(1e-6, 1 - 1e-6, 200001)
        feasible = np.abs(p1 * -0.5 + (1 - p1) * 1.5) < 1e-5
        best = np.max(np.log(2 * p1[feasible]) + np.log(2 * (1 - p1[feasible])))
        assert el_log_ratio([1.0, 1.0], [0.0, 2.0], 0.5).lr == pytest.approx(-2 * best, abs=1e-4)

    def test_zero_weights_are_inert(self, rng):
        k = rng.uniform(0.1, 1, 5)
        y = rng.normal(size=5)
        base = el_log_ratio(k, y, 0.1)
        more = el_log_ratio(np.concatenate([k, np.zeros(7)]),
                            np.concatenate([y, rng.normal(size=7) * 100]), 0.1)
        assert more.lr == pytest.approx(base.lr, rel=1e-14)

    def test_primal_oracle(self, rng):
        for _ in range(60):
            k, y, mu = random_instance(rng)
            assert el_log_ratio(k, y, mu).lr == pytest.approx(
                el_primal_log_ratio(k * (y - mu)), abs=1e-6)

    def test_monotone_away_from_root(self, rng):
        k = rng.uniform(0.1, 1, 9)
        y = rng.normal(size=9)
        root = float(k @ y / k.sum())
        right = np.linspace(root, y.max() - 1e-9, 400)
        left = np.linspace(root, y.min() + 1e-9, 400)
        for path in (right, left):
            vals = np.array([el_log_ratio(k, y, m).lr for m in path])
            assert np.all(np.diff(vals) >= -1e-10)
            assert np.all(vals >= 0)


class TestEuclidean:
    def test_example(self):
        assert euclidean_log_ratio([1.0, 1.0], [0.0, 2.0], 0.5) == pytest.approx(0.5, abs=1e-14)

    def test_zero_at_nw_estimate(self, rng):
        k = rng.uniform(0.1, 1, 8)
        y = rng.normal(size=8)
        assert euclidean_log_ratio(k, y, float(k @ y / k.sum())) == pytest.approx(0.0, abs=1e-24)

    def test_weight_scaling(self, rng):
        k = rng.uniform(0.1, 1, 6)
        y = rng.normal(size=6)
        for mu in (-0.3, 0.2, 0.9):
            assert euclidean_log_ratio(3.5 * k, y, mu) == pytest.approx(
                euclidean_log_ratio(k, y, mu), rel=1e-12)

    def test_kkt_oracle(self, rng):
        for _ in range(60):
            k, y, mu = random_instance(rng)
            assert euclidean_log_ratio(k, y, mu) == pytest.approx(
                euclidean_kkt(k * (y - mu)), abs=1e-8)

    def test_degenerate(self):
        with pytest.raises(DegenerateScores):
            euclidean_log_ratio([1.0, 1.0], [2.0, 2.0], 2.0)

    def test_close_to_el_near_root(self, rng):
        # heuristic band: both ratios share their quadratic approximation
        checked = 0
        for _ in range(40):
            k = rng.uniform(0.2, 1, 8)
            y = rng.normal(size=8)
            root = float(k @ y / k.sum())
            se = np.sqrt(np.sum((k * (y - root)) ** 2)) / k.sum()
            mu = root + rng.uniform(-0.5, 0.5) * se
            el = el_log_ratio(k, y, mu).lr
            eu = euclidean_log_ratio(k, y, mu)
            if 1e-6 < el < 1 and eu < 1:
                assert abs(el - eu) < 0.25 * max(el, eu)
                checked += 1
        assert checked > 10


class TestQuantiles:
    def test_chi2_95(self):
        assert chi2_quantile(0.95) == pytest.approx(3.841459, abs=1e-5)
        assert normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)

    def test_small_p(self):
        assert chi2_quantile(1e-12) < 1e-20

    @given(st.floats(1e-9, 1 - 1e-9), st.floats(1e-9, 1 - 1e-9))
    def test_monotone(self, p1, p2):
        if p1 < p2:
            assert chi2_quantile(p1) <= chi2_quantile(p2)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 2.0])
    def test_domain(self, p):
        with pytest.raises(InvalidArgument):
            chi2_quantile(p)


class TestProfileInterval:
    def test_endpoints_hit_threshold(self, rng):
        k = rng.uniform(0.1, 1, 12)
        y = rng.normal(size=12)
        res = profile_interval(k, y, 0.05)
        q = chi2_quantile(0.95)
        assert el_log_ratio(k, y, res.lo).lr == pytest.approx(q, abs=1e-6)
        assert el_log_ratio(k, y, res.hi).lr == pytest.approx(q, abs=1e-6)
        assert res.lo <= res.estimate <= res.hi
        assert res.level == pytest.approx(0.95)
        assert {"effective_count", "lambda_lo", "lambda_hi"} <= set(res.diagnostics)

    def test_euclidean_endpoints(self, rng):
        k = rng.uniform(0.1, 1, 12)
        y = rng.normal(size=12)
        res = profile_interval(k, y, 0.1, "euclidean")
        q = chi2_quantile(0.9)
        for end in (res.lo, res.hi):
            assert euclidean_log_ratio(k, y, end) == pytest.approx(q, abs=1e-6)

    def test_wider_at_higher_level(self, rng):
        k = rng.uniform(0.1, 1, 12)
        y = rng.normal(size=12)
        a = profile_interval(k, y, 0.1)
        b = profile_interval(k, y, 0.01)
        assert b.lo < a.lo and b.hi > a.hi

    def test_support_errors(self):
        with pytest.raises(EmptyNeighborhood):
            profile_interval(np.zeros(3), np.arange(3.0))
        with pytest.raises(InsufficientSupport):
            profile_interval(np.array([0.0, 1.0, 0.0]), np.arange(3.0))

    def test_degenerate_support(self):
        res = profile_interval(np.array([1.0, 0.5, 0.0]), np.array([2.0, 2.0, 9.0]))
        assert res.lo == res.hi == res.estimate == 2.0

    def test_flat_euclidean_ratio(self):
        k = np.zeros(10)
        k[:2] = [1.0, 0.5]
        y = np.arange(10.0)
        with pytest.raises(BracketingFailed):
            profile_interval(k, y, 0.05, "euclidean")

    def test_bad_alpha(self):
        with pytest.raises(InvalidArgument):
            profile_interval(np.ones(3), np.arange(3.0), 1.5)


@pytest.fixture(scope="module")
def smoother():
    gen = np.random.default_rng(9)
    from fel.simulation import default_grid, simulate_dataset
    ds, _ = simulate_dataset(gen, default_grid(), 80, 0.5)
    return KernelSmoother(ds, SmootherConfig(bandwidth=1.5))


class TestBiasCorrection:
    def test_center_identity(self, smoother):
        ds = smoother.ds
        x0 = ds.curve(3)
        prof = smoother.profile(x0)
        k = prof.raw_weights
        fitted, _ = smoother.fitted_values()
        r0 = smoother.estimate(x0)
        res = el_confidence_interval(ds, x0, smoother.cfg, variant="corrected", smoother=smoother)
        expected = r0 + np.sum(k * (ds.responses - fitted)) / k.sum()
        assert res.estimate == pytest.approx(expected, abs=1e-12)
        assert res.method == "el_corrected"

    def test_root_has_zero_score_sum(self, smoother):
        x0 = smoother.ds.curve(10)
        res = el_confidence_interval(smoother.ds, x0, smoother.cfg, variant="corrected",
                                     smoother=smoother)
        prob = bias_corrected_scores(smoother.ds, x0, smoother.cfg, res.estimate, smoother)
        assert abs(prob.scores.sum()) < 1e-10
        assert prob.n == len(smoother.ds)

    def test_constant_response(self, smoother):
        ds = smoother.ds.with_responses(np.full(len(smoother.ds), 4.0))
        sm = KernelSmoother(ds, smoother.cfg)
        x0 = ds.curve(0)
        k = sm.profile(x0).raw_weights
        prob = bias_corrected_scores(ds, x0, sm.cfg, 1.5, sm)
        np.testing.assert_allclose(prob.scores, k * 2.5, atol=1e-12)
        assert solve_lambda(bias_corrected_scores(ds, x0, sm.cfg, 4.0, sm)).lr == 0.0

    def test_zero_residuals(self):
        g = Grid.uniform(0, 1, 5)
        ds = FunctionalDataset(g, np.outer([0.0, 1.0, 2.0, 3.0], g.points), np.array([1.0, 5.0, 2.0, 7.0]))
        sm = KernelSmoother(ds, SmootherConfig(bandwidth=0.5))
        prob = bias_corrected_scores(ds, ds.curve(1), sm.cfg, 5.0, sm)
        np.testing.assert_array_equal(prob.scores, 0.0)
        assert solve_lambda(prob).lr == 0.0

    def test_loo_switch_changes_fits(self, smoother):
        loo = KernelSmoother(smoother.ds, SmootherConfig(bandwidth=1.5, loo_fitted=True))
        prof = smoother.profile(smoother.ds.curve(2))
        a = corrected_responses(smoother, prof)
        b = corrected_responses(loo, prof)
        assert not np.allclose(a, b)

    def test_empty_loo_neighborhood_reports_index(self):
        g = Grid.uniform(0, 1, 5)
        ds = FunctionalDataset(g, np.outer([0.0, 0.1, 5.0], g.points), np.array([1.0, 2.0, 3.0]))
        sm = KernelSmoother(ds, SmootherConfig(bandwidth=0.5, loo_fitted=True))
        with pytest.raises(EmptyNeighborhood) as info:
            corrected_responses(sm, sm.profile(Curve(g, 5.0 * g.points)))
        assert info.value.index == 2


class TestELConfidenceInterval:
    @pytest.mark.parametrize("variant", ["plain", "corrected", "euclidean"])
    def test_variants(self, smoother, variant):
        x0 = smoother.ds.curve(5)
        res = el_confidence_interval(smoother.ds, x0, smoother.cfg, 0.05, variant, smoother)
        assert res.lo < res.estimate < res.hi
        assert res.diagnostics["bandwidth"] == 1.5

    def test_plain_matches_profile(self, smoother):
        x0 = smoother.ds.curve(5)
        res = el_confidence_interval(smoother.ds, x0, smoother.cfg, smoother=smoother)
        ref = profile_interval(smoother.profile(x0).raw_weights, smoother.ds.responses)
        assert (res.lo, res.hi) == (ref.lo, ref.hi)
        assert res.estimate == pytest.approx(smoother.estimate(x0))

    def test_shift(self, smoother):
        x0 = smoother.ds.curve(5)
        a = el_confidence_interval(smoother.ds, x0, smoother.cfg, smoother=smoother)
        ds2 = smoother.ds.with_responses(smoother.ds.responses + 123.0)
        b = el_confidence_interval(ds2, x0, smoother.cfg)
        assert b.lo == pytest.approx(a.lo + 123.0, abs=1e-9)
        assert b.hi == pytest.approx(a.hi + 123.0, abs=1e-9)

    def test_unknown_variant(self, smoother):
        with pytest.raises(InvalidArgument):
            el_confidence_interval(smoother.ds, smoother.ds.curve(0), smoother.cfg,
                                   variant="bootstrap", smoother=smoother)

    def test_empty_neighborhood(self, smoother):
        far = Curve(smoother.ds.grid, 100.0 * smoother.ds.grid.points)
        with pytest.raises(EmptyNeighborhood):
            el_confidence_interval(smoother.ds, far, smoother.cfg, smoother=smoother)
