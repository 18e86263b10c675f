import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fel.curves import Curve, FunctionalDataset, Grid
from fel.empirical_likelihood import normal_quantile
from fel.errors import EmptyNeighborhood
from fel.kernel_smoothing import KernelSmoother, SmootherConfig
from fel.normal_intervals import (
    VarianceEstimate,
    kernel_factor,
    normal_interval,
    normal_interval_from_profile,
    residual_variance,
    smoother_residual_variance,
)


@pytest.fixture(scope="module")
def smoother():
    from fel.simulation import default_grid, simulate_dataset
    ds, _ = simulate_dataset(np.random.default_rng(4), default_grid(), 90, 0.5)
    return KernelSmoother(ds, SmootherConfig(bandwidth=1.4))


class TestResidualVariance:
    def test_constant_response(self, smoother):
        ds = smoother.ds.with_responses(np.full(len(smoother.ds), -3.0))
        assert residual_variance(ds, smoother.cfg, loo=False) == 0.0
        assert residual_variance(ds, smoother.cfg, loo=True) == 0.0

    def test_arithmetic(self):
        class ZeroFit(KernelSmoother):
            def fitted_values(self, loo=None, responses=None):
                return np.zeros(3), np.ones(3, dtype=bool)

        g = Grid.uniform(0, 1, 5)
        ds = FunctionalDataset(g, np.outer([0.0, 1.0, 2.0], g.points), np.array([1.0, -1.0, 2.0]))
        sm = ZeroFit(ds, SmootherConfig(bandwidth=1.0))
        assert smoother_residual_variance(sm).value == pytest.approx(2.0)

    def test_isolated_curves_fit_exactly(self):
        g = Grid.uniform(0, 1, 5)
        ds = FunctionalDataset(g, np.outer([0.0, 10.0, 20.0], g.points), np.array([1.0, -1.0, 2.0]))
        sm = KernelSmoother(ds, SmootherConfig(bandwidth=1e-3))
        assert smoother_residual_variance(sm, loo=False).value == 0.0

    def test_two_pass_oracle(self, smoother):
        y = smoother.ds.responses
        k = smoother.kernel_matrix.copy()
        np.fill_diagonal(k, 0.0)
        resid = [y[i] - np.dot(k[i], y) / k[i].sum() for i in range(len(y)) if k[i].sum() > 0]
        oracle = np.mean(np.square(resid))
        got = smoother_residual_variance(smoother, loo=True)
        assert got.value == pytest.approx(oracle, rel=1e-12)
        assert got.n_used + got.n_skipped == len(y)

    def test_skips_empty_loo_neighborhoods(self):
        g = Grid.uniform(0, 1, 5)
        ds = FunctionalDataset(g, np.outer([0.0, 0.1, 5.0], g.points), np.array([1.0, 2.0, 9.0]))
        sm = KernelSmoother(ds, SmootherConfig(bandwidth=0.5))
        rv = smoother_residual_variance(sm, loo=True)
        assert rv.n_skipped == 1 and rv.n_used == 2
        assert rv.value == pytest.approx(1.0)

    def test_no_usable_sample(self):
        g = Grid.uniform(0, 1, 5)
        ds = FunctionalDataset(g, np.outer([0.0, 5.0], g.points), np.array([1.0, 2.0]))
        sm = KernelSmoother(ds, SmootherConfig(bandwidth=0.5))
        with pytest.raises(EmptyNeighborhood):
            smoother_residual_variance(sm, loo=True)


class TestKernelFactor:
    @given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 10)))
    def test_bounds(self, k):
        if not k.sum() > 0:
            return
        f = kernel_factor(k)
        assert 1.0 / np.count_nonzero(k) - 1e-12 <= f <= 1.0 + 1e-12

    def test_empty(self):
        with pytest.raises(EmptyNeighborhood):
            kernel_factor(np.zeros(3))

    def test_se(self):
        assert VarianceEstimate(2.0, 0.125).se == pytest.approx(0.5)


class TestNormalInterval:
    @pytest.mark.parametrize("corrected", [False, True])
    def test_definition(self, smoother, corrected):
        x0 = smoother.ds.curve(7)
        prof = smoother.profile(x0)
        s2 = smoother_residual_variance(smoother, loo=True).value
        res = normal_interval(smoother.ds, x0, smoother.cfg, 0.05, corrected, smoother)
        half = normal_quantile(0.975) * np.sqrt(s2 * kernel_factor(prof.raw_weights))
        assert res.hi - res.estimate == pytest.approx(half, rel=1e-12)
        assert res.estimate - res.lo == pytest.approx(half, rel=1e-12)
        assert res.method == ("normal_corrected" if corrected else "normal")

    def test_corrected_center_matches_el(self, smoother):
        from fel.empirical_likelihood import el_confidence_interval
        x0 = smoother.ds.curve(11)
        a = normal_interval(smoother.ds, x0, smoother.cfg, corrected=True, smoother=smoother)
        b = el_confidence_interval(smoother.ds, x0, smoother.cfg, variant="corrected",
                                   smoother=smoother)
        assert a.estimate == pytest.approx(b.estimate, abs=1e-12)

    def test_zero_variance(self, smoother):
        prof = smoother.profile(smoother.ds.curve(0))
        res = normal_interval_from_profile(smoother, prof, 0.0)
        assert res.lo == res.hi == res.estimate

    @given(st.floats(-1e3, 1e3), st.floats(0.01, 100))
    def test_equivariance(self, c, s):
        gen = np.random.default_rng(1)
        g = Grid.uniform(0, 1, 6)
        vals = np.outer(gen.uniform(0, 1, 12), g.points)
        y = gen.normal(size=12)
        x0 = Curve(g, 0.5 * g.points)
        cfg = SmootherConfig(bandwidth=0.6)
        base = normal_interval(FunctionalDataset(g, vals, y), x0, cfg)
        moved = normal_interval(FunctionalDataset(g, vals, s * y + c), x0, cfg)
        assert moved.estimate == pytest.approx(s * base.estimate + c, abs=1e-9)
        assert moved.length == pytest.approx(s * base.length, rel=1e-9, abs=1e-9)

    def test_empty(self, smoother):
        far = Curve(smoother.ds.grid, 50.0 * smoother.ds.grid.points)
        with pytest.raises(EmptyNeighborhood):
            normal_interval(smoother.ds, far, smoother.cfg, smoother=smoother)
