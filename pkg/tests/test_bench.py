import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbslab import bench, kernels
from gbslab.bench import (
    ScalingFit,
    TimingRecord,
    anchored_model,
    anchored_ratio,
    compare_backends,
    device_like_histogram,
    estimate_classical_cost,
    fit_scaling,
    normalize_hardware,
    time_torontonian,
)
from gbslab.reference import reference_spec


class TestTiming:
    def test_small_k(self):
        recs = time_torontonian([4], spec=reference_spec(8), repetitions=3)
        (r,) = recs
        assert r.k == 4 and r.repetitions == 3
        assert 0 < r.min_seconds <= r.wall_seconds <= r.max_seconds < 1.0
        assert r.value > 0

    def test_over_limit_refused_before_timing(self):
        with pytest.raises(kernels.KernelLimitError):
            time_torontonian([4, kernels.LIMITS.max_clicks + 1], spec=reference_spec(40))

    def test_k_above_modes(self):
        with pytest.raises(ValueError):
            time_torontonian([9], spec=reference_spec(8))

    @pytest.mark.parametrize("kwargs", [{"wall_seconds": 0.0}, {"repetitions": 2}])
    def test_record_validation(self, kwargs):
        base = dict(k=4, wall_seconds=1e-3, value=1.0, error_estimate=0.0, repetitions=3)
        with pytest.raises(ValueError):
            TimingRecord(**{**base, **kwargs})


class TestFit:
    def test_synthetic_exponential(self):
        recs = [(k, 1e-6 * 2.0 ** (0.8 * k)) for k in range(10, 20)]
        fit = fit_scaling(recs)
        assert fit.slope == pytest.approx(0.8, abs=1e-6)
        assert fit.ratio == pytest.approx(2 ** 0.8, rel=1e-6)
        assert fit.r2 == pytest.approx(1.0)

    def test_constant_times(self):
        fit = fit_scaling([(k, 0.25) for k in range(5)])
        assert fit.slope == 0.0 and fit.r2 == 0.0
        assert "constant-times" in fit.flags

    def test_needs_five(self):
        with pytest.raises(ValueError):
            fit_scaling([(k, 1.0 + k) for k in range(4)])

    def test_single_k(self):
        with pytest.raises(ValueError):
            fit_scaling([(5, 1.0 + i) for i in range(6)])

    @given(scale=st.floats(1e-6, 1e6))
    def test_slope_unit_invariant(self, scale):
        rng = np.random.default_rng(0)
        recs = [(k, 2.0 ** (0.9 * k) * rng.uniform(0.9, 1.1)) for k in range(8, 16)]
        a = fit_scaling(recs)
        b = fit_scaling([(k, t * scale) for k, t in recs])
        assert b.slope == pytest.approx(a.slope, abs=1e-9)

    def test_ratio_interval_contains_truth(self):
        rng = np.random.default_rng(1)
        recs = [(k, 2.0 ** (1.1 * k) * rng.lognormal(0, 0.05)) for k in range(8, 20)]
        lo, hi = fit_scaling(recs).ratio_interval()
        assert lo < 2 ** 1.1 < hi

    def test_extrapolated(self):
        fit = fit_scaling([(k, 2.0 ** k) for k in range(16, 25)])
        assert not fit.extrapolated(20)
        assert fit.extrapolated(43)


class TestAnchors:
    def test_ratio(self):
        expect = (2 * 86400 / 0.03) ** (1 / 20)
        assert anchored_ratio() == pytest.approx(expect, rel=1e-12)
        assert anchored_ratio() == pytest.approx(2.1778, abs=1e-4)

    def test_passes_through_anchors(self):
        fit = anchored_model()
        np.testing.assert_allclose(fit.seconds([30, 50]), [0.03, 172800.0], rtol=1e-12)

    def test_normalize_hardware(self):
        fit = normalize_hardware(ScalingFit(1.0, -20.0, 0.99))
        assert fit.slope == 1.0
        assert fit.seconds(30) == pytest.approx(0.03, rel=1e-12)


class TestCost:
    def test_empty(self):
        table = estimate_classical_cost({}, anchored_model())
        assert table.total == 0.0 and table.peak is None

    def test_single_count(self):
        fit = anchored_model()
        table = estimate_classical_cost({40: 1}, fit)
        assert table.total == pytest.approx(100 * float(fit.seconds(40)), rel=1e-12)

    def test_zero_counts_dropped(self):
        table = estimate_classical_cost([0, 0, 3, 0], anchored_model())
        assert [r.N for r in table.rows] == [2]

    def test_total_is_row_sum(self):
        table = estimate_classical_cost(device_like_histogram(), anchored_model())
        assert table.total == pytest.approx(math.fsum(r.cost_seconds for r in table.rows), rel=1e-15)

    def test_monotone_in_counts(self):
        fit = anchored_model()
        a = estimate_classical_cost({20: 5, 30: 1}, fit).total
        b = estimate_classical_cost({20: 6, 30: 1}, fit).total
        assert b > a

    def test_error_bars(self):
        table = estimate_classical_cost({10: 100}, anchored_model())
        (row,) = table.rows
        assert row.cost_err == pytest.approx(row.cost_seconds / 10)

    def test_labels(self):
        fit = fit_scaling([(k, 2.0 ** k) for k in range(16, 25)])
        rows = list(estimate_classical_cost({20: 1, 43: 1}, fit).table())
        assert [r[-1] for r in rows[1:]] == ["MEASURED", "EXTRAPOLATED"]

    def test_device_like_peak_beyond_mean(self):
        hist = device_like_histogram()
        assert hist[43] == 3_097_810 and hist[76] >= 1
        # log cost is quadratic in N, so its peak sits at mean + s^2 ln(ratio)
        s2 = 33 ** 2 / (2 * math.log(3_097_810))
        analytic = 43 + s2 * math.log(anchored_ratio())
        peak = estimate_classical_cost(hist, anchored_model()).peak
        assert peak > 50
        assert abs(peak - analytic) <= 1


def test_compare_backends_rows():
    rows = compare_backends([4, 6])
    assert [r[0] for r in rows] == [4, 6]
    for k, t_cy, t_py, speedup, diff in rows:
        assert t_py > 0
        if not math.isnan(t_cy):
            assert diff < 1e-10


def test_constants_consistent():
    assert bench.TORONTONIANS_PER_SAMPLE == 100
    assert bench.ANCHOR_SECONDS[1] == 172800.0
