import numpy as np
import pytest

import drivendimer as dd
from drivendimer.correlations import doubling_diagnostics, two_time_sz


def synthetic_series(values, asymptote=0.0, sz_mean=0.0):
    values = np.asarray(values, dtype=complex)
    return dd.CorrelationSeries(
        lags=np.arange(values.size),
        values=values,
        sz_mean=sz_mean,
        asymptote=asymptote,
    )


class TestTwoTimeSz:
    def test_c0_is_variance(self, fmap10, rho10, ops10):
        series = two_time_sz(fmap10, rho10, ops10, 4)
        sz = ops10.sz.entries
        expected = np.trace(sz @ sz @ rho10.entries)
        assert abs(series.values[0] - expected) < 1e-12
        assert abs(series.values[0].imag) < 1e-10
        assert series.values[0].real >= series.sz_mean ** 2 - 1e-10

    def test_trace_conserved_along_iteration(self, fmap10, rho10, ops10):
        x = ops10.sz.entries @ rho10.entries
        target = np.trace(x)
        for _ in range(50):
            x = dd.apply_floquet(fmap10, x)
            assert abs(np.trace(x) - target) < 1e-8

    def test_linearity_split(self, fmap10, rho10, ops10):
        x = ops10.sz.entries @ rho10.entries
        herm = 0.5 * (x + x.conj().T)
        anti = 0.5 * (x - x.conj().T)
        sz = ops10.sz.entries
        a, b, c = x.copy(), herm.copy(), anti.copy()
        for _ in range(10):
            a = dd.apply_floquet(fmap10, a)
            b = dd.apply_floquet(fmap10, b)
            c = dd.apply_floquet(fmap10, c)
            assert abs(np.trace(sz @ a) - np.trace(sz @ b) - np.trace(sz @ c)) < 1e-10

    def test_long_time_asymptote(self, fmap10, rho10, ops10):
        series = two_time_sz(fmap10, rho10, ops10, 400)
        assert abs(series.values[-1] - series.asymptote) < 1e-6

    def test_fixed_point_precondition(self, fmap10, ops10):
        bad = dd.DensityMatrix(fmap10.basis, np.eye(fmap10.dim) / fmap10.dim)
        with pytest.raises(ValueError):
            two_time_sz(fmap10, bad, ops10, 4)

    def test_alternation_at_n10(self, fmap10, rho10, ops10, spec10):
        series = two_time_sz(fmap10, rho10, ops10, 60)
        report = doubling_diagnostics(series, spec10)
        assert report.alternation_length >= 20
        assert report.predicted_decay == pytest.approx(
            abs(spec10.rapidities[1]), abs=1e-12
        )


class TestDoublingDiagnostics:
    def test_constant_series(self, spec10):
        series = synthetic_series(np.full(32, 0.25), asymptote=0.25, sz_mean=0.5)
        report = doubling_diagnostics(series, spec10)
        assert report.alternation_length == 0
        assert report.halffreq_power == 0.0

    def test_geometric_alternating(self, spec10):
        m = np.arange(41)
        series = synthetic_series((-0.9) ** m)
        report = doubling_diagnostics(series, spec10)
        assert report.alternation_length == 40
        assert abs(report.fitted_decay - 0.9) < 0.009
        assert report.halffreq_power > 0.5

    def test_too_short(self, spec10):
        series = synthetic_series(np.ones(5))
        with pytest.raises(ValueError):
            doubling_diagnostics(series, spec10)

    def test_halffreq_dominant_bin(self, spec10):
        m = np.arange(64)
        g = (-0.95) ** m
        series = synthetic_series(g)
        spectrum = np.abs(np.fft.rfft(g)) ** 2
        assert np.argmax(spectrum) == len(g) // 2
        report = doubling_diagnostics(series, spec10)
        assert report.halffreq_power > 0.5


class TestFiniteSizeTrend:
    def test_alternation_window_grows_with_n(self, spec10, fmap10, rho10, ops10, n25_pipeline):
        # Fig. 3 trend: the 2T window survives longer with more particles.
        # N=100 needs a d^2=10201 fundamental matrix (hours on this box;
        # the runner marks N=100 maps slow/optional), so the trend is
        # asserted across N = 5, 10, 25.
        import conftest

        lengths = {}
        p5 = conftest.reference_params(5)
        ops5 = dd.build_operators(p5)
        fmap5 = dd.build_floquet_map(ops5, dd.StepControl())
        spec5 = dd.eig_floquet(fmap5)
        rho5 = dd.steady_state(spec5, ops5.basis)
        series5 = two_time_sz(fmap5, rho5, ops5, 200)
        lengths[5] = doubling_diagnostics(series5, spec5).alternation_length

        series10 = two_time_sz(fmap10, rho10, ops10, 200)
        lengths[10] = doubling_diagnostics(series10, spec10).alternation_length

        _, ops25, fmap25, spec25 = n25_pipeline
        rho25 = dd.steady_state(spec25, ops25.basis)
        series25 = two_time_sz(fmap25, rho25, ops25, 200)
        lengths[25] = doubling_diagnostics(series25, spec25).alternation_length

        assert lengths[5] < lengths[10] < lengths[25]
