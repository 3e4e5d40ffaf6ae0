"""Sizing policies: fixed, square-root staffed, revenue-optimal, forecast-driven."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenfarm.economics import Tariff, revenue_rate
from greenfarm.energy import EnergyProfile, average_power, busy_servers
from greenfarm.policies import (
    ForecastState,
    adaptive_policy,
    forecast_next,
    forecast_update,
    make_policy,
    optimal_policy,
    oracle_policy,
    refit_smoothing,
    static_policy,
)
from greenfarm.queueing import TrafficEstimate, blocking_probability


MS = 50.0 / 60.0


def exhaustive_best_n(traffic, S, tariff, energy):
    """Oracle: score every n in [0, S] and return the best (ties -> smaller n)."""
    best_n, best_r = 0, 0.0
    for n in range(S + 1):
        b = 1.0 if n == 0 else blocking_probability(traffic, n)
        tput = traffic.rate * (1.0 - b)
        m = min(n, busy_servers(tput, traffic.mean_service))
        r = revenue_rate(tput, traffic.mean_service, average_power(n, m, energy), tariff)
        if r > best_r:
            best_n, best_r = n, r
    return best_n, best_r


class TestStaticAndAdaptive:
    def test_static_fixed_size_and_bounds(self):
        assert static_policy(500, 1000).n == 500
        with pytest.raises(ValueError):
            static_policy(2000, 1000)

    def test_square_root_staffing_examples(self):
        t = TrafficEstimate(rate=100.0 / MS, mean_service=MS)  # rho = 100
        assert adaptive_policy(t, 0.2, 1000).n == math.ceil(100 + 0.2 * 10)  # 102
        assert adaptive_policy(t, -0.2, 1000).n == math.ceil(100 - 0.2 * 10)
        assert adaptive_policy(t, 0.0, 1000).n == 100

    def test_hedge_limited_to_one_sigma(self):
        t = TrafficEstimate(rate=100.0 / MS, mean_service=MS)
        with pytest.raises(ValueError):
            adaptive_policy(t, 1.5, 1000)
        with pytest.raises(ValueError):
            adaptive_policy(t, -1.5, 1000)

    def test_never_exceeds_capacity(self):
        t = TrafficEstimate(rate=995.0 / MS, mean_service=MS)
        assert adaptive_policy(t, 1.0, 1000).n == 1000


class TestOptimal:
    @pytest.mark.parametrize("load", [0.05, 0.3, 0.6, 0.9])
    def test_matches_exhaustive_scan(self, load):
        S = 300  # keep the oracle loop affordable
        t = TrafficEstimate(rate=load * S / MS, mean_service=MS)
        tariff, energy = Tariff(), EnergyProfile()
        ref_n, ref_r = exhaustive_best_n(t, S, tariff, energy)
        d = optimal_policy(t, S, tariff, energy, epsilon=1e-9)
        assert d.n == ref_n
        assert d.predicted_revenue == pytest.approx(ref_r, rel=1e-9)

    def test_shuts_down_when_price_dwarfs_charges(self):
        # electricity so expensive that serving anything loses money
        t = TrafficEstimate(rate=50.0 / MS, mean_service=MS)
        d = optimal_policy(t, 300, Tariff(electricity_price=50.0), EnergyProfile())
        assert d.n == 0
        assert d.predicted_revenue == 0.0

    def test_bursty_traffic_needs_more_servers(self):
        S = 300
        smooth = TrafficEstimate(rate=0.6 * S / MS, mean_service=MS)
        bursty = TrafficEstimate(rate=0.6 * S / MS, mean_service=MS, ca2=3.0, cs2=1.0)
        args = (S, Tariff(), EnergyProfile())
        assert optimal_policy(bursty, *args).n >= optimal_policy(smooth, *args).n

    def test_oracle_uses_true_rate(self):
        shape = TrafficEstimate(rate=10.0, mean_service=MS)  # stale estimate
        d = oracle_policy(0.6 * 300 / MS, shape, 300, Tariff(), EnergyProfile())
        ref = optimal_policy(TrafficEstimate(rate=0.6 * 300 / MS, mean_service=MS),
                             300, Tariff(), EnergyProfile())
        assert d.n == ref.n

    @given(load=st.floats(0.05, 0.99))
    @settings(max_examples=25, deadline=None)
    def test_decision_feasible_and_profitable_or_idle(self, load):
        t = TrafficEstimate(rate=load * 200 / MS, mean_service=MS)
        d = optimal_policy(t, 200, Tariff(), EnergyProfile())
        assert 0 <= d.n <= 200
        assert d.predicted_revenue >= 0.0


class TestForecasting:
    def test_initialization_hand_values(self):
        s = forecast_update(ForecastState(), 10.0)
        assert (s.smoothed, s.trend) == (10.0, 0.0)
        s = forecast_update(s, 15.0)
        assert (s.smoothed, s.trend) == (15.0, 5.0)
        # third observation with alpha = gamma = 0.5 and x = 14:
        # S = 0.5*14 + 0.5*(15 + 5) = 17, b = 0.5*(17 - 15) + 0.5*5 = 3.5
        s = forecast_update(s, 14.0)
        assert s.smoothed == pytest.approx(17.0)
        assert s.trend == pytest.approx(3.5)

    def test_exact_on_linear_ramps(self):
        # a linear ramp is in the model class: one-step error is zero forever
        s = ForecastState(alpha=0.3, gamma=0.7)
        for k in range(40):
            x = 5.0 + 2.5 * k
            if k >= 2:
                assert forecast_next(s) == pytest.approx(x, abs=1e-9)
            s = forecast_update(s, x)

    def test_forecast_clamped_at_zero(self):
        s = forecast_update(ForecastState(), 10.0)
        s = forecast_update(s, 1.0)  # trend -9: raw forecast would be -8
        assert forecast_next(s) == 0.0

    def test_history_is_bounded(self):
        s = ForecastState(max_history=5)
        for k in range(20):
            s = forecast_update(s, float(k))
        assert len(s.history) == 5
        assert s.history == [15.0, 16.0, 17.0, 18.0, 19.0]

    def test_refit_needs_enough_history(self):
        assert refit_smoothing([1.0, 2.0, 3.0]) is None

    def test_refit_matches_independent_grid_oracle(self):
        def oracle(series, step=0.05):
            m = round(1.0 / step)
            best = None
            for i in range(m + 1):
                for j in range(m + 1):
                    a, g = i * step, j * step
                    smoothed, trend, sse = series[0], series[1] - series[0], 0.0
                    for x in series[2:]:
                        err = smoothed + trend - x
                        sse += err * err
                        prev = smoothed
                        smoothed = a * x + (1 - a) * (smoothed + trend)
                        trend = g * (smoothed - prev) + (1 - g) * trend
                    if best is None or sse < best[0] - 1e-12:
                        best = (sse, a, g)
            return best[1], best[2]

        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(6, 30))
            series = list(rng.uniform(0.0, 100.0, size=n))
            assert refit_smoothing(series) == oracle(series)


class TestFactory:
    def test_spec_strings(self):
        assert type(make_policy("static:500")).__name__ == "StaticPolicy"
        assert type(make_policy("adaptive:0.2")).__name__ == "AdaptivePolicy"
        assert type(make_policy("optimal")).__name__ == "OptimalPolicy"
        assert type(make_policy("predictive")).__name__ == "PredictivePolicy"
        assert type(make_policy("oracle")).__name__ == "OraclePolicy"

    def test_rejects_unknown_policy(self):
        with pytest.raises(ValueError):
            make_policy("banana")
        with pytest.raises(ValueError):
            make_policy("static:many")
