"""Per-window server allocation policies.

Five deciders: Static (fixed n), Optimal (revenue-maximizing scan over
n), Adaptive (square-root staffing), Predictive (Adaptive driven by a
Holt forecast of the arrival rate), and Oracle (Optimal evaluated on the
true next-window rate).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from greenfarm.economics import Tariff, revenue_rate
from greenfarm.energy import EnergyProfile, average_power, busy_servers
from greenfarm.queueing import (TrafficEstimate, blocking_probability,
                                erlang_b, erlang_b_fractional, peakedness)

__all__ = [
    "PolicyDecision",
    "ForecastState",
    "static_policy",
    "adaptive_policy",
    "optimal_policy",
    "oracle_policy",
    "predictive_policy",
    "forecast_update",
    "forecast_next",
    "refit_smoothing",
    "PolicyContext",
    "StaticPolicy",
    "AdaptivePolicy",
    "OptimalPolicy",
    "PredictivePolicy",
    "OraclePolicy",
    "make_policy",
]

DEFAULT_EPSILON = 0.01  # $/hour; far below one server's marginal revenue


@dataclass(frozen=True)
class PolicyDecision:
    """Number of servers to run next window, with diagnostics."""

    n: int
    predicted_rho: float = 0.0
    predicted_blocking: float = float("nan")
    predicted_revenue: float = float("nan")


@dataclass
class ForecastState:
    """Holt (double exponential smoothing) level/trend state.

    ``history`` keeps recent per-window arrival-rate observations for
    periodic refitting of the smoothing weights.
    """

    smoothed: float = 0.0
    trend: float = 0.0
    alpha: float = 0.5
    gamma: float = 0.5
    history: list = field(default_factory=list)
    max_history: int = 168
    initialized: bool = False

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


def static_policy(n_fixed: int, S: int) -> PolicyDecision:
    """Always run the same number of servers."""
    if not 0 <= n_fixed <= S:
        raise ValueError(f"n_fixed must be in [0, {S}], got {n_fixed}")
    return PolicyDecision(n=n_fixed)


def adaptive_policy(traffic: TrafficEstimate, beta: float, S: int) -> PolicyDecision:
    """Square-root staffing: n = ceil(rho + beta * sqrt(rho)), capped at S.

    The beta * sqrt(rho) slack absorbs stochastic variability around the
    offered load.
    """
    if not -1 <= beta <= 1:
        raise ValueError(f"beta must be in [-1, 1], got {beta}")
    rho = traffic.rho
    n = min(S, max(0, math.ceil(rho + beta * math.sqrt(rho))))
    return PolicyDecision(n=n, predicted_rho=rho)


def _predicted_revenue(traffic, n, tariff, energy, time, z=None):
    if z is None:
        p = blocking_probability(traffic, n)
    elif traffic.rho == 0.0:
        p = 0.0
    elif z == 1.0:
        p = erlang_b(n, traffic.rho)
    else:
        p = erlang_b_fractional(n / z, traffic.rho / z)
    t_put = traffic.rate * (1.0 - p)
    m_bar = min(n, busy_servers(t_put, traffic.mean_service))
    power = average_power(n, m_bar, energy)
    return revenue_rate(t_put, traffic.mean_service, power, tariff, time), p


def busy_step_cost(tariff: Tariff, energy: EnergyProfile) -> float:
    """Revenue granularity ($/h) of one quantized expected-busy server.

    The expected busy count is rounded up to an integer, so predicted
    revenue carries a sawtooth of this amplitude; anything comparing
    revenues across neighbouring n must tolerate it.
    """
    return ((energy.busy_effective - energy.idle_effective)
            * tariff.indirect_cost_multiplier * tariff.max_price / 1000.0)


def optimal_policy(traffic: TrafficEstimate, S: int, tariff: Tariff,
                   energy: EnergyProfile, epsilon: float = DEFAULT_EPSILON,
                   time: float = 0.0) -> PolicyDecision:
    """Search for the n that maximizes the predicted revenue rate.

    Predicted revenue is unimodal in n up to the busy-count quantization
    sawtooth (observed, not proven), so the scan walks n upward, keeps
    the best value seen, and stops once revenue has fallen more than one
    sawtooth step plus ``epsilon`` below that best.  The scan starts
    just below the offered load to skip the flat loss-dominated region;
    if revenue is already falling steeply there, it restarts from 0.
    Ties prefer the smaller n (same revenue, less energy).
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    rho = traffic.rho
    if rho == 0.0:
        return PolicyDecision(n=0, predicted_rho=0.0, predicted_blocking=0.0,
                              predicted_revenue=0.0)

    z = peakedness(traffic).z
    cache = {}

    def revenue(n):
        if n not in cache:
            cache[n] = _predicted_revenue(traffic, n, tariff, energy, time, z)
        return cache[n][0]

    drop_tol = busy_step_cost(tariff, energy) + epsilon
    start = min(S, max(0, math.ceil(rho - math.sqrt(rho))))
    if start > 0 and start < S and revenue(start + 1) < revenue(start) - drop_tol:
        start = 0  # peak lies left of the shortcut start: full scan

    best_n, best_r = 0, revenue(0)
    if revenue(start) > best_r:
        best_n, best_r = start, revenue(start)
    for n in range(start + 1, S + 1):
        r = revenue(n)
        if r > best_r:
            best_n, best_r = n, r
        elif best_r - r > drop_tol:
            break

    _, p = cache[best_n]
    return PolicyDecision(n=best_n, predicted_rho=rho, predicted_blocking=p,
                          predicted_revenue=best_r)


def oracle_policy(true_next_rate: float, traffic_shape: TrafficEstimate, S: int,
                  tariff: Tariff, energy: EnergyProfile,
                  epsilon: float = DEFAULT_EPSILON, time: float = 0.0) -> PolicyDecision:
    """Optimal search with the estimated arrival rate replaced by the true
    next-window rate (variability estimates are kept from the shape)."""
    traffic = replace(traffic_shape, rate=true_next_rate)
    return optimal_policy(traffic, S, tariff, energy, epsilon, time)


def forecast_update(state: ForecastState, rate_observed: float) -> ForecastState:
    """Fold one observed per-window arrival rate into the Holt state.

    Level: S_k = alpha*x + (1-alpha)*(S_{k-1} + b_{k-1});
    trend: b_k = gamma*(S_k - S_{k-1}) + (1-gamma)*b_{k-1}.
    The first two observations initialize level and trend directly.
    """
    history = (state.history + [rate_observed])[-state.max_history:]
    if not state.initialized:
        if len(history) == 1:
            return replace(state, smoothed=rate_observed, trend=0.0,
                           history=history, initialized=True)
        # state was constructed with pre-seeded history but not marked
        smoothed, trend = history[0], 0.0
        for x in history[1:]:
            prev = smoothed
            smoothed = state.alpha * x + (1 - state.alpha) * (smoothed + trend)
            trend = state.gamma * (smoothed - prev) + (1 - state.gamma) * trend
        return replace(state, smoothed=smoothed, trend=trend,
                       history=history, initialized=True)
    if len(history) == 2 and state.trend == 0.0:
        # second observation: standard Holt initialization b0 = x1 - x0
        return replace(state, smoothed=rate_observed,
                       trend=rate_observed - state.smoothed, history=history)
    prev = state.smoothed
    smoothed = state.alpha * rate_observed + (1 - state.alpha) * (prev + state.trend)
    trend = state.gamma * (smoothed - prev) + (1 - state.gamma) * state.trend
    return replace(state, smoothed=smoothed, trend=trend, history=history)


def forecast_next(state: ForecastState) -> float:
    """One-step-ahead rate forecast, clamped at zero: max(0, S_k + b_k)."""
    return max(0.0, state.smoothed + state.trend)


def _holt_sse(series, alpha, gamma):
    """Sum of squared one-step-ahead forecast errors over a series,
    with Holt initialization S0 = x0, b0 = x1 - x0."""
    smoothed = series[0]
    trend = series[1] - series[0]
    sse = 0.0
    for x in series[2:]:
        err = (smoothed + trend) - x
        sse += err * err
        prev = smoothed
        smoothed = alpha * x + (1 - alpha) * (smoothed + trend)
        trend = gamma * (smoothed - prev) + (1 - gamma) * trend
    return sse


def refit_smoothing(history, grid_step: float = 0.05):
    """Least-squares grid search for the Holt weights.

    Evaluates every (alpha, gamma) on a grid over [0, 1]^2 and returns
    the pair minimizing the one-step-ahead squared forecast error; ties
    break toward the smallest alpha, then the smallest gamma.  Returns
    None when the history is too short to score a forecast.
    """
    series = [float(x) for x in history]
    if len(series) < 4:
        return None
    steps = round(1.0 / grid_step)
    grid = [i * grid_step for i in range(steps + 1)]
    best = None
    for alpha in grid:
        for gamma in grid:
            sse = _holt_sse(series, alpha, gamma)
            if best is None or sse < best[0] - 1e-12:
                best = (sse, alpha, gamma)
    return best[1], best[2]


def predictive_policy(state: ForecastState, traffic: TrafficEstimate,
                      beta: float, S: int) -> PolicyDecision:
    """Square-root staffing on the forecast load instead of the observed one."""
    forecast_rho = forecast_next(state) * traffic.mean_service
    forecast_traffic = replace(traffic, rate=forecast_next(state))
    decision = adaptive_policy(forecast_traffic, beta, S)
    return replace(decision, predicted_rho=forecast_rho)


# --------------------------------------------------------------------------
# Stateful wrappers used by the simulator.  Each run owns its policy
# instance; `decide` is called once per window with the fresh estimates.


@dataclass(frozen=True)
class PolicyContext:
    """Everything a decider may need besides the traffic estimate."""

    S: int
    tariff: Tariff
    energy: EnergyProfile
    time: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    true_next_rate: float | None = None


class StaticPolicy:
    name = "static"

    def __init__(self, n_fixed: int):
        self.n_fixed = n_fixed

    def decide(self, traffic: TrafficEstimate, ctx: PolicyContext) -> PolicyDecision:
        return static_policy(self.n_fixed, ctx.S)


class AdaptivePolicy:
    name = "adaptive"

    def __init__(self, beta: float = 0.2):
        self.beta = beta

    def decide(self, traffic, ctx):
        return adaptive_policy(traffic, self.beta, ctx.S)


class OptimalPolicy:
    name = "optimal"

    def decide(self, traffic, ctx):
        return optimal_policy(traffic, ctx.S, ctx.tariff, ctx.energy,
                              ctx.epsilon, ctx.time)


class PredictivePolicy:
    """Adaptive staffing on a Holt forecast, with periodic weight refits."""

    name = "predictive"

    def __init__(self, beta: float = 0.2, alpha: float = 0.5, gamma: float = 0.5,
                 refit_every: int = 24, grid_step: float = 0.05):
        self.beta = beta
        self.refit_every = refit_every
        self.grid_step = grid_step
        self.state = ForecastState(alpha=alpha, gamma=gamma)
        self._since_refit = 0

    def decide(self, traffic, ctx):
        self.state = forecast_update(self.state, traffic.rate)
        self._since_refit += 1
        if self.refit_every and self._since_refit >= self.refit_every:
            fitted = refit_smoothing(self.state.history, self.grid_step)
            if fitted is not None:
                self.state = replace(self.state, alpha=fitted[0], gamma=fitted[1])
            self._since_refit = 0
        return predictive_policy(self.state, traffic, self.beta, ctx.S)


class OraclePolicy:
    """Decides from the true next-window arrival rate.

    ``mode="optimal"`` runs the revenue-maximizing search on the true
    rate; ``mode="qed"`` applies square-root staffing to it instead.
    """

    name = "oracle"

    def __init__(self, mode: str = "optimal", beta: float = 0.2):
        if mode not in ("optimal", "qed"):
            raise ValueError(f"oracle mode must be 'optimal' or 'qed', got {mode!r}")
        self.mode = mode
        self.beta = beta

    def decide(self, traffic, ctx):
        if ctx.true_next_rate is None:
            raise ValueError("oracle policy needs true_next_rate in the context")
        if self.mode == "qed":
            true_traffic = replace(traffic, rate=ctx.true_next_rate)
            return adaptive_policy(true_traffic, self.beta, ctx.S)
        return oracle_policy(ctx.true_next_rate, traffic, ctx.S, ctx.tariff,
                             ctx.energy, ctx.epsilon, ctx.time)


def make_policy(spec: str, defaults: dict | None = None):
    """Build a policy from a CLI-style spec like ``static:500``,
    ``adaptive:0.2``, ``optimal``, ``predictive``, ``oracle``."""
    defaults = defaults or {}
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "static":
        if not arg:
            raise ValueError("static policy needs a server count, e.g. static:500")
        return StaticPolicy(int(arg))
    if name == "adaptive":
        return AdaptivePolicy(float(arg) if arg else defaults.get("beta", 0.2))
    if name == "optimal":
        return OptimalPolicy()
    if name == "predictive":
        return PredictivePolicy(
            beta=float(arg) if arg else defaults.get("beta", 0.2),
            alpha=defaults.get("alpha", 0.5),
            gamma=defaults.get("gamma", 0.5),
            refit_every=defaults.get("refit_every", 24),
            grid_step=defaults.get("grid_step", 0.05),
        )
    if name == "oracle":
        return OraclePolicy(mode=arg or defaults.get("oracle_mode", "optimal"),
                            beta=defaults.get("beta", 0.2))
    raise ValueError(f"unknown policy {spec!r}")
