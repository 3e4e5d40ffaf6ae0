"""Energy-aware server allocation for cloud farms.

Analytic loss-system core, per-window allocation policies, an
event-driven simulator and experiment suites comparing static and
dynamic provisioning under stationary and trace-driven demand.
"""

__version__ = "0.1.0"

from greenfarm.economics import Tariff, price_at, revenue_rate
from greenfarm.energy import EnergyProfile, average_power, busy_servers
from greenfarm.policies import (AdaptivePolicy, ForecastState, OptimalPolicy,
                                OraclePolicy, PolicyDecision, PredictivePolicy,
                                StaticPolicy, adaptive_policy, optimal_policy,
                                static_policy)
from greenfarm.queueing import (PeakednessState, TrafficEstimate,
                                blocking_probability, erlang_b,
                                erlang_b_fractional, peakedness,
                                peakedness_update, throughput)
from greenfarm.simulator import SimulationConfig, run, summarize
from greenfarm.workload import (RateTrace, WorkloadGenerator, WorkloadSpec,
                                load_trace, synthetic_trace)

__all__ = [
    "Tariff", "price_at", "revenue_rate",
    "EnergyProfile", "average_power", "busy_servers",
    "AdaptivePolicy", "ForecastState", "OptimalPolicy", "OraclePolicy",
    "PolicyDecision", "PredictivePolicy", "StaticPolicy",
    "adaptive_policy", "optimal_policy", "static_policy",
    "PeakednessState", "TrafficEstimate", "blocking_probability",
    "erlang_b", "erlang_b_fractional", "peakedness", "peakedness_update",
    "throughput",
    "SimulationConfig", "run", "summarize",
    "RateTrace", "WorkloadGenerator", "WorkloadSpec", "load_trace",
    "synthetic_trace",
]
