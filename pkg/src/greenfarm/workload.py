"""Arrival and service process generation.

Stationary Poisson or Log-Normal streams with target mean and SCV, and
non-stationary Poisson arrivals driven by an hourly rate trace (thinning
against the trace maximum).  Arrival and service draws come from
separate seeded substreams, so two runs with the same seed see the
identical workload realization regardless of which policy is simulated.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from greenfarm.queueing import TrafficEstimate

__all__ = [
    "lognormal_params",
    "RateTrace",
    "WorkloadSpec",
    "WorkloadGenerator",
    "load_trace",
    "scale_trace",
    "synthetic_trace",
    "save_trace",
]

_CHUNK = 16384


def lognormal_params(mean: float, scv: float):
    """(mu, sigma) of a Log-Normal with the given mean and squared
    coefficient of variation: scv = exp(sigma^2) - 1 exactly."""
    if mean <= 0 or scv <= 0:
        raise ValueError(f"mean and scv must be > 0, got mean={mean}, scv={scv}")
    sigma2 = math.log1p(scv)
    return math.log(mean) - sigma2 / 2.0, math.sqrt(sigma2)


@dataclass(frozen=True)
class RateTrace:
    """Piecewise-constant arrival-rate trace.

    ``times`` are segment start hours (strictly increasing); ``rates``
    raw per-segment volumes; ``scale`` converts raw volume to jobs/hour.
    The last segment's width repeats the previous gap (1 h for a single
    row) and its rate holds beyond the end of the trace.
    """

    times: np.ndarray
    rates: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if len(times) == 0:
            raise ValueError("trace must contain at least one breakpoint")
        if len(times) != len(rates):
            raise ValueError("times and rates must have equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trace times must be strictly increasing")
        if np.any(rates < 0):
            raise ValueError("trace rates must be >= 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rates", rates)

    @property
    def end(self) -> float:
        gap = self.times[-1] - self.times[-2] if len(self.times) > 1 else 1.0
        return float(self.times[-1] + gap)

    @property
    def max_rate(self) -> float:
        return float(self.rates.max() * self.scale)

    def rate_at(self, t):
        """Effective arrival rate (jobs/hour) at time(s) t; holds the
        first/last segment outside the trace."""
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1,
                      0, len(self.times) - 1)
        return self.rates[idx] * self.scale

    def mean_rate(self, t0: float, t1: float) -> float:
        """Time-weighted average effective rate over [t0, t1]."""
        if t1 <= t0:
            return float(self.rate_at(t0))
        cuts = self.times[(self.times > t0) & (self.times < t1)]
        edges = np.concatenate([[t0], cuts, [t1]])
        widths = np.diff(edges)
        return float(np.sum(self.rate_at(edges[:-1]) * widths) / (t1 - t0))


@dataclass(frozen=True)
class WorkloadSpec:
    """Distributional description of one workload scenario."""

    rate: "float | RateTrace"
    mean_service: float
    arrival_dist: str = "exponential"
    service_dist: str = "exponential"
    ca2: float = 1.0
    cs2: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mean_service <= 0:
            raise ValueError(f"mean_service must be > 0, got {self.mean_service}")
        for name, dist, scv in (("arrival", self.arrival_dist, self.ca2),
                                ("service", self.service_dist, self.cs2)):
            if dist not in ("exponential", "lognormal"):
                raise ValueError(f"unknown {name} distribution {dist!r}")
            if dist == "lognormal" and scv <= 0:
                raise ValueError(f"lognormal {name} SCV must be > 0, got {scv}")
        if isinstance(self.rate, RateTrace):
            if self.arrival_dist != "exponential":
                raise ValueError("trace-driven workloads support only "
                                 "exponential (Poisson) arrivals")
        elif self.rate < 0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")

    @property
    def is_trace(self) -> bool:
        return isinstance(self.rate, RateTrace)


class EndOfTrace(Exception):
    """No further arrivals are possible on this trace."""


class WorkloadGenerator:
    """Samples arrival/service processes for one WorkloadSpec.

    ``generate`` materializes a full run deterministically from the seed
    (fresh substreams per call); ``next_interarrival`` and
    ``next_service_time`` draw incrementally from persistent streams.
    """

    def __init__(self, spec: WorkloadSpec):
        self.spec = spec
        arr_ss, svc_ss = np.random.SeedSequence(spec.seed).spawn(2)
        self._arr_rng = np.random.default_rng(arr_ss)
        self._svc_rng = np.random.default_rng(svc_ss)

    # -- incremental draws -------------------------------------------------

    def _draw_gaps(self, rng, rate, size):
        if self.spec.arrival_dist == "lognormal":
            mu, sigma = lognormal_params(1.0 / rate, self.spec.ca2)
            return rng.lognormal(mu, sigma, size)
        return rng.exponential(1.0 / rate, size)

    def _draw_services(self, rng, size):
        if self.spec.service_dist == "lognormal":
            mu, sigma = lognormal_params(self.spec.mean_service, self.spec.cs2)
            return rng.lognormal(mu, sigma, size)
        return rng.exponential(self.spec.mean_service, size)

    def next_service_time(self) -> float:
        """One service-time draw (hours)."""
        return float(self._draw_services(self._svc_rng, 1)[0])

    def next_interarrival(self, current_time: float = 0.0) -> float:
        """Time from ``current_time`` to the next arrival (hours).

        For trace-driven workloads this thins candidate arrivals against
        the trace maximum; zero-rate stretches are skipped by jumping to
        the next positive-rate breakpoint.  Raises :class:`EndOfTrace`
        when no further arrival is possible.
        """
        spec = self.spec
        if not spec.is_trace:
            if spec.rate == 0:
                raise EndOfTrace("stationary workload with zero rate")
            return float(self._draw_gaps(self._arr_rng, spec.rate, 1)[0])

        trace = spec.rate
        lam_max = trace.max_rate
        if lam_max == 0:
            raise EndOfTrace("trace has no positive-rate segment")
        t = current_time
        while True:
            if trace.rate_at(t) == 0 and t < trace.end:
                later = trace.times[(trace.times > t)
                                    & (trace.rates * trace.scale > 0)]
                if len(later) == 0:
                    raise EndOfTrace("no positive-rate segment after current time")
                t = float(later[0])
            t += float(self._arr_rng.exponential(1.0 / lam_max))
            if self._arr_rng.random() * lam_max < trace.rate_at(t):
                return t - current_time

    # -- bulk generation ---------------------------------------------------

    def generate(self, duration: float):
        """Arrival times and aligned service durations over [0, duration).

        Deterministic in the spec seed; repeated calls return identical
        arrays.
        """
        arr_ss, svc_ss = np.random.SeedSequence(self.spec.seed).spawn(2)
        arr_rng = np.random.default_rng(arr_ss)
        svc_rng = np.random.default_rng(svc_ss)

        if self.spec.is_trace:
            times = self._generate_trace_arrivals(arr_rng, duration)
        else:
            times = self._generate_stationary_arrivals(arr_rng, duration)
        services = self._draw_services(svc_rng, len(times))
        return times, services

    def _generate_stationary_arrivals(self, rng, duration):
        rate = self.spec.rate
        if rate == 0:
            return np.empty(0)
        chunks = []
        t = 0.0
        while t < duration:
            gaps = self._draw_gaps(rng, rate, _CHUNK)
            times = t + np.cumsum(gaps)
            chunks.append(times)
            t = times[-1]
        times = np.concatenate(chunks)
        return times[times < duration]

    def _generate_trace_arrivals(self, rng, duration):
        trace = self.spec.rate
        lam_max = trace.max_rate
        if lam_max == 0:
            return np.empty(0)
        chunks = []
        t = 0.0
        while t < duration:
            gaps = rng.exponential(1.0 / lam_max, _CHUNK)
            times = t + np.cumsum(gaps)
            accept = rng.random(_CHUNK) * lam_max < trace.rate_at(times)
            chunks.append(times[accept])
            t = times[-1]
        times = np.concatenate(chunks)
        return times[times < duration]

    def sample_moment_probe(self, size: int):
        """Fresh interarrival and service samples for distribution checks.

        Only meaningful for stationary workloads (trace interarrivals are
        not identically distributed).
        """
        if self.spec.is_trace:
            raise ValueError("moment probe requires a stationary workload")
        if self.spec.rate == 0:
            raise ValueError("moment probe requires a positive arrival rate")
        arr_ss, svc_ss = np.random.SeedSequence(self.spec.seed).spawn(2)
        gaps = self._draw_gaps(np.random.default_rng(arr_ss), self.spec.rate, size)
        services = self._draw_services(np.random.default_rng(svc_ss), size)
        return gaps, services

    # -- summaries used by the simulator -----------------------------------

    def mean_rate(self, t0: float, t1: float) -> float:
        """True average arrival rate over [t0, t1] (the oracle's input)."""
        if self.spec.is_trace:
            return self.spec.rate.mean_rate(t0, t1)
        return float(self.spec.rate)

    def nominal_estimate(self) -> TrafficEstimate:
        """Long-run traffic description, used to seed the first decision."""
        if self.spec.is_trace:
            trace = self.spec.rate
            rate = trace.mean_rate(float(trace.times[0]), trace.end)
        else:
            rate = float(self.spec.rate)
        return TrafficEstimate(
            rate=rate,
            mean_service=self.spec.mean_service,
            ca2=self.spec.ca2 if self.spec.arrival_dist == "lognormal" else 1.0,
            cs2=self.spec.cs2 if self.spec.service_dist == "lognormal" else 1.0,
        )


def scale_trace(trace: RateTrace, target_mean_load: float, S: int,
                mean_service: float) -> RateTrace:
    """Rescale a trace so its time-averaged offered load is target_mean_load * S."""
    if not 0 < target_mean_load:
        raise ValueError(f"target_mean_load must be > 0, got {target_mean_load}")
    base = replace(trace, scale=1.0)
    raw_mean = base.mean_rate(float(base.times[0]), base.end)
    if raw_mean == 0:
        raise ValueError("trace has zero mean volume; cannot scale")
    scale = target_mean_load * S / (mean_service * raw_mean)
    return replace(trace, scale=scale)


def load_trace(path, target_mean_load: float, S: int, mean_service: float) -> RateTrace:
    """Read an ``hour,rate`` CSV trace and scale it to a target mean load."""
    times, rates = [], []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty trace file")
    start = 1 if lines[0].strip().lower().replace(" ", "") == "hour,rate" else 0
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'hour,rate', got {line!r}")
        try:
            hour, rate = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if rate < 0:
            raise ValueError(f"{path}:{lineno}: negative rate {rate}")
        if times and hour <= times[-1]:
            raise ValueError(f"{path}:{lineno}: non-monotone hour {hour}")
        times.append(hour)
        rates.append(rate)
    if not times:
        raise ValueError(f"{path}: no data rows")
    trace = RateTrace(np.array(times), np.array(rates))
    return scale_trace(trace, target_mean_load, S, mean_service)


def synthetic_trace(hours: int = 720, seed: int = 0) -> RateTrace:
    """Synthetic demand trace with monthly, weekly and daily patterns plus
    random spikes, normalized to unit mean volume."""
    if hours < 2:
        raise ValueError(f"need at least 2 hours, got {hours}")
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    t = np.arange(hours, dtype=float)
    raw = (1.0
           + 0.25 * np.sin(2 * np.pi * t / 720.0)
           + 0.20 * np.sin(2 * np.pi * t / 168.0 + 0.7)
           + 0.35 * np.sin(2 * np.pi * t / 24.0 + 1.3))
    raw += rng.normal(0.0, 0.03, hours)
    n_spikes = max(1, hours // 120)
    for start in rng.integers(0, hours, n_spikes):
        width = int(rng.integers(1, 4))
        raw[start:start + width] *= rng.uniform(1.5, 2.5)
    raw = np.clip(raw, 0.05, None)
    raw /= raw.mean()
    return RateTrace(times=t, rates=raw)


def save_trace(trace: RateTrace, path):
    """Write a trace as an ``hour,rate`` CSV (raw volumes, scale not applied)."""
    with open(path, "w") as fh:
        fh.write("hour,rate\n")
        for t, r in zip(trace.times, trace.rates):
            fh.write(f"{float(t)!r},{float(r)!r}\n")
