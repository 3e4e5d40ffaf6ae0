"""Event-driven loss-system simulator with window-based reconfiguration.

The arrival and service streams are materialized up front from the
workload (so every policy sees the identical realization for a given
seed); each observation window is then processed by the kernel backend,
statistics are estimated from the elapsed window, and the policy picks
the server count for the next one.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from greenfarm import kernels
from greenfarm.economics import Tariff, mean_price
from greenfarm.energy import EnergyProfile
from greenfarm.policies import PolicyContext, PolicyDecision
from greenfarm.queueing import TrafficEstimate

__all__ = [
    "FarmState",
    "WindowRecord",
    "SimulationConfig",
    "RunResult",
    "RunSummary",
    "apply_reconfiguration",
    "estimate_window",
    "run",
    "summarize",
]


@dataclass
class FarmState:
    """Servers currently powered on and the jobs they are processing.

    ``comp``/``dur`` hold completion times and sizes of jobs on regular
    (admission-capacity) servers; ``pending_comp``/``pending_dur`` the
    jobs on servers marked for shutdown, which never admit new work but
    finish their current job first.
    """

    running: int
    comp: np.ndarray = field(default_factory=lambda: np.empty(0))
    dur: np.ndarray = field(default_factory=lambda: np.empty(0))
    pending_comp: np.ndarray = field(default_factory=lambda: np.empty(0))
    pending_dur: np.ndarray = field(default_factory=lambda: np.empty(0))
    clock: float = 0.0

    @property
    def busy(self) -> int:
        return len(self.comp)

    @property
    def pending_shutdown(self) -> int:
        return len(self.pending_comp)


@dataclass(frozen=True)
class WindowRecord:
    """Realized metrics of one observation window."""

    window_index: int
    window_start: float
    n_used: int
    arrivals: int
    admitted: int
    blocked: int
    completions: int
    lambda_hat: float
    mean_service_hat: float
    ca2_hat: float
    cs2_hat: float
    mean_busy: float
    busy_running_ratio: float
    energy_kwh: float
    revenue_dollars: float
    decision_n: int
    predicted_rho: float
    predicted_blocking: float
    predicted_revenue: float


@dataclass(frozen=True)
class SimulationConfig:
    S: int
    window_length: float
    duration: float
    energy: EnergyProfile
    tariff: Tariff
    epsilon: float = 0.01
    shutdown_mode: str = "idealized"  # or "drain"
    block_hours: float = 24.0

    def __post_init__(self):
        if self.S < 0:
            raise ValueError(f"S must be >= 0, got {self.S}")
        if self.window_length <= 0:
            raise ValueError(f"window_length must be > 0, got {self.window_length}")
        n_windows = self.duration / self.window_length
        if self.duration <= 0 or abs(n_windows - round(n_windows)) > 1e-9:
            raise ValueError(
                f"duration ({self.duration}) must be a positive multiple of "
                f"window_length ({self.window_length})"
            )
        if self.shutdown_mode not in ("idealized", "drain"):
            raise ValueError(f"shutdown_mode must be 'idealized' or 'drain', "
                             f"got {self.shutdown_mode!r}")


@dataclass
class RunResult:
    records: list
    summary: "RunSummary"
    policy_name: str


@dataclass(frozen=True)
class RunSummary:
    mean_revenue_per_hour: float
    revenue_ci_halfwidth: float | None
    total_revenue: float
    total_energy_kwh: float
    mean_utilization: float
    busy_running_ratio: float
    loss_fraction: float
    arrivals: int
    admitted: int
    completions: int
    cumulative_hours: np.ndarray
    cumulative_energy_kwh: np.ndarray
    cumulative_revenue: np.ndarray


def apply_reconfiguration(state: FarmState, n_new: int, S: int) -> FarmState:
    """Repartition in-service jobs for a new server count.

    Scale-ups are instantaneous.  On scale-down below the busy count the
    excess jobs move to pending-shutdown servers: they keep running to
    completion but admit nothing.  The jobs kept on regular servers are
    the ones completing soonest, which frees admission capacity as early
    as possible.  Previously pending servers are reabsorbed whenever the
    new count leaves room.
    """
    if not 0 <= n_new <= S:
        raise ValueError(f"n_new must be in [0, {S}], got {n_new}")
    comp = np.concatenate([state.comp, state.pending_comp])
    dur = np.concatenate([state.dur, state.pending_dur])
    order = np.argsort(comp, kind="stable")
    comp, dur = comp[order], dur[order]
    return FarmState(
        running=n_new,
        comp=comp[:n_new],
        dur=dur[:n_new],
        pending_comp=comp[n_new:],
        pending_dur=dur[n_new:],
        clock=state.clock,
    )


def estimate_window(arrival_times, completed_sizes, window_length,
                    previous: TrafficEstimate | None = None) -> TrafficEstimate:
    """Traffic estimates from one window's raw observations.

    The arrival rate is arrivals/window_length; interarrival and service
    SCVs are sample variance over squared sample mean.  Quantities that
    cannot be estimated from a degenerate window (too few arrivals or
    completions) are carried forward from ``previous``.
    """
    arrival_times = np.asarray(arrival_times, dtype=float)
    completed_sizes = np.asarray(completed_sizes, dtype=float)
    prev = previous or TrafficEstimate(rate=0.0, mean_service=1.0, ca2=1.0, cs2=1.0)

    rate = len(arrival_times) / window_length

    ca2 = prev.ca2
    if len(arrival_times) >= 3:
        gaps = np.diff(arrival_times)
        mean_gap = gaps.mean()
        if mean_gap > 0:
            ca2 = gaps.var(ddof=1) / mean_gap**2

    mean_service = prev.mean_service
    cs2 = prev.cs2
    if len(completed_sizes) >= 1 and completed_sizes.mean() > 0:
        mean_service = completed_sizes.mean()
        if len(completed_sizes) >= 2:
            cs2 = completed_sizes.var(ddof=1) / mean_service**2

    return TrafficEstimate(rate=rate, mean_service=mean_service, ca2=ca2, cs2=cs2)


def run(policy, workload, config: SimulationConfig) -> RunResult:
    """Simulate one policy against one workload realization.

    The policy decides the server count once per window from the
    statistics of the elapsed window (the first decision uses the
    workload's nominal estimate).  Energy integrates the busy/idle draw
    of powered-on servers over time, PUE applied once; revenue accrues
    the per-job charge at each completion and subtracts the energy cost
    at the (possibly time-varying) electricity price.
    """
    arr, svc = workload.generate(config.duration)
    profile = config.energy
    delta_busy = profile.busy_watts - profile.idle_watts
    n_windows = round(config.duration / config.window_length)

    estimate = workload.nominal_estimate()
    ctx0 = PolicyContext(S=config.S, tariff=config.tariff, energy=profile,
                         time=0.0, epsilon=config.epsilon,
                         true_next_rate=workload.mean_rate(0.0, config.window_length))
    decision = policy.decide(estimate, ctx0)
    state = apply_reconfiguration(FarmState(running=0), decision.n, config.S)

    records = []
    for k in range(n_windows):
        t0 = k * config.window_length
        t1 = t0 + config.window_length
        i0 = np.searchsorted(arr, t0, side="left")
        i1 = np.searchsorted(arr, t1, side="left")
        window_arr = arr[i0:i1]

        (blocked, admitted, completions, completed_sizes, busy_time,
         left_comp, left_dur) = kernels.simulate_window(
            window_arr, svc[i0:i1], state.comp, state.dur, state.running, t0, t1)

        pend_done = state.pending_comp <= t1
        pend_busy_time = float(np.minimum(state.pending_comp, t1).sum()
                               - t0 * len(state.pending_comp))
        pend_sizes = state.pending_dur[pend_done]
        completions += int(pend_done.sum())
        all_completed = np.concatenate([completed_sizes, pend_sizes])

        # energy: powered-on servers idle draw, plus busy uplift; pending
        # servers keep drawing busy power only in "drain" mode
        it_wh = state.running * profile.idle_watts * config.window_length
        it_wh += busy_time * delta_busy
        if config.shutdown_mode == "drain":
            it_wh += pend_busy_time * profile.busy_watts
        energy_kwh = it_wh * profile.pue / 1000.0

        price = mean_price(config.tariff, t0, t1)
        income = config.tariff.charge_rate * float(all_completed.sum())
        cost = price * config.tariff.indirect_cost_multiplier * energy_kwh
        revenue = income - cost

        estimate = estimate_window(window_arr, all_completed,
                                   config.window_length, previous=estimate)

        mean_busy = (busy_time + pend_busy_time) / config.window_length
        ratio = (busy_time / (state.running * config.window_length)
                 if state.running > 0 else 0.0)

        records.append(WindowRecord(
            window_index=k, window_start=t0, n_used=state.running,
            arrivals=len(window_arr), admitted=admitted, blocked=blocked,
            completions=completions, lambda_hat=estimate.rate,
            mean_service_hat=estimate.mean_service, ca2_hat=estimate.ca2,
            cs2_hat=estimate.cs2, mean_busy=mean_busy,
            busy_running_ratio=ratio, energy_kwh=energy_kwh,
            revenue_dollars=revenue, decision_n=decision.n,
            predicted_rho=decision.predicted_rho,
            predicted_blocking=decision.predicted_blocking,
            predicted_revenue=decision.predicted_revenue,
        ))

        state = FarmState(running=state.running, comp=left_comp, dur=left_dur,
                          pending_comp=state.pending_comp[~pend_done],
                          pending_dur=state.pending_dur[~pend_done], clock=t1)
        if k + 1 < n_windows:
            ctx = PolicyContext(
                S=config.S, tariff=config.tariff, energy=profile, time=t1,
                epsilon=config.epsilon,
                true_next_rate=workload.mean_rate(t1, t1 + config.window_length))
            decision = policy.decide(estimate, ctx)
            state = apply_reconfiguration(state, decision.n, config.S)

    summary = summarize(records, config)
    return RunResult(records=records, summary=summary,
                     policy_name=getattr(policy, "name", type(policy).__name__))


def summarize(records, config: SimulationConfig) -> RunSummary:
    """Aggregate per-window records into run-level metrics.

    Revenue samples are per-block (default 24 h) means; the confidence
    interval uses Student's t with (blocks - 1) degrees of freedom and is
    None when fewer than 2 blocks are available.
    """
    revenue = np.array([r.revenue_dollars for r in records])
    energy = np.array([r.energy_kwh for r in records])
    arrivals = sum(r.arrivals for r in records)
    blocked = sum(r.blocked for r in records)

    per_block = max(1, round(config.block_hours / config.window_length))
    n_blocks = len(records) // per_block
    ci = None
    if n_blocks >= 2:
        blocks = revenue[:n_blocks * per_block].reshape(n_blocks, per_block)
        block_rates = blocks.sum(axis=1) / (per_block * config.window_length)
        t_crit = sps.t.ppf(0.975, n_blocks - 1)
        ci = float(t_crit * block_rates.std(ddof=1) / math.sqrt(n_blocks))

    running_time = sum(r.n_used for r in records) * config.window_length
    busy_time = sum(r.busy_running_ratio * r.n_used for r in records) * config.window_length
    hours = np.array([r.window_start + config.window_length for r in records])

    return RunSummary(
        mean_revenue_per_hour=float(revenue.sum() / config.duration),
        revenue_ci_halfwidth=ci,
        total_revenue=float(revenue.sum()),
        total_energy_kwh=float(energy.sum()),
        mean_utilization=float(np.mean([r.mean_busy for r in records]) / config.S)
        if config.S else 0.0,
        busy_running_ratio=float(busy_time / running_time) if running_time > 0 else 0.0,
        loss_fraction=float(blocked / arrivals) if arrivals else 0.0,
        arrivals=arrivals,
        admitted=sum(r.admitted for r in records),
        completions=sum(r.completions for r in records),
        cumulative_hours=hours,
        cumulative_energy_kwh=np.cumsum(energy),
        cumulative_revenue=np.cumsum(revenue),
    )
