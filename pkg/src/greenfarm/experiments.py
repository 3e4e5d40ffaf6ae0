"""Experiment suites: analytic revenue sweeps, stationary policy
comparisons, high-variability runs and trace-driven non-stationary runs.

Each suite writes raw per-window CSVs, a ``summary.json`` and a
machine-checkable ``assertions.json`` into its output directory.
Re-running with the same seed reproduces the files byte for byte.
"""

import dataclasses
import json
import math
import os

import numpy as np

from greenfarm import queueing
from greenfarm.config import AppConfig
from greenfarm.economics import revenue_rate
from greenfarm.energy import average_power, busy_servers
from greenfarm.policies import busy_step_cost, make_policy
from greenfarm.queueing import TrafficEstimate
from greenfarm.simulator import SimulationConfig, WindowRecord, run
from greenfarm.workload import (WorkloadGenerator, WorkloadSpec, scale_trace,
                                synthetic_trace, load_trace)

__all__ = [
    "revenue_curve",
    "sweep_revenue_vs_n",
    "compare_policies",
    "run_variability",
    "run_nonstationary",
    "simulate_single",
]

_RECORD_FIELDS = [f.name for f in dataclasses.fields(WindowRecord)]


# --------------------------------------------------------------------------
# output helpers

def _write_records_csv(path, records, extra_cols=None):
    extra_cols = extra_cols or {}
    header = _RECORD_FIELDS + list(extra_cols)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i, rec in enumerate(records):
            row = [repr(getattr(rec, name)) for name in _RECORD_FIELDS]
            row += [repr(extra_cols[name][i]) for name in extra_cols]
            fh.write(",".join(row) + "\n")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary_dict(summary):
    return {
        "mean_revenue_per_hour": summary.mean_revenue_per_hour,
        "revenue_ci_halfwidth": summary.revenue_ci_halfwidth,
        "total_revenue": summary.total_revenue,
        "total_energy_kwh": summary.total_energy_kwh,
        "mean_utilization": summary.mean_utilization,
        "busy_running_ratio": summary.busy_running_ratio,
        "loss_fraction": summary.loss_fraction,
        "arrivals": summary.arrivals,
        "admitted": summary.admitted,
        "completions": summary.completions,
    }


def _finish(out_dir, summary_payload, assertions):
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "summary.json"), summary_payload)
    all_passed = all(a["passed"] for a in assertions.values())
    _write_json(os.path.join(out_dir, "assertions.json"),
                {"assertions": assertions, "all_passed": all_passed})
    return all_passed


def _assertion(passed, detail):
    return {"passed": bool(passed), "detail": detail}


def _slug(policy_spec):
    return policy_spec.replace(":", "-").replace(".", "p")


def _load_tag(load):
    return f"{load:g}".replace(".", "p")


# --------------------------------------------------------------------------
# analytic sweep

def revenue_curve(traffic: TrafficEstimate, S, tariff, energy) -> np.ndarray:
    """Predicted revenue rate for every n in [0, S]."""
    rho = traffic.rho
    z = queueing.peakedness(traffic).z
    out = np.empty(S + 1)
    b = 1.0
    for n in range(S + 1):
        if n > 0:
            if z == 1.0:
                b = queueing.kernels.erlang_b_steps(b, float(n - 1), 1, rho)
            else:
                b = queueing.erlang_b_fractional(n / z, rho / z)
        p = 1.0 if n == 0 else b
        tput = traffic.rate * (1.0 - p)
        m_bar = min(n, busy_servers(tput, traffic.mean_service))
        power = average_power(n, m_bar, energy)
        out[n] = revenue_rate(tput, traffic.mean_service, power, tariff)
    return out


def _is_unimodal(values, tol=1e-9):
    """True when the sequence rises (weakly) and then falls (weakly)."""
    falling = False
    for prev, cur in zip(values, values[1:]):
        if cur > prev + tol:
            if falling:
                return False
        elif cur < prev - tol:
            falling = True
    return True


def sweep_revenue_vs_n(cfg: AppConfig, loads, out_dir):
    """Analytic revenue-vs-n sweep across load fractions."""
    S = cfg.total_servers
    ms = cfg.workload.mean_service_hours
    os.makedirs(out_dir, exist_ok=True)

    curves = {}
    for load in loads:
        rate = load * S / ms
        traffic = TrafficEstimate(rate=rate, mean_service=ms)
        curves[load] = revenue_curve(traffic, S, cfg.tariff, cfg.energy)

    with open(os.path.join(out_dir, "sweep.csv"), "w") as fh:
        fh.write("load,n,revenue_per_hour\n")
        for load in loads:
            for n, r in enumerate(curves[load]):
                fh.write(f"{load!r},{n},{r!r}\n")

    argmaxes = {load: int(np.argmax(curves[load])) for load in loads}
    peaks = {load: float(curves[load].max()) for load in loads}

    sorted_loads = sorted(loads)
    am = [argmaxes[x] for x in sorted_loads]
    pk = [peaks[x] for x in sorted_loads]
    # The ceil() in the expected-busy-server count quantizes the energy term,
    # so R(n) carries a sawtooth of at most one busy server's carbon cost.
    # Unimodality only holds up to that granularity.
    quantum = busy_step_cost(cfg.tariff, cfg.energy)
    assertions = {
        "each_curve_unimodal": _assertion(
            all(_is_unimodal(curves[x], tol=quantum) for x in loads),
            "revenue is unimodal in n up to one busy server's energy cost"),
        "argmax_increases_with_load": _assertion(
            all(b > a for a, b in zip(am, am[1:])),
            f"optimal n per load: {dict(zip(sorted_loads, am))}"),
        "peak_revenue_increases_with_load": _assertion(
            all(b > a for a, b in zip(pk, pk[1:])),
            f"peak revenue per load: {dict(zip(sorted_loads, pk))}"),
        "zero_revenue_at_n0": _assertion(
            all(curves[x][0] == 0.0 for x in loads),
            "running no servers earns and costs nothing"),
    }
    payload = {"experiment": "sweep", "S": S,
               "argmax_n": {repr(k): v for k, v in argmaxes.items()},
               "peak_revenue": {repr(k): v for k, v in peaks.items()}}
    passed = _finish(out_dir, payload, assertions)
    return {"curves": curves, "argmax": argmaxes, "passed": passed}


# --------------------------------------------------------------------------
# stationary policy comparison

def _stationary_spec(cfg: AppConfig, load, seed=None) -> WorkloadSpec:
    w = cfg.workload
    rate = load * cfg.total_servers / w.mean_service_hours
    return WorkloadSpec(
        rate=rate, mean_service=w.mean_service_hours,
        arrival_dist=w.arrival_distribution, service_dist=w.service_distribution,
        ca2=w.ca2, cs2=w.cs2, seed=w.seed if seed is None else seed)


def _sim_config(cfg: AppConfig, window_hours, duration_hours) -> SimulationConfig:
    return SimulationConfig(
        S=cfg.total_servers, window_length=window_hours,
        duration=duration_hours, energy=cfg.energy, tariff=cfg.tariff,
        epsilon=cfg.policy.epsilon, shutdown_mode=cfg.experiment.shutdown_mode)


def _run_grid(cfg, policy_specs, loads, out_dir, spec_for_load,
              window_hours, duration_hours):
    """One run per (policy, load), common random numbers per load."""
    os.makedirs(out_dir, exist_ok=True)
    sim_cfg = _sim_config(cfg, window_hours, duration_hours)
    defaults = cfg.policy_defaults_dict()
    results = {}
    for load in loads:
        workload = WorkloadGenerator(spec_for_load(load))
        for pspec in policy_specs:
            policy = make_policy(pspec, defaults)
            result = run(policy, workload, sim_cfg)
            results[(pspec, load)] = result
            name = f"{_slug(pspec)}_{_load_tag(load)}.csv"
            _write_records_csv(os.path.join(out_dir, name), result.records)
    return results


def compare_policies(cfg: AppConfig, policy_specs, loads, out_dir,
                     window_hours=None, duration_hours=None):
    """Simulate every policy on every load with shared workload seeds."""
    window_hours = window_hours or cfg.experiment.window_hours
    duration_hours = duration_hours or cfg.experiment.duration_hours
    results = _run_grid(cfg, policy_specs, loads, out_dir,
                        lambda load: _stationary_spec(cfg, load),
                        window_hours, duration_hours)

    payload = {"experiment": "compare", "window_hours": window_hours,
               "duration_hours": duration_hours, "policies": {}}
    for (pspec, load), result in results.items():
        payload["policies"].setdefault(pspec, {})[repr(load)] = \
            _summary_dict(result.summary)

    S = cfg.total_servers
    full_static = f"static:{S}"
    assertions = {}

    light = [x for x in loads if x <= 0.05]
    if full_static in policy_specs and light:
        vals = {x: results[(full_static, x)].summary.mean_revenue_per_hour
                for x in light}
        assertions["static_full_negative_under_light_load"] = _assertion(
            all(v < 0 for v in vals.values()),
            f"static:{S} mean revenue under light load: {vals}")

    mid = [x for x in loads if 0.3 - 1e-9 <= x <= 0.9 + 1e-9]
    if "optimal" in policy_specs and any(p.startswith("adaptive") for p in policy_specs):
        adaptive = next(p for p in policy_specs if p.startswith("adaptive"))
        gaps = {}
        for x in mid:
            opt = results[("optimal", x)].summary.mean_revenue_per_hour
            ada = results[(adaptive, x)].summary.mean_revenue_per_hour
            gaps[x] = (opt - ada) / abs(opt) if opt else 0.0
        assertions["adaptive_within_5pct_of_optimal"] = _assertion(
            all(g <= 0.05 for g in gaps.values()),
            f"relative revenue gap optimal vs adaptive: {gaps}")
        ratios = {x: results[(adaptive, x)].summary.busy_running_ratio for x in mid}
        assertions["adaptive_busy_running_ratio_high"] = _assertion(
            all(r >= 0.9 for r in ratios.values()),
            f"adaptive busy/running ratio: {ratios}")

    statics = [p for p in policy_specs if p.startswith("static")]
    if "optimal" in policy_specs and statics:
        ok, worst = True, []
        for x in loads:
            opt = results[("optimal", x)].summary
            for st in statics:
                sts = results[(st, x)].summary
                slack = (opt.revenue_ci_halfwidth or 0) + (sts.revenue_ci_halfwidth or 0)
                if opt.mean_revenue_per_hour < sts.mean_revenue_per_hour - slack:
                    ok = False
                    worst.append((st, x))
        assertions["optimal_at_least_as_good_as_statics"] = _assertion(
            ok, f"violations (policy, load): {worst}" if worst else
            "optimal >= static revenues up to CI overlap at every load")

    passed = _finish(out_dir, payload, assertions)
    return {"results": results, "passed": passed}


# --------------------------------------------------------------------------
# high-variability scenario

def run_variability(cfg: AppConfig, loads, out_dir, ca2=2.0, cs2=20.0,
                    policy_specs=("adaptive:0.2", "optimal"),
                    scv_sample_size=1_000_000):
    """Log-Normal traffic versus the Markovian baseline at matched loads."""
    os.makedirs(out_dir, exist_ok=True)
    w = cfg.workload
    window = cfg.experiment.window_hours
    duration = cfg.experiment.duration_hours

    def lognormal_spec(load):
        return WorkloadSpec(
            rate=load * cfg.total_servers / w.mean_service_hours,
            mean_service=w.mean_service_hours,
            arrival_dist="lognormal", service_dist="lognormal",
            ca2=ca2, cs2=cs2, seed=w.seed)

    markov = _run_grid(cfg, policy_specs, loads, os.path.join(out_dir, "markovian"),
                       lambda load: _stationary_spec(cfg, load), window, duration)
    heavy = _run_grid(cfg, policy_specs, loads, os.path.join(out_dir, "lognormal"),
                      lognormal_spec, window, duration)

    payload = {"experiment": "variability", "ca2": ca2, "cs2": cs2, "policies": {}}
    for key, result in heavy.items():
        pspec, load = key
        payload["policies"].setdefault(pspec, {})[repr(load)] = {
            "lognormal": _summary_dict(result.summary),
            "markovian": _summary_dict(markov[key].summary),
        }

    worse = {}
    for key in heavy:
        worse[f"{key[0]}@{key[1]:g}"] = (
            heavy[key].summary.mean_revenue_per_hour
            - markov[key].summary.mean_revenue_per_hour)
    assertions = {
        "lognormal_revenues_below_markovian": _assertion(
            all(v < 0 for v in worse.values()),
            f"revenue delta (lognormal - markovian) per policy@load: {worse}"),
    }

    # The generators must actually hit the target SCVs.  The plain
    # second-moment estimator is hopeless for cs2 = 20 (its own relative
    # standard error is ~40% at a million draws), so measure the SCV in the
    # log domain, where it is exp(var(log X)) - 1 for this family and the
    # estimator error is a fraction of a percent.
    gen = WorkloadGenerator(lognormal_spec(loads[0]))
    gaps, services = gen.sample_moment_probe(scv_sample_size)
    ca2_hat = math.expm1(np.log(gaps).var(ddof=1))
    cs2_hat = math.expm1(np.log(services).var(ddof=1))
    assertions["generator_scv_on_target"] = _assertion(
        abs(ca2_hat - ca2) / ca2 <= 0.10 and abs(cs2_hat - cs2) / cs2 <= 0.10,
        f"sample ca2={ca2_hat:.4f} (target {ca2}), "
        f"sample cs2={cs2_hat:.4f} (target {cs2})")

    passed = _finish(out_dir, payload, assertions)
    return {"heavy": heavy, "markovian": markov, "passed": passed}


# --------------------------------------------------------------------------
# trace-driven non-stationary scenario

def run_nonstationary(cfg: AppConfig, out_dir, trace_path=None,
                      policy_specs=None):
    """One-month trace with hourly rates and sub-hourly reconfiguration."""
    os.makedirs(out_dir, exist_ok=True)
    S = cfg.total_servers
    w = cfg.workload
    x = cfg.experiment
    policy_specs = policy_specs or [f"static:{S}", "adaptive:0.2",
                                    "predictive", "oracle"]

    if trace_path is None:
        trace = scale_trace(synthetic_trace(x.trace_hours, seed=w.seed),
                            x.trace_mean_load, S, w.mean_service_hours)
    else:
        trace = load_trace(trace_path, x.trace_mean_load, S, w.mean_service_hours)
    duration = math.floor(trace.end / x.trace_window_hours) * x.trace_window_hours

    spec = WorkloadSpec(rate=trace, mean_service=w.mean_service_hours, seed=w.seed)
    workload = WorkloadGenerator(spec)
    sim_cfg = _sim_config(cfg, x.trace_window_hours, duration)
    defaults = cfg.policy_defaults_dict()

    results = {}
    for pspec in policy_specs:
        result = run(make_policy(pspec, defaults), workload, sim_cfg)
        results[pspec] = result
        extra = {
            "cumulative_energy_kwh": result.summary.cumulative_energy_kwh,
            "cumulative_revenue": result.summary.cumulative_revenue,
        }
        _write_records_csv(os.path.join(out_dir, f"{_slug(pspec)}.csv"),
                           result.records, extra_cols=extra)

    payload = {"experiment": "trace", "duration_hours": duration,
               "mean_load": x.trace_mean_load,
               "policies": {p: _summary_dict(r.summary)
                            for p, r in results.items()}}

    full_static = next((p for p in policy_specs if p.startswith("static")), None)
    dynamics = [p for p in policy_specs if not p.startswith("static")]
    assertions = {}
    if full_static and dynamics:
        cum_static = results[full_static].summary.cumulative_energy_kwh
        energy_ok = all(
            np.all(results[p].summary.cumulative_energy_kwh < cum_static)
            for p in dynamics)
        assertions["dynamic_cumulative_energy_below_static"] = _assertion(
            energy_ok, "every dynamic policy uses less cumulative energy than "
                       "the all-on static policy at every window boundary")
        static_util = results[full_static].summary.busy_running_ratio
        dyn_utils = {p: results[p].summary.busy_running_ratio for p in dynamics}
        assertions["static_utilization_below_dynamics"] = _assertion(
            all(static_util < u for u in dyn_utils.values()),
            f"static busy/running {static_util:.3f} vs dynamic {dyn_utils}")
    if len(dynamics) >= 2:
        totals = {p: results[p].summary.total_revenue for p in dynamics}
        hi, lo = max(totals.values()), min(totals.values())
        spread = (hi - lo) / abs(hi) if hi else 0.0
        assertions["dynamic_cumulative_revenues_close"] = _assertion(
            spread <= 0.05, f"cumulative revenue spread {spread:.4f}: {totals}")

    passed = _finish(out_dir, payload, assertions)
    return {"results": results, "trace": trace, "passed": passed}


# --------------------------------------------------------------------------
# single run (CLI `simulate`)

def simulate_single(cfg: AppConfig, policy_spec, load, out_dir,
                    window_hours=None, duration_hours=None):
    window_hours = window_hours or cfg.experiment.window_hours
    duration_hours = duration_hours or cfg.experiment.duration_hours
    os.makedirs(out_dir, exist_ok=True)
    workload = WorkloadGenerator(_stationary_spec(cfg, load))
    sim_cfg = _sim_config(cfg, window_hours, duration_hours)
    result = run(make_policy(policy_spec, cfg.policy_defaults_dict()),
                 workload, sim_cfg)
    _write_records_csv(
        os.path.join(out_dir, f"{_slug(policy_spec)}_{_load_tag(load)}.csv"),
        result.records)
    _write_json(os.path.join(out_dir, "summary.json"),
                {"experiment": "simulate", "policy": policy_spec, "load": load,
                 **_summary_dict(result.summary)})
    return result
