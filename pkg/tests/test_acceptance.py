"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
as they go).  The heavyweight experiment runs are shared module-scoped
fixtures so the whole file stays in the minutes range.
"""

import math
import time

import numpy as np
import pytest
import scipy.stats

from greenfarm.config import build_config
from greenfarm.economics import Tariff
from greenfarm.energy import EnergyProfile
from greenfarm.policies import ForecastState, forecast_next, forecast_update, \
    make_policy, refit_smoothing
from greenfarm.queueing import TrafficEstimate, erlang_b, peakedness
from greenfarm.simulator import SimulationConfig, run
from greenfarm.workload import WorkloadGenerator, WorkloadSpec
from greenfarm import experiments


MS = 50.0 / 60.0


def report(num, name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] criterion {num:2d} ({name}): {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


@pytest.fixture(scope="module")
def cfg():
    return build_config({})


@pytest.fixture(scope="module")
def compare_result(cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("compare")
    S = cfg.total_servers
    specs = [f"static:{S}", f"static:{S // 2}", "adaptive:0.2", "optimal"]
    return experiments.compare_policies(cfg, specs, cfg.experiment.loads, out)


@pytest.fixture(scope="module")
def variability_result(cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("variability")
    return experiments.run_variability(cfg, (0.3,), out)


@pytest.fixture(scope="module")
def trace_result(cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("trace")
    return experiments.run_nonstationary(cfg, out)


def test_criterion_1_blocking_formula():
    worst = 0.0
    for rho in (0.1, 1.0, 5.0, 10.0):
        term, total = 1.0, 1.0
        for n in range(31):
            if n > 0:
                term *= rho / n
                total += term
            ref = term / total
            worst = max(worst, abs(erlang_b(n, rho) - ref) / ref)
    start = time.perf_counter()
    big = erlang_b(100_000, 90_000.0)
    elapsed = time.perf_counter() - start
    report(1, "blocking formula",
           worst <= 1e-12 and elapsed < 1.0 and 0.0 < big < 1.0,
           f"max rel err {worst:.2e} vs summation; "
           f"B(1e5, 9e4) in {elapsed * 1e3:.0f} ms")


def test_criterion_2_peakedness():
    z1 = peakedness(TrafficEstimate(rate=10, mean_service=MS,
                                    ca2=1.0, cs2=6.0)).z
    z2 = peakedness(TrafficEstimate(rate=10, mean_service=MS,
                                    ca2=2.0, cs2=1.0)).z
    t3 = TrafficEstimate(rate=10, mean_service=MS, ca2=2.0, cs2=4.0)
    mu = 1.0 / t3.mean_service
    sigma = math.sqrt(t3.cs2) / mu
    grid = np.linspace(0.0, 1.0 / mu + 10.0 * sigma, 1_000_001)
    tail = scipy.stats.norm.sf(grid, loc=1.0 / mu, scale=sigma)
    eta_ref = mu * np.trapezoid(tail**2, grid)
    d_eta = abs(peakedness(t3).eta - eta_ref)
    report(2, "peakedness",
           z1 == 1.0 and z2 == 1.5 and d_eta <= 1e-6,
           f"Poisson z = {z1}, unit-service z = {z2}, "
           f"general-case quadrature err {d_eta:.2e}")


def test_criterion_3_simulator_vs_analytics():
    # fixed 50 servers, offered load 45, one-hour jobs, > 1e6 arrivals
    duration = 22_400.0
    cfg = SimulationConfig(S=50, window_length=100.0, duration=duration,
                           energy=EnergyProfile(), tariff=Tariff())
    wl = WorkloadGenerator(WorkloadSpec(rate=45.0, mean_service=1.0, seed=12))
    res = run(make_policy("static:50"), wl, cfg)
    arr = sum(r.arrivals for r in res.records)
    blk = sum(r.blocked for r in res.records)
    b_ref = erlang_b(50, 45.0)
    # blocking events are positively correlated, so a binomial error bar
    # would be too tight; batch means over the 100 h windows instead
    frac = np.array([r.blocked / r.arrivals for r in res.records])
    b_se = frac.std(ddof=1) / math.sqrt(len(frac))
    b_ok = abs(blk / arr - b_ref) <= 3 * b_se

    busy = np.array([r.mean_busy for r in res.records])
    busy_ref = 45.0 * (1 - b_ref)
    busy_se = busy.std(ddof=1) / math.sqrt(len(busy))
    busy_ok = abs(busy.mean() - busy_ref) <= 3 * busy_se
    report(3, "simulator vs analytics", arr >= 1_000_000 and b_ok and busy_ok,
           f"{arr} arrivals; loss {blk / arr:.5f} vs {b_ref:.5f} "
           f"(3se = {3 * b_se:.5f}); busy {busy.mean():.2f} vs {busy_ref:.2f} "
           f"(3se = {3 * busy_se:.2f})")


def test_criterion_4_revenue_curve_shape(cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    res = experiments.sweep_revenue_vs_n(cfg, (0.3, 0.6, 0.9), out)
    report(4, "revenue curve shape", res["passed"],
           f"argmax by load {res['argmax']}")


def test_criterion_5_policy_comparison(compare_result):
    res = compare_result
    summaries = {k: v.summary.mean_revenue_per_hour
                 for k, v in res["results"].items()}
    static_light = summaries[("static:1000", 0.05)]
    gaps = {ld: 1 - summaries[("adaptive:0.2", ld)] / summaries[("optimal", ld)]
            for ld in (0.3, 0.6, 0.9)}
    report(5, "policy comparison", res["passed"],
           f"static full @5% load {static_light:.2f} $/h; "
           f"optimal-vs-adaptive gaps {gaps}")


def test_criterion_6_adaptive_utilization(compare_result):
    ratios = {ld: compare_result["results"][("adaptive:0.2", ld)]
              .summary.busy_running_ratio for ld in (0.3, 0.6, 0.9, 0.995)}
    ok = all(v >= 0.9 for v in ratios.values())
    report(6, "adaptive utilization", ok, f"busy/running by load {ratios}")


def test_criterion_7_service_variability(variability_result):
    res = variability_result
    deltas = {f"{k[0]}@{k[1]:g}":
              res["heavy"][k].summary.mean_revenue_per_hour
              - res["markovian"][k].summary.mean_revenue_per_hour
              for k in res["heavy"]}
    report(7, "service-time variability", res["passed"],
           f"revenue deltas (lognormal - markovian) {deltas}")


def test_criterion_8_trace_driven(trace_result):
    res = trace_result
    energy = {k: v.summary.total_energy_kwh for k, v in res["results"].items()}
    report(8, "trace-driven policies", res["passed"],
           f"total energy by policy {energy}")


def test_criterion_9_forecasting():
    # exact on a linear ramp
    s = ForecastState(alpha=0.4, gamma=0.6)
    worst = 0.0
    for k in range(50):
        x = 3.0 + 1.7 * k
        if k >= 2:
            worst = max(worst, abs(forecast_next(s) - x))
        s = forecast_update(s, x)

    # grid refit equals an independent exhaustive oracle
    def oracle(series, step=0.05):
        best = None
        m = round(1.0 / step)
        for i in range(m + 1):
            for j in range(m + 1):
                a, g = i * step, j * step
                sm, tr, sse = series[0], series[1] - series[0], 0.0
                for x in series[2:]:
                    err = sm + tr - x
                    sse += err * err
                    prev = sm
                    sm = a * x + (1 - a) * (sm + tr)
                    tr = g * (sm - prev) + (1 - g) * tr
                if best is None or sse < best[0] - 1e-12:
                    best = (sse, a, g)
        return best[1], best[2]

    rng = np.random.default_rng(3)
    agree = 0
    for _ in range(20):
        series = list(rng.uniform(0, 50, size=int(rng.integers(6, 25))))
        agree += refit_smoothing(series) == oracle(series)
    report(9, "forecasting", worst <= 1e-9 and agree == 20,
           f"ramp one-step error {worst:.1e}; refit oracle agreement {agree}/20")


def test_criterion_10_determinism(cfg, tmp_path_factory):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path_factory.mktemp(f"det_{tag}")
        experiments.simulate_single(cfg, "optimal", 0.6, out,
                                    window_hours=2.0, duration_hours=48.0)
        csv = next(p for p in out.iterdir() if p.suffix == ".csv")
        outs.append(csv.read_bytes())
    ok = outs[0] == outs[1]
    report(10, "determinism", ok,
           f"two runs, {len(outs[0])} bytes each, byte-identical: {ok}")
