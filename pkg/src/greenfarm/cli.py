"""Command-line entry point.

Subcommands: ``sweep`` (analytic revenue-vs-n), ``compare`` (policy
comparison across loads), ``variability`` (Log-Normal traffic),
``trace`` (non-stationary month), ``simulate`` (single run),
``validate-config`` and ``gen-trace``.  Exit codes: 0 success, 1 config
error, 2 one or more experiment assertions failed.
"""

import argparse
import dataclasses
import os
import sys

from greenfarm import __version__
from greenfarm.config import ConfigError, load_config
from greenfarm.workload import save_trace, synthetic_trace

RESULTS_ENV = "GREENFARM_RESULTS"


def _add_common(parser):
    parser.add_argument("--config", help="path to a YAML config file "
                        "(defaults to the shipped configuration)")
    parser.add_argument("--seed", type=int, help="override the workload seed")
    parser.add_argument("--scale", type=int, metavar="S",
                        help="override the farm size (total_servers)")
    parser.add_argument("--out", help="results directory (default: config "
                        f"results_dir, or ${RESULTS_ENV})")


def _parse_loads(text):
    try:
        loads = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--loads must be comma-separated numbers, got {text!r}")
    if any(not 0 < v <= 1 for v in loads):
        raise ConfigError(f"--loads entries must be in (0, 1], got {loads}")
    return loads


def _build_config(args):
    cfg = load_config(args.config)
    if getattr(args, "scale", None):
        if args.scale <= 0:
            raise ConfigError(f"--scale must be > 0, got {args.scale}")
        cfg = dataclasses.replace(
            cfg, total_servers=args.scale,
            policy=dataclasses.replace(cfg.policy, n_fixed=min(
                cfg.policy.n_fixed, args.scale)))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, workload=dataclasses.replace(cfg.workload, seed=args.seed))
    return cfg


def _out_dir(args, cfg, experiment):
    base = args.out or os.environ.get(RESULTS_ENV) or cfg.experiment.results_dir
    return os.path.join(base, experiment)


def _duration(args, cfg):
    if getattr(args, "windows", None):
        return args.windows * cfg.experiment.window_hours
    return cfg.experiment.duration_hours


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="greenfarm",
        description="Energy-aware server allocation: analytics, simulation "
                    "and experiment suites.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="analytic revenue-vs-n sweep")
    _add_common(p)
    p.add_argument("--loads", default="0.3,0.4,0.5,0.6,0.7,0.8,0.9")

    p = sub.add_parser("compare", help="simulate policies across loads")
    _add_common(p)
    p.add_argument("--loads")
    p.add_argument("--policies",
                   help="comma-separated, e.g. static:1000,adaptive:0.2,optimal")
    p.add_argument("--windows", type=int, help="run length in observation windows")

    p = sub.add_parser("variability", help="Log-Normal high-variability runs")
    _add_common(p)
    p.add_argument("--loads", default="0.3,0.6,0.9")
    p.add_argument("--ca2", type=float, default=2.0)
    p.add_argument("--cs2", type=float, default=20.0)

    p = sub.add_parser("trace", help="non-stationary trace-driven runs")
    _add_common(p)
    p.add_argument("--trace", help="hour,rate CSV (default: synthetic month)")
    p.add_argument("--policies")

    p = sub.add_parser("simulate", help="single simulation run")
    _add_common(p)
    p.add_argument("--policy", default="adaptive:0.2")
    p.add_argument("--load", type=float, default=0.6)
    p.add_argument("--windows", type=int)

    p = sub.add_parser("validate-config", help="check a config file")
    p.add_argument("--config")

    p = sub.add_parser("gen-trace", help="write a synthetic demand trace")
    p.add_argument("--hours", type=int, default=720)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="trace.csv", help="output CSV path")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    from greenfarm import experiments  # deferred: keeps --help fast

    if args.command == "validate-config":
        load_config(args.config)
        print("configuration OK")
        return 0

    if args.command == "gen-trace":
        trace = synthetic_trace(hours=args.hours, seed=args.seed)
        save_trace(trace, args.out)
        print(f"wrote {len(trace.times)} hourly rates to {args.out}")
        return 0

    cfg = _build_config(args)

    if args.command == "sweep":
        out = _out_dir(args, cfg, "sweep")
        res = experiments.sweep_revenue_vs_n(cfg, _parse_loads(args.loads), out)
        for load, n in sorted(res["argmax"].items()):
            print(f"load {load:g}: optimal n = {n}")
        return _verdict(res["passed"], out)

    if args.command == "compare":
        loads = _parse_loads(args.loads) if args.loads else cfg.experiment.loads
        policies = (args.policies.split(",") if args.policies else
                    [f"static:{cfg.total_servers}",
                     f"static:{cfg.total_servers // 2}",
                     "adaptive:0.2", "optimal"])
        out = _out_dir(args, cfg, "compare")
        res = experiments.compare_policies(cfg, policies, loads, out,
                                           duration_hours=_duration(args, cfg))
        for (pspec, load), result in sorted(res["results"].items()):
            s = result.summary
            ci = f" ± {s.revenue_ci_halfwidth:.2f}" if s.revenue_ci_halfwidth else ""
            print(f"{pspec:>14} @ load {load:g}: "
                  f"{s.mean_revenue_per_hour:9.2f} $/h{ci}, "
                  f"busy/running {s.busy_running_ratio:.3f}, "
                  f"loss {s.loss_fraction:.4f}")
        return _verdict(res["passed"], out)

    if args.command == "variability":
        out = _out_dir(args, cfg, "variability")
        res = experiments.run_variability(cfg, _parse_loads(args.loads), out,
                                          ca2=args.ca2, cs2=args.cs2)
        for (pspec, load), result in sorted(res["heavy"].items()):
            markov = res["markovian"][(pspec, load)]
            print(f"{pspec:>14} @ load {load:g}: "
                  f"{result.summary.mean_revenue_per_hour:9.2f} $/h lognormal vs "
                  f"{markov.summary.mean_revenue_per_hour:9.2f} $/h markovian")
        return _verdict(res["passed"], out)

    if args.command == "trace":
        out = _out_dir(args, cfg, "trace")
        policies = args.policies.split(",") if args.policies else None
        res = experiments.run_nonstationary(cfg, out, trace_path=args.trace,
                                            policy_specs=policies)
        for pspec, result in res["results"].items():
            s = result.summary
            print(f"{pspec:>14}: cumulative revenue {s.total_revenue:12.2f} $, "
                  f"energy {s.total_energy_kwh:10.1f} kWh, "
                  f"busy/running {s.busy_running_ratio:.3f}")
        return _verdict(res["passed"], out)

    if args.command == "simulate":
        out = _out_dir(args, cfg, "simulate")
        result = experiments.simulate_single(
            cfg, args.policy, args.load, out,
            duration_hours=_duration(args, cfg))
        s = result.summary
        print(f"policy {args.policy} @ load {args.load:g}: "
              f"mean revenue {s.mean_revenue_per_hour:.2f} $/h, "
              f"energy {s.total_energy_kwh:.1f} kWh, "
              f"loss fraction {s.loss_fraction:.4f}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _verdict(passed: bool, out: str) -> int:
    if passed:
        print(f"all assertions passed; results in {out}")
        return 0
    print(f"ASSERTION FAILURES; see {os.path.join(out, 'assertions.json')}",
          file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
