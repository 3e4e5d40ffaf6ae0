"""Experiment configuration: a single YAML document with sections for the
farm, energy model, tariff, workload, policy parameters and experiment
shape.  ``load_config`` validates eagerly and raises ConfigError naming
the offending key."""

import dataclasses
from dataclasses import dataclass
from importlib import resources

import yaml

from greenfarm.economics import Tariff
from greenfarm.energy import EnergyProfile

__all__ = ["ConfigError", "AppConfig", "load_config", "default_config_text"]


class ConfigError(ValueError):
    """Invalid or missing configuration value; the message names the key."""


@dataclass(frozen=True)
class PolicyDefaults:
    beta: float = 0.2
    epsilon: float = 0.01
    n_fixed: int = 1000
    alpha: float = 0.5
    gamma: float = 0.5
    refit_every: int = 24
    grid_step: float = 0.05
    oracle_mode: str = "optimal"


@dataclass(frozen=True)
class ExperimentDefaults:
    window_hours: float = 2.0
    duration_hours: float = 264.0
    loads: tuple = (0.05, 0.3, 0.6, 0.9, 0.995)
    trace_window_hours: float = 0.5
    trace_hours: int = 720
    trace_mean_load: float = 0.6
    shutdown_mode: str = "idealized"
    results_dir: str = "results"


@dataclass(frozen=True)
class WorkloadDefaults:
    mean_service_hours: float
    arrival_distribution: str = "exponential"
    service_distribution: str = "exponential"
    ca2: float = 1.0
    cs2: float = 1.0
    seed: int = 42


@dataclass(frozen=True)
class AppConfig:
    total_servers: int
    energy: EnergyProfile
    tariff: Tariff
    workload: WorkloadDefaults
    policy: PolicyDefaults
    experiment: ExperimentDefaults

    def policy_defaults_dict(self) -> dict:
        return dataclasses.asdict(self.policy)


def _section(data, name) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return value


def _get(section: dict, section_name: str, key: str, cast, default):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key '{section_name}.{key}'")
        return default
    try:
        return cast(section[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{section_name}.{key}': {exc}") from None


def load_config(path=None) -> AppConfig:
    """Load and validate a config file; without a path, the shipped default."""
    if path is None:
        text = default_config_text()
        source = "<default>"
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        source = str(path)
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return build_config(data)


def build_config(data: dict) -> AppConfig:
    known = {"farm", "energy", "tariff", "workload", "policy", "experiment"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(
            f"unknown config section(s): {', '.join(unknown)} "
            f"(expected only {', '.join(sorted(known))})")

    farm = _section(data, "farm")
    S = _get(farm, "farm", "total_servers", int, 1000)
    if S <= 0:
        raise ConfigError(f"'farm.total_servers' must be > 0, got {S}")

    e = _section(data, "energy")
    try:
        energy = EnergyProfile(
            idle_watts=_get(e, "energy", "idle_watts", float, 34.7),
            busy_watts=_get(e, "energy", "busy_watts", float, 55.3),
            pue=_get(e, "energy", "pue", float, 1.7),
            busy_utilization=_get(e, "energy", "busy_utilization", float, 0.7),
        )
    except ValueError as exc:
        raise ConfigError(f"section 'energy': {exc}") from None

    t = _section(data, "tariff")
    price = t.get("electricity_price", 0.1)
    if isinstance(price, list):
        try:
            price = tuple((float(seg[0]), float(seg[1])) for seg in price)
        except (TypeError, ValueError, IndexError):
            raise ConfigError("'tariff.electricity_price' schedule must be a "
                              "list of [hour, price] pairs") from None
    try:
        tariff = Tariff(
            charge_rate=_get(t, "tariff", "charge_rate", float, 0.085),
            electricity_price=price,
            indirect_cost_multiplier=_get(t, "tariff", "indirect_cost_multiplier",
                                          float, 3.0),
        )
    except ValueError as exc:
        raise ConfigError(f"section 'tariff': {exc}") from None

    w = _section(data, "workload")
    workload = WorkloadDefaults(
        mean_service_hours=_get(w, "workload", "mean_service_hours", float, 50.0 / 60.0),
        arrival_distribution=_get(w, "workload", "arrival_distribution", str,
                                  "exponential"),
        service_distribution=_get(w, "workload", "service_distribution", str,
                                  "exponential"),
        ca2=_get(w, "workload", "ca2", float, 1.0),
        cs2=_get(w, "workload", "cs2", float, 1.0),
        seed=_get(w, "workload", "seed", int, 42),
    )
    if workload.mean_service_hours <= 0:
        raise ConfigError("'workload.mean_service_hours' must be > 0")
    for key, value in (("arrival_distribution", workload.arrival_distribution),
                       ("service_distribution", workload.service_distribution)):
        if value not in ("exponential", "lognormal"):
            raise ConfigError(f"'workload.{key}' must be 'exponential' or "
                              f"'lognormal', got {value!r}")

    p = _section(data, "policy")
    policy = PolicyDefaults(
        beta=_get(p, "policy", "beta", float, 0.2),
        epsilon=_get(p, "policy", "epsilon", float, 0.01),
        n_fixed=_get(p, "policy", "n_fixed", int, S),
        alpha=_get(p, "policy", "alpha", float, 0.5),
        gamma=_get(p, "policy", "gamma", float, 0.5),
        refit_every=_get(p, "policy", "refit_every_windows", int, 24),
        grid_step=_get(p, "policy", "grid_step", float, 0.05),
        oracle_mode=_get(p, "policy", "oracle_mode", str, "optimal"),
    )
    if not -1 <= policy.beta <= 1:
        raise ConfigError(f"'policy.beta' must be in [-1, 1], got {policy.beta}")
    if policy.epsilon <= 0:
        raise ConfigError(f"'policy.epsilon' must be > 0, got {policy.epsilon}")
    if not 0 <= policy.n_fixed <= S:
        raise ConfigError(f"'policy.n_fixed' must be in [0, {S}], got {policy.n_fixed}")
    if policy.oracle_mode not in ("optimal", "qed"):
        raise ConfigError("'policy.oracle_mode' must be 'optimal' or 'qed', "
                          f"got {policy.oracle_mode!r}")

    x = _section(data, "experiment")
    loads = x.get("loads", list(ExperimentDefaults.loads))
    try:
        loads = tuple(float(v) for v in loads)
    except (TypeError, ValueError):
        raise ConfigError("'experiment.loads' must be a list of numbers") from None
    if any(not 0 < v <= 1 for v in loads):
        raise ConfigError(f"'experiment.loads' entries must be in (0, 1], got {loads}")
    experiment = ExperimentDefaults(
        window_hours=_get(x, "experiment", "window_hours", float, 2.0),
        duration_hours=_get(x, "experiment", "duration_hours", float, 264.0),
        loads=loads,
        trace_window_hours=_get(x, "experiment", "trace_window_hours", float, 0.5),
        trace_hours=_get(x, "experiment", "trace_hours", int, 720),
        trace_mean_load=_get(x, "experiment", "trace_mean_load", float, 0.6),
        shutdown_mode=_get(x, "experiment", "shutdown_mode", str, "idealized"),
        results_dir=_get(x, "experiment", "results_dir", str, "results"),
    )
    if experiment.window_hours <= 0:
        raise ConfigError("'experiment.window_hours' must be > 0")
    if experiment.shutdown_mode not in ("idealized", "drain"):
        raise ConfigError("'experiment.shutdown_mode' must be 'idealized' or 'drain'")

    return AppConfig(total_servers=S, energy=energy, tariff=tariff,
                     workload=workload, policy=policy, experiment=experiment)


def default_config_text() -> str:
    return resources.files("greenfarm").joinpath("default_config.yaml").read_text()
