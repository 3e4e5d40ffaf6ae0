"""Revenue model: job charges earned minus electricity cost."""

from bisect import bisect_right
from dataclasses import dataclass, field

__all__ = ["Tariff", "price_at", "mean_price", "revenue_rate"]


@dataclass(frozen=True)
class Tariff:
    """Charging and electricity-cost parameters.

    ``charge_rate`` is what a customer pays per job per hour of job
    length ($/hour).  ``electricity_price`` is either a flat $/kWh value
    or a piecewise-constant schedule given as (hour, price) pairs.
    ``indirect_cost_multiplier`` scales the electricity term to cover
    capital/amortization costs proportional to consumption (the default
    3.0 adds twice the electricity cost on top of it).
    """

    charge_rate: float = 0.085
    electricity_price: float | tuple = 0.1
    indirect_cost_multiplier: float = 3.0

    # normalized schedule: parallel tuples of segment start hours / prices
    _times: tuple = field(init=False, repr=False, compare=False)
    _prices: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.charge_rate < 0:
            raise ValueError(f"charge_rate must be >= 0, got {self.charge_rate}")
        if self.indirect_cost_multiplier < 1:
            raise ValueError(
                f"indirect_cost_multiplier must be >= 1, got {self.indirect_cost_multiplier}"
            )
        price = self.electricity_price
        if isinstance(price, (int, float)):
            segments = [(0.0, float(price))]
        else:
            segments = [(float(t), float(p)) for t, p in price]
            if not segments:
                raise ValueError("electricity_price schedule must not be empty")
            times = [t for t, _ in segments]
            if sorted(times) != times or len(set(times)) != len(times):
                raise ValueError("electricity_price schedule times must be strictly increasing")
        for t, p in segments:
            if p < 0:
                raise ValueError(f"electricity price must be >= 0, got {p} at t={t}")
        object.__setattr__(self, "_times", tuple(t for t, _ in segments))
        object.__setattr__(self, "_prices", tuple(p for _, p in segments))

    @property
    def max_price(self) -> float:
        """Largest electricity price ($/kWh) anywhere in the schedule."""
        return max(self._prices)


def price_at(tariff: Tariff, time: float) -> float:
    """Electricity price ($/kWh) at a wall-clock time in hours.

    Times before the first segment use the first price; times past the
    last segment hold the last price.
    """
    if time < 0:
        raise ValueError(f"time must be >= 0, got {time}")
    i = bisect_right(tariff._times, time) - 1
    return tariff._prices[max(i, 0)]


def mean_price(tariff: Tariff, t0: float, t1: float) -> float:
    """Time-weighted average electricity price over [t0, t1]."""
    if t1 <= t0:
        return price_at(tariff, t0)
    total = 0.0
    cuts = [t0] + [t for t in tariff._times if t0 < t < t1] + [t1]
    for a, b in zip(cuts, cuts[1:]):
        total += price_at(tariff, a) * (b - a)
    return total / (t1 - t0)


def revenue_rate(throughput: float, mean_service: float, power: float,
                 tariff: Tariff, time: float = 0.0) -> float:
    """Average revenue per hour: charges earned minus electricity cost.

    The average charge per job is charge_rate * mean_service; the cost
    term converts ``power`` (watts) to kW and applies the indirect-cost
    multiplier.
    """
    if throughput < 0 or mean_service < 0 or power < 0:
        raise ValueError("throughput, mean_service and power must be >= 0")
    income = tariff.charge_rate * mean_service * throughput
    cost = price_at(tariff, time) * tariff.indirect_cost_multiplier * power / 1000.0
    return income - cost
