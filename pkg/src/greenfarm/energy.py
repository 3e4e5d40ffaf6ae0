"""Farm power model: linear in the number of running and busy servers."""

import math
from dataclasses import dataclass

__all__ = ["EnergyProfile", "busy_servers", "average_power"]


@dataclass(frozen=True)
class EnergyProfile:
    """Per-server power draws and facility overhead.

    ``idle_watts`` and ``busy_watts`` are direct (IT equipment) draws;
    the PUE factor is applied exactly once, at power-estimation time.
    The defaults reproduce effective draws of ~59 W idle / ~94 W busy
    per server at PUE 1.7.
    """

    idle_watts: float = 34.7
    busy_watts: float = 55.3
    pue: float = 1.7
    busy_utilization: float = 0.7

    def __post_init__(self):
        if not 0 < self.idle_watts <= self.busy_watts:
            raise ValueError(
                f"need 0 < idle_watts <= busy_watts, got {self.idle_watts}/{self.busy_watts}"
            )
        if self.pue < 1:
            raise ValueError(f"pue must be >= 1, got {self.pue}")
        if not 0 < self.busy_utilization <= 1:
            raise ValueError(f"busy_utilization must be in (0, 1], got {self.busy_utilization}")

    @property
    def idle_effective(self) -> float:
        """Idle per-server draw including facility overhead (watts)."""
        return self.idle_watts * self.pue

    @property
    def busy_effective(self) -> float:
        """Busy per-server draw including facility overhead (watts)."""
        return self.busy_watts * self.pue


def busy_servers(throughput: float, mean_service: float) -> int:
    """Average number of servers occupied by jobs, rounded up."""
    if throughput < 0 or mean_service < 0:
        raise ValueError("throughput and mean_service must be >= 0")
    return math.ceil(throughput * mean_service)


def average_power(n: int, m_bar: float, profile: EnergyProfile) -> float:
    """Average farm power draw in watts for n running servers, m_bar busy.

    Switched-off servers draw nothing; idle ones draw the idle rate and
    busy ones the busy rate, with PUE applied once on top.
    """
    if not 0 <= m_bar <= n:
        raise ValueError(f"need 0 <= m_bar <= n, got m_bar={m_bar}, n={n}")
    direct = n * profile.idle_watts + m_bar * (profile.busy_watts - profile.idle_watts)
    return direct * profile.pue
