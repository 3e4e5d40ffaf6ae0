"""Loss-system analytics.

Erlang-B blocking (exact recursion and a fractional extension), the
peakedness correction for non-Poisson arrivals, and throughput of an
n-server loss system.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from greenfarm import kernels

__all__ = [
    "TrafficEstimate",
    "PeakednessState",
    "erlang_b",
    "erlang_b_fractional",
    "peakedness",
    "peakedness_update",
    "blocking_probability",
    "throughput",
]

#: nodes for the eta quadrature (Gauss-Legendre)
ETA_QUAD_NODES = 64

#: the integrand 1 - G(t) is negligible this many service-time standard
#: deviations past the mean, which truncates the eta integral
ETA_TAIL_SIGMAS = 10.0


@dataclass(frozen=True)
class TrafficEstimate:
    """Per-window traffic estimates.

    Attributes
    ----------
    rate : float
        Arrival rate (jobs per hour).
    mean_service : float
        Mean job size (hours).
    ca2 : float
        Squared coefficient of variation of interarrival times.
    cs2 : float
        Squared coefficient of variation of service times.
    """

    rate: float
    mean_service: float
    ca2: float = 1.0
    cs2: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise ValueError(f"arrival rate must be finite and >= 0, got {self.rate}")
        if not (math.isfinite(self.mean_service) and self.mean_service > 0):
            raise ValueError(f"mean_service must be finite and > 0, got {self.mean_service}")
        if not (math.isfinite(self.ca2) and self.ca2 >= 0):
            raise ValueError(f"ca2 must be finite and >= 0, got {self.ca2}")
        if not (math.isfinite(self.cs2) and self.cs2 >= 0):
            raise ValueError(f"cs2 must be finite and >= 0, got {self.cs2}")

    @property
    def rho(self) -> float:
        """Offered load in server-units (rate x mean service time)."""
        return self.rate * self.mean_service


@dataclass(frozen=True)
class PeakednessState:
    """Asymptotic peakedness z together with the eta value that produced it."""

    z: float
    eta: float

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError(f"peakedness must be > 0, got {self.z}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")


def _validate_load(rho):
    if not (math.isfinite(rho) and rho >= 0):
        raise ValueError(f"offered load must be finite and >= 0, got {rho}")


def erlang_b(n: int, rho: float) -> float:
    """Blocking probability of an n-server loss system with offered load rho.

    Uses the forward recursion B(0) = 1, B(k+1) = rho*B(k) / (k+1 + rho*B(k)),
    which is numerically stable and linear in n (B(100000, .) takes well
    under a second).
    """
    if n < 0 or n != int(n):
        raise ValueError(f"server count must be a non-negative integer, got {n}")
    _validate_load(rho)
    return kernels.erlang_b_steps(1.0, 0.0, int(n), rho)


_LAGUERRE_NODES, _LAGUERRE_WEIGHTS = np.polynomial.laguerre.laggauss(80)


def _fractional_seed(s: float, rho: float) -> float:
    """B(s, rho) for s in [0, 1), via the integral representation
    1 / B(x, a) = a * integral_0^inf exp(-a t) (1 + t)^x dt.

    For rho >= 1 the substitution u = rho*t turns this into a
    Gauss-Laguerre sum that is accurate to ~1e-13 (checked against
    adaptive quadrature and high-precision integration); smaller loads
    fall back to adaptive quadrature, where the fixed rule degrades.
    """
    if s == 0.0:
        return 1.0
    if rho >= 1.0:
        inv = np.dot(_LAGUERRE_WEIGHTS,
                     np.exp(s * np.log1p(_LAGUERRE_NODES / rho)))
        return 1.0 / inv

    def integrand(t):
        return math.exp(-rho * t + s * math.log1p(t))

    inv, _ = quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return 1.0 / (rho * inv)


def erlang_b_fractional(n: float, rho: float, method: str = "continuation") -> float:
    """Erlang-B blocking extended to a real-valued server count.

    ``method="continuation"`` (default) evaluates the analytic
    continuation: the fractional part is seeded from the integral
    representation of 1/B and the exact recursion is then applied
    ``floor(n)`` times, so integer arguments reproduce :func:`erlang_b`
    exactly.  ``method="interpolation"`` linearly interpolates between
    the neighbouring integers; cheaper, but only approximate.
    """
    if not (math.isfinite(n) and n >= 0):
        raise ValueError(f"server count must be finite and >= 0, got {n}")
    _validate_load(rho)

    k = math.floor(n)
    s = n - k
    if s == 0.0:
        return erlang_b(k, rho)
    if rho == 0.0:
        return 0.0

    if method == "interpolation":
        lo = erlang_b(k, rho)
        hi = erlang_b(k + 1, rho)
        return lo + s * (hi - lo)
    if method != "continuation":
        raise ValueError(f"unknown method {method!r}")

    b = _fractional_seed(s, rho)
    return kernels.erlang_b_steps(b, s, k, rho)


def _eta_exponential() -> float:
    # cs2 == 1: 1 - G(t) = exp(-mu t), so mu * integral (1-G)^2 = 1/2
    return 0.5


def _eta_normal(mean_service: float, cs2: float) -> float:
    """eta = mu * integral_0^inf [1 - G(t)]^2 dt with G ~ Normal(1/mu, cs2/mu^2).

    Gauss-Legendre on [0, 1/mu + ETA_TAIL_SIGMAS * sigma_s]; the survival
    function is negligible beyond that.
    """
    sigma = math.sqrt(cs2) * mean_service
    upper = mean_service + ETA_TAIL_SIGMAS * sigma
    x, w = np.polynomial.legendre.leggauss(ETA_QUAD_NODES)
    t = 0.5 * upper * (x + 1.0)
    sf = norm.sf(t, loc=mean_service, scale=sigma)
    integral = 0.5 * upper * np.dot(w, sf * sf)
    return integral / mean_service


def peakedness(traffic: TrafficEstimate) -> PeakednessState:
    """Asymptotic peakedness of the arrival process.

    Three cases: Poisson arrivals give z = 1; exponential services give
    the closed form z = 1 + (ca2 - 1)/2; otherwise the service-time
    distribution is approximated by a normal with matching mean and
    variance and eta is evaluated by quadrature.  eta is clamped into
    (0, 1] (the normal surrogate can put mass below t = 0 when the
    service variance is large).
    """
    if traffic.cs2 == 1.0:
        eta = _eta_exponential()
    else:
        eta = _eta_normal(traffic.mean_service, traffic.cs2)
        eta = min(max(eta, 1e-12), 1.0)
    if traffic.ca2 == 1.0:
        z = 1.0
    else:
        # physically z > 0 (it is a variance-to-mean ratio); guard the
        # smooth-arrivals corner ca2 = 0, eta = 1
        z = max(1.0 + (traffic.ca2 - 1.0) * eta, 1e-6)
    return PeakednessState(z=z, eta=eta)


def peakedness_update(z_prev: float, eta_prev: float, eta_new: float) -> float:
    """Re-estimate peakedness from a new eta without refitting ca2:
    z_new = 1 + (z_prev - 1) * eta_new / eta_prev."""
    if eta_prev <= 0:
        raise ValueError(f"eta_prev must be > 0, got {eta_prev}")
    return 1.0 + (z_prev - 1.0) * eta_new / eta_prev


def blocking_probability(traffic: TrafficEstimate, n: int) -> float:
    """Blocking probability at n servers, peakedness-corrected: B(n/z, rho/z).

    Reduces to the exact Erlang-B value when the arrival process is
    Poisson (z = 1).
    """
    if n < 0:
        raise ValueError(f"server count must be >= 0, got {n}")
    rho = traffic.rho
    if rho == 0.0:
        return 0.0
    z = peakedness(traffic).z
    if z == 1.0:
        return erlang_b(n, rho)
    return erlang_b_fractional(n / z, rho / z)


def throughput(traffic: TrafficEstimate, n: int) -> float:
    """Jobs admitted (and completed) per hour: rate * (1 - blocking)."""
    return traffic.rate * (1.0 - blocking_probability(traffic, n))
