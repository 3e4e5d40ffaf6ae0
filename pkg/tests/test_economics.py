"""Revenue model: usage charges minus energy cost, flat and scheduled prices."""

import pytest

from greenfarm.economics import Tariff, mean_price, price_at, revenue_rate
from greenfarm.energy import EnergyProfile, average_power


MS = 50.0 / 60.0  # default mean job length, hours


def test_charge_side_at_full_throughput():
    # 1000 jobs/h of 50-minute jobs at 0.085 $/h of service
    r = revenue_rate(1000.0, MS, 0.0, Tariff())
    assert r == pytest.approx(0.085 * MS * 1000.0)
    assert r == pytest.approx(70.8333, abs=1e-3)


def test_idle_farm_burns_money():
    # no throughput, 1000 idle servers: pure energy cost
    p = EnergyProfile()
    r = revenue_rate(0.0, MS, average_power(1000, 0, p), Tariff())
    assert r == pytest.approx(-1000 * p.idle_effective * 0.1 * 3.0 / 1000.0)
    assert r == pytest.approx(-17.697, abs=1e-3)


def test_energy_cost_scales_with_price_and_multiplier():
    p = EnergyProfile()
    power = average_power(100, 60, p)
    base = revenue_rate(50.0, MS, power, Tariff())
    pricier = revenue_rate(50.0, MS, power, Tariff(electricity_price=0.2))
    assert base - pricier == pytest.approx(power * 0.1 * 3.0 / 1000.0)


def test_flat_price_lookup():
    t = Tariff()
    assert price_at(t, 0.0) == 0.1
    assert price_at(t, 1e6) == 0.1
    assert t.max_price == 0.1


def test_scheduled_price_holds_segments():
    # off-peak 0.08 until hour 8, peak 0.15 until 20, then off-peak again
    t = Tariff(electricity_price=((0.0, 0.08), (8.0, 0.15), (20.0, 0.08)))
    assert price_at(t, 0.0) == 0.08
    assert price_at(t, 7.999) == 0.08
    assert price_at(t, 8.0) == 0.15
    assert price_at(t, 19.0) == 0.15
    assert price_at(t, 25.0) == 0.08  # holds the last segment
    assert t.max_price == 0.15


def test_mean_price_is_time_weighted():
    t = Tariff(electricity_price=((0.0, 0.08), (8.0, 0.15), (20.0, 0.08)))
    # window [6, 10]: two hours at 0.08, two at 0.15
    assert mean_price(t, 6.0, 10.0) == pytest.approx((2 * 0.08 + 2 * 0.15) / 4.0)
    # degenerate window falls back to the point price
    assert mean_price(t, 9.0, 9.0) == 0.15


def test_tariff_validation():
    with pytest.raises(ValueError):
        Tariff(charge_rate=-0.01)
    with pytest.raises(ValueError):
        Tariff(indirect_cost_multiplier=0.5)
    with pytest.raises(ValueError):
        Tariff(electricity_price=())
    with pytest.raises(ValueError):
        Tariff(electricity_price=((0.0, 0.1), (0.0, 0.2)))
    with pytest.raises(ValueError):
        Tariff(electricity_price=((0.0, -0.1),))
