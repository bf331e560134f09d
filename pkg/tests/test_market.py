import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elecmarket.domain import Technology
from elecmarket.errors import InvalidBidError
from elecmarket.market import (
    Bid,
    ClearingResult,
    available_quantity,
    clear_step,
    demand_weighted_price,
    relative_carbon_intensity,
    settle_year,
)
from helpers import make_plant
from oracles import brute_force_dispatch

LOL = 6000.0


def bids(*pq):
    return [Bid(f"p{i}", "g", p, q) for i, (p, q) in enumerate(pq)]


def test_clear_examples():
    r = clear_step(bids((10, 50), (20, 50), (30, 50)), 75, LOL)
    assert r.dispatched == {"p0": 50, "p1": 25}
    assert r.clearing_price == 20
    z = clear_step(bids((10, 50)), 0, LOL)
    assert z.accepted == () and z.clearing_price == 0
    s = clear_step(bids((10, 50), (20, 50), (30, 50)), 200, LOL)
    assert s.lost_load == 50 and s.clearing_price == LOL


def test_negative_quantity_rejected():
    with pytest.raises(InvalidBidError):
        Bid("a", "g", 10.0, -1.0)


def test_ties_follow_plant_id():
    r = clear_step([Bid("b", "g", 10, 50), Bid("a", "g", 10, 50)], 60, LOL)
    assert r.accepted == (("a", 50), ("b", 10))


def test_cap_applied_at_submission():
    r = clear_step(bids((500, 50), (20, 50)), 80, LOL, cap=150)
    assert r.clearing_price == 150


def _random_instance(rng):
    n = int(rng.integers(1, 11))
    prices = rng.choice([rng.uniform(0, 100, n), rng.integers(0, 5, n) * 10.0])
    qty = rng.uniform(0, 100, n) * (rng.random(n) > 0.1)
    demand = float(rng.uniform(0, qty.sum() * 1.2 + 1))
    return prices, qty, demand


def test_matches_brute_force():
    rng = np.random.default_rng(42)
    for _ in range(200):
        prices, qty, demand = _random_instance(rng)
        res = clear_step([Bid(f"p{i:02d}", "g", p, q) for i, (p, q) in enumerate(zip(prices, qty))], demand, LOL)
        cost, x, price = brute_force_dispatch(prices, qty, demand)
        got = np.array([res.dispatched.get(f"p{i:02d}", 0.0) for i in range(len(prices))])
        assert float((got * prices).sum()) == pytest.approx(cost, rel=1e-9, abs=1e-7)
        if res.lost_load == 0:
            assert res.clearing_price == price
        if len(set(prices)) == len(prices):
            np.testing.assert_allclose(got, x, atol=1e-7)


@given(st.lists(st.tuples(st.floats(0, 500), st.floats(0, 200)), min_size=0, max_size=10),
       st.floats(0, 2000), st.floats(0, 2000))
def test_balance_and_price_monotone(offers, d1, d2):
    b = [Bid(f"p{i}", "g", p, q) for i, (p, q) in enumerate(offers)]
    lo, hi = sorted((d1, d2))
    r1, r2 = clear_step(b, lo, LOL), clear_step(b, hi, LOL)
    for r, d in ((r1, lo), (r2, hi)):
        assert sum(q for _, q in r.accepted) + r.lost_load == pytest.approx(d, abs=1e-6)
        offered = {x.plant_id: x.quantity for x in b}
        assert all(q <= offered[pid] + 1e-12 for pid, q in r.accepted)
    assert r1.clearing_price <= r2.clearing_price


def _plant(pid, tech, cap, **kw):
    kw.setdefault("operating_period_yr", 30)
    kw.setdefault("efficiency", 0.4)
    return make_plant(pid, tech, cap, **kw)


def test_available_quantity():
    pv = _plant("s", Technology.PV, 100)
    assert available_quantity(pv, {"solar_cf": 0.0}) == 0
    assert available_quantity(_plant("c", Technology.CCGT, 100, availability=0.9), {}) == 90
    assert available_quantity(_plant("w", Technology.ONSHORE, 50), {"onshore_cf": 0.43}) == pytest.approx(21.5)


def test_settlement_examples():
    p = _plant("a", Technology.CCGT, 10.0, fixed_om=100.0)
    r = ClearingResult(0, 10.0, (("a", 10.0),), 50.0, 0.0)
    led = settle_year([r], [10.0], {"a": p}, {"a": "g"})
    assert led.net("g") == pytest.approx(4000.0)

    nuc = _plant("n", Technology.NUCLEAR, 10.0)
    r = ClearingResult(0, 10.0, (("n", 10.0),), 0.0, 0.0)
    led = settle_year([r], [1.0], {"n": nuc}, {"n": "g"}, nuclear_subsidy=120.0)
    assert led.income["g"] + led.subsidy_income["g"] == pytest.approx(1200.0)

    coal = _plant("c", Technology.COAL, 100.0, emission_factor=0.9)
    r = ClearingResult(0, 100.0, (("c", 100.0),), 30.0, 0.0)
    led = settle_year([r], [1.0], {"c": coal}, {"c": "g"})
    assert led.tco2["coal"] == pytest.approx(90.0)


def test_settlement_loans_and_negative_cash():
    p = _plant("a", Technology.CCGT, 10.0, fixed_om=100.0)
    r = ClearingResult(0, 10.0, (("a", 10.0),), 1.0, 0.0)
    led = settle_year([r], [1.0], {"a": p}, {"a": "g"}, loan_payments={"g": 500.0}, opening_cash={"g": 100.0})
    assert led.cash["g"] == pytest.approx(100 + 10 - 1000 - 500)
    assert led.negative_cash == ["g"]


def test_average_price_weighting():
    assert demand_weighted_price([40, 40], [10, 30], [5, 1]) == 40
    assert demand_weighted_price([10, 20], [1, 1], [1, 3]) == pytest.approx(17.5)


def test_relative_intensity():
    coal = _plant("c", Technology.COAL, 100.0, emission_factor=0.9)
    wind = _plant("w", Technology.ONSHORE, 100.0)
    led = settle_year([ClearingResult(0, 100.0, (("c", 50.0), ("w", 50.0)), 30.0, 0.0)], [1.0],
                      {"c": coal, "w": wind}, {"c": "g", "w": "g"})
    assert relative_carbon_intensity(led, 0.45) == pytest.approx(100.0)
    assert relative_carbon_intensity(led, 0.9) == pytest.approx(50.0)
    clean = settle_year([ClearingResult(0, 50.0, (("w", 50.0),), 0.0, 0.0)], [1.0], {"w": wind}, {"w": "g"})
    assert relative_carbon_intensity(clean, 0.5) == 0
    with pytest.raises(ValueError):
        relative_carbon_intensity(led, 0.0)
