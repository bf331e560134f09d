import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elecmarket.domain import GenCo, Technology
from elecmarket.errors import HorizonError, InsufficientHistoryError
from elecmarket.investment import (
    CashflowAppraisal,
    Forecasts,
    PredictedPriceDurationCurve,
    decide_investments,
    endogenous_price_curve,
    expected_cashflows,
    fit_trend,
    forecast_series,
    npv,
)
from elecmarket.stochastic import make_rng
from helpers import flat_slices, make_plant


def forecasts(n=2, fuel=None, carbon=0.0, slices=None):
    return Forecasts(slices or flat_slices(), {k: np.full(n, v) for k, v in (fuel or {}).items()},
                     np.full(n, carbon), np.ones(n))


def test_npv_examples():
    assert npv(CashflowAppraisal(0.0, (100, 100, 100))) == 300
    assert npv(CashflowAppraisal(0.1, (100, 100, 100))) == pytest.approx(100 + 100 / 1.1 + 100 / 1.21, abs=1e-9)
    assert npv(CashflowAppraisal(0.1, (100, 100, 100))) == pytest.approx(273.5537190082645, abs=1e-9)
    assert npv(CashflowAppraisal(0.05, ())) == 0
    with pytest.raises(ValueError):
        npv([1.0], -1.0)


@given(st.floats(-1e4, 1e4), st.lists(st.floats(1e-3, 1e4), min_size=1, max_size=30),
       st.floats(0, 0.5), st.floats(0.001, 0.5))
def test_npv_decreasing_in_rate(r0, later, i, step):
    flows = [r0] + later
    assert npv(flows, i + step) < npv(flows, i)
    assert npv(flows, 0.0) == pytest.approx(sum(flows))


def test_cashflow_flat_price():
    plant = make_plant(tech=Technology.ONSHORE, is_intermittent=False)
    app = expected_cashflows(plant, PredictedPriceDurationCurve(0.0, 40.0), forecasts(), 0.0)
    assert app.cashflows == (0.0, 350400.0)
    assert app.periods == plant.lifetime_yr


def test_cashflow_nuclear_subsidy_only():
    plant = make_plant(tech=Technology.NUCLEAR)
    app = expected_cashflows(plant, PredictedPriceDurationCurve(0.0, 0.0), forecasts(), 0.0, nuclear_subsidy=120.0)
    assert app.cashflows[1] == pytest.approx(8760 * 120)


def test_cashflow_never_dispatched():
    plant = make_plant(fuel="gas", variable_om=5.0, construction_cost=1000.0, fixed_om=50.0,
                       operating_period_yr=3, predev_period_yr=1, predev_cost=200.0)
    f = forecasts(5, fuel={"gas": 100.0})
    app = expected_cashflows(plant, PredictedPriceDurationCurve(0.0, 40.0), f, 0.1)
    assert app.cashflows == (-200.0, -1000.0, -50.0, -50.0, -50.0)
    expected = -200 - 1000 / 1.1 - 50 * (1.1 ** -2 + 1.1 ** -3 + 1.1 ** -4)
    assert npv(app) == pytest.approx(expected, rel=1e-12)


def test_cashflow_horizon_error():
    with pytest.raises(HorizonError):
        expected_cashflows(make_plant(operating_period_yr=5), PredictedPriceDurationCurve(0, 40), forecasts(2), 0.0)


def test_forecast_examples():
    t = np.arange(10)
    fit = fit_trend(100 * 1.02 ** t, "exponential")
    assert fit.model == "exponential" and 1.0199 <= fit.b <= 1.0201
    assert forecast_series([5, 7, 9, 11], 1)[0] == pytest.approx(13.0, abs=1e-12)
    assert fit_trend([0, 1, 2, 3], "exponential").model == "linear"
    with pytest.raises(InsufficientHistoryError):
        fit_trend([1.0])


def test_exponential_falls_back_when_worse():
    # a straight line is fitted better linearly than exponentially
    assert fit_trend([1, 2, 3, 4, 5, 6], "exponential").model == "linear"


def _menu():
    a = make_plant("a", cap=10.0, construction_cost=100.0)  # capital 1000
    b = make_plant("b", cap=10.0, construction_cost=100.0)
    return a, b


def test_decide_none_when_all_negative():
    g = GenCo("g", cash=1e9)
    menu = [make_plant("a", fuel="gas", construction_cost=10.0)]
    out = decide_investments(g, menu, PredictedPriceDurationCurve(0, 1.0), 2020, forecasts(fuel={"gas": 100.0}), 0.05)
    assert out == []


def test_decide_boundary_cash():
    g = GenCo("g", cash=250.0)
    a, _ = _menu()
    out = decide_investments(g, [a], PredictedPriceDurationCurve(0, 40.0), 2020, forecasts(), 0.0)
    assert len(out) == 1
    inv = out[0]
    assert inv.down_payment == 250.0 and inv.loan_principal == 750.0
    assert inv.commissioning_year == 2021


def test_decide_prefers_higher_npv_per_mw():
    g = GenCo("g", cash=300.0)
    cheap, dear = _menu()
    dear = dear.replace(construction_cost=120.0)
    out = decide_investments(g, [dear, cheap], PredictedPriceDurationCurve(0, 40.0), 2020, forecasts(), 0.0)
    assert [inv.plant.construction_cost for inv in out] == [100.0]


@given(st.floats(0, 5000), st.lists(st.floats(1, 300), min_size=1, max_size=5))
def test_decide_never_overspends(cash, costs):
    g = GenCo("g", cash=cash)
    menu = [make_plant(f"c{i}", cap=10.0, construction_cost=c) for i, c in enumerate(costs)]
    out = decide_investments(g, menu, PredictedPriceDurationCurve(0, 40.0), 2020, forecasts(), 0.0)
    assert sum(inv.down_payment for inv in out) <= cash * (1 + 1e-9) + 1e-9


def test_endogenous_flat_market():
    fleet = [make_plant(f"p{i}", cap=100.0, variable_om=30.0) for i in range(3)]
    curve = endogenous_price_curve(fleet, {}, 0.0, flat_slices([50, 120, 250]), 6000.0)
    assert curve.c == pytest.approx(30.0) and curve.m == pytest.approx(0.0, abs=1e-12)


def test_endogenous_empty_fleet():
    curve = endogenous_price_curve([], {}, 0.0, flat_slices([50, 120]), 6000.0)
    assert curve.price(80.0) == 6000.0


def test_ppdc_without_uncertainty_is_shared():
    base = PredictedPriceDurationCurve(0.001, 10.0)
    views = [base.perturbed(make_rng(s, 4)) for s in range(5)]
    assert all(v == base for v in views)
    noisy = PredictedPriceDurationCurve(0.001, 10.0, sigma_c=2.0)
    assert noisy.perturbed(make_rng(0, 4)).c != noisy.perturbed(make_rng(1, 4)).c
    with pytest.raises(ValueError):
        PredictedPriceDurationCurve(0, 0, sigma_m=-1)
