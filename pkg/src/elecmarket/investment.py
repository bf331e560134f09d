"""Capacity investment: forecasting, NPV appraisal and greedy build decisions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from elecmarket.domain import Technology, annuity_payment, srmc
from elecmarket.errors import HorizonError, InsufficientHistoryError
from elecmarket.market import Bid, available_profile, clear_step
from elecmarket.outputs import write_csv


@dataclass(frozen=True)
class PredictedPriceDurationCurve:
    """Linear price expectation ``price = m * demand_mw + c``.

    ``per_year`` optionally maps a decision year to its own ``(m, c)``.
    ``sigma_m``/``sigma_c`` give the spread of the per-GenCo perturbation.
    """

    m: float
    c: float
    per_year: Mapping[int, tuple] = field(default_factory=dict)
    sigma_m: float = 0.0
    sigma_c: float = 0.0

    def __post_init__(self):
        if self.sigma_m < 0 or self.sigma_c < 0:
            raise ValueError("PPDC uncertainty must be >= 0")

    def for_year(self, year):
        if year in self.per_year:
            m, c = self.per_year[year]
            return PredictedPriceDurationCurve(float(m), float(c), {}, self.sigma_m, self.sigma_c)
        return PredictedPriceDurationCurve(self.m, self.c, {}, self.sigma_m, self.sigma_c)

    def price(self, demand):
        return self.m * np.asarray(demand, dtype=float) + self.c

    def perturbed(self, rng):
        """One GenCo's view of the curve; identical to self when both sigmas are zero."""
        if self.sigma_m == 0 and self.sigma_c == 0:
            return self
        return PredictedPriceDurationCurve(
            self.m + float(rng.normal(0.0, self.sigma_m)) if self.sigma_m else self.m,
            self.c + float(rng.normal(0.0, self.sigma_c)) if self.sigma_c else self.c,
            self.per_year, self.sigma_m, self.sigma_c,
        )


@dataclass(frozen=True)
class CashflowAppraisal:
    """Net cash flow per year, t = 0 being the decision year."""

    discount_rate: float
    cashflows: tuple

    @property
    def periods(self):
        return len(self.cashflows)


def npv(appraisal, discount_rate=None):
    """Sum of cash flows discounted at ``(1 + i) ** t``.

    Accepts a :class:`CashflowAppraisal` or a plain sequence plus a rate.
    """
    if isinstance(appraisal, CashflowAppraisal):
        cashflows, rate = appraisal.cashflows, appraisal.discount_rate
    else:
        cashflows, rate = appraisal, discount_rate
    if not rate > -1:
        raise ValueError("discount rate must be > -1")
    total = 0.0
    for t, r in enumerate(cashflows):
        total += r / (1.0 + rate) ** t
    return total


@dataclass(frozen=True)
class Forecasts:
    """Expected market inputs for years t = 0 .. len-1 after a decision.

    ``demand_factor[t]`` scales the demand of ``slices`` (the current year's
    clearing steps) to year t.
    """

    slices: object
    fuel_price: Mapping[str, np.ndarray]
    carbon_price: np.ndarray
    demand_factor: np.ndarray

    @property
    def horizon(self):
        return len(self.carbon_price)


def expected_cashflows(plant, ppdc, forecasts, discount_rate, nuclear_subsidy=0.0):
    """Yearly net cash flows of a prospective plant under a price expectation.

    Capital is spent evenly over the pre-development and construction years.
    In each operating year the plant runs in every step where the expected
    price covers its forecast SRMC, earning the price margin on that energy
    (plus the nuclear subsidy), less fixed O&M.
    """
    n = plant.lifetime_yr
    if forecasts.horizon < n or len(forecasts.demand_factor) < n:
        raise HorizonError(f"forecasts cover {forecasts.horizon} years, plant needs {n}")
    r = np.zeros(n)
    pd_, cd = plant.predev_period_yr, plant.construction_period_yr
    predev = plant.predev_cost * plant.capacity_mw
    build = plant.construction_cost * plant.capacity_mw + plant.infrastructure_cost
    if pd_ > 0:
        r[:pd_] -= predev / pd_
    else:
        r[0] -= predev
    if cd > 0:
        r[pd_:pd_ + cd] -= build / cd
    else:
        r[pd_] -= build

    slices = forecasts.slices
    avail = available_profile(plant, slices) * slices.duration
    fuel = forecasts.fuel_price.get(plant.fuel) if plant.burns_fuel else None
    for t in range(plant.lead_time_yr, n):
        cost = srmc(plant, 0.0 if fuel is None else float(fuel[t]), float(forecasts.carbon_price[t]))
        price = ppdc.price(slices.demand * forecasts.demand_factor[t])
        energy = avail * (price >= cost)
        margin = float((energy * (price - cost)).sum())
        if plant.technology is Technology.NUCLEAR:
            margin += nuclear_subsidy * float(energy.sum())
        r[t] += margin - plant.fixed_cost
    return CashflowAppraisal(float(discount_rate), tuple(float(v) for v in r))


@dataclass(frozen=True)
class Trend:
    model: str  # "linear" or "exponential"
    a: float
    b: float

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        if self.model == "exponential":
            return self.a * self.b ** t
        return self.a + self.b * t


def fit_trend(history, model="linear"):
    """Least-squares trend on t = 0..n-1.

    The exponential model ``a * b**t`` is fitted in log space and replaced by
    the linear fit when the data are not all positive, the fit is not finite,
    or its squared error exceeds the linear fit's.
    """
    y = np.asarray(history, dtype=float)
    if y.size < 2:
        raise InsufficientHistoryError("at least two history points are needed")
    t = np.arange(y.size, dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    linear = Trend("linear", float(intercept), float(slope))
    if model == "linear":
        return linear
    if model != "exponential":
        raise ValueError(f"unknown forecast model {model!r}")
    if np.any(y <= 0):
        return linear
    with np.errstate(all="ignore"):
        lb, la = np.polyfit(t, np.log(y), 1)
        expo = Trend("exponential", float(np.exp(la)), float(np.exp(lb)))
    if not (np.isfinite(expo.a) and np.isfinite(expo.b)):
        return linear
    sse_exp = float(((expo.predict(t) - y) ** 2).sum())
    sse_lin = float(((linear.predict(t) - y) ** 2).sum())
    return expo if sse_exp <= sse_lin * (1 + 1e-12) + 1e-12 else linear


def forecast_series(history, horizon, model="linear"):
    """The ``horizon`` values following ``history`` under the fitted trend."""
    n = len(history)
    return fit_trend(history, model).predict(np.arange(n, n + horizon))


@dataclass(frozen=True)
class Investment:
    genco: str
    plant: object
    year: int
    npv: float
    npv_per_mw: float
    discount_rate: float
    down_payment: float
    loan_principal: float

    @property
    def commissioning_year(self):
        return self.plant.commission_year

    @property
    def loan_payment(self):
        return annuity_payment(self.loan_principal, self.discount_rate, self.plant.operating_period_yr)


def _rate_for(discount_rate, technology):
    if isinstance(discount_rate, Mapping):
        return discount_rate[technology]
    return discount_rate


def appraise_menu(menu, ppdc, forecasts, discount_rate, nuclear_subsidy=0.0):
    """(candidate, npv, rate) for each menu entry, in menu order."""
    out = []
    for cand in menu:
        rate = _rate_for(discount_rate, cand.technology)
        value = npv(expected_cashflows(cand, ppdc, forecasts, rate, nuclear_subsidy))
        out.append((cand, value, rate))
    return out


def decide_investments(genco, menu, ppdc, year, forecasts, discount_rate, nuclear_subsidy=0.0, cash=None):
    """Greedy build list for one GenCo in one year.

    Candidates are ranked by NPV per MW; each positive-NPV candidate is built
    once if the remaining cash covers its down payment. Commissioning happens
    ``P_D + C_D`` years after ``year``.
    """
    cash = genco.cash if cash is None else cash
    appraisals = appraise_menu(menu, ppdc, forecasts, discount_rate, nuclear_subsidy)
    ranked = sorted(enumerate(appraisals), key=lambda e: (-e[1][1] / e[1][0].capacity_mw, e[0]))
    chosen = []
    for i, (cand, value, rate) in ranked:
        if value <= 0:
            break
        capital = cand.capital_cost
        down = genco.down_payment_fraction * capital
        if down > cash + 1e-9 * max(1.0, abs(cash)):
            continue
        cash = max(cash - down, 0.0)
        plant = cand.replace(id=f"{genco.name}-{cand.technology.value}-{year}-{i}",
                             commission_year=year + cand.lead_time_yr)
        chosen.append(Investment(genco.name, plant, year, value, value / cand.capacity_mw,
                                 rate, down, capital - down))
    return chosen


def endogenous_price_curve(fleet, fuel_prices, carbon_price, slices, lost_load_price):
    """Fit ``price = m * demand + c`` to one simulated year of SRMC clearings.

    Steps that clear at the lost-load price are left out of the fit (the line
    extrapolates over them). With no step served, the curve is flat at the
    lost-load price.
    """
    costs = {}
    avail = {}
    for p in fleet:
        costs[p.id] = srmc(p, fuel_prices.get(p.fuel, 0.0) if p.burns_fuel else 0.0, carbon_price)
        avail[p.id] = available_profile(p, slices)
    demand, price, weight = [], [], []
    for s in range(len(slices)):
        bids = [Bid(p.id, "", costs[p.id], float(avail[p.id][s])) for p in fleet]
        res = clear_step(bids, float(slices.demand[s]), lost_load_price, step=s)
        if res.lost_load > 0:
            continue
        demand.append(res.demand)
        price.append(res.clearing_price)
        weight.append(float(slices.duration[s]))
    if not demand:
        return PredictedPriceDurationCurve(0.0, float(lost_load_price))
    demand, price, weight = map(np.asarray, (demand, price, weight))
    if np.ptp(demand) == 0:
        return PredictedPriceDurationCurve(0.0, float(np.average(price, weights=weight)))
    m, c = np.polyfit(demand, price, 1, w=np.sqrt(weight))
    return PredictedPriceDurationCurve(float(m), float(c))


def write_investment_log(investments, path):
    return write_csv(path, ["year", "genco", "technology", "capacity_mw", "npv_per_mw", "commissioning_year"],
                     [(inv.year, inv.genco, inv.plant.technology.value, float(inv.plant.capacity_mw),
                       float(inv.npv_per_mw), inv.commissioning_year) for inv in investments])
