"""Year-by-year market simulation: bid, clear, settle, invest."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from elecmarket.domain import Technology, srmc
from elecmarket.investment import (
    Forecasts,
    decide_investments,
    endogenous_price_curve,
    fit_trend,
    write_investment_log,
)
from elecmarket.market import Bid, available_profile, clear_step, settle_year
from elecmarket.outputs import write_csv
from elecmarket.stochastic import make_rng, perturb_demand

# RNG stream identifiers (first key after the seed)
STREAM_VOM, STREAM_FUEL, STREAM_WACC, STREAM_PPDC, STREAM_DEMAND = 1, 2, 3, 4, 5

MIX_GROUPS = {
    "wind": ("onshore", "offshore"),
    "nuclear": ("nuclear",),
    "solar": ("pv",),
    "ccgt": ("ccgt",),
    "coal": ("coal",),
}


@dataclass
class SimulationResult:
    scenario_name: str
    seed: int
    ledgers: list
    clearings: list  # (year, step, demand_mw, clearing_price, lost_load_mw)
    investments: list
    base_intensity: float
    plants: dict = field(default_factory=dict)

    @property
    def years(self):
        return [l.year for l in self.ledgers]

    def ledger(self, year=None):
        if year is None:
            return self.ledgers[-1]
        for l in self.ledgers:
            if l.year == year:
                return l
        raise KeyError(year)

    def average_price(self, year=None):
        return self.ledger(year).average_price

    def relative_carbon_intensity(self, year=None):
        intensity = self.ledger(year).carbon_intensity
        if self.base_intensity > 0:
            return 100.0 * intensity / self.base_intensity
        return 0.0 if intensity == 0 else float("inf")

    def mix_shares(self, year=None):
        """Percentage shares of the grouped technologies (wind, nuclear, solar, ccgt, coal)."""
        shares = self.ledger(year).shares()
        return {g: sum(shares.get(t, 0.0) for t in techs) for g, techs in MIX_GROUPS.items()}


def _fuel_price_table(scenario, year, rng):
    """Fuel purchase price per GenCo for one year, with optional Gaussian noise."""
    table = {}
    for g in scenario.gencos:
        prices = {}
        for name, fuel in scenario.fuels.items():
            p = fuel.price(year)
            if rng is not None and fuel.price_noise_std > 0:
                p = max(0.0, p + float(rng.normal(0.0, fuel.price_noise_std)))
            prices[name] = p
        table[g.name] = prices
    return table


def _clear_year(fleet, costs, slices, cap, lost_load_price, owners, demand=None):
    demand = slices.demand if demand is None else demand
    profiles = {p.id: available_profile(p, slices) for p in fleet}
    out = []
    for s in range(len(slices)):
        bids = [Bid(p.id, owners[p.id], costs[p.id], float(profiles[p.id][s])) for p in fleet]
        out.append(clear_step(bids, float(demand[s]), lost_load_price, cap, step=s))
    return out


def reference_intensity(scenario):
    """Carbon intensity of the start year: initial fleet, zero carbon price, no sampling."""
    year = scenario.config.start_year
    fleet = [p for p in scenario.plants if p.is_operational(year)]
    owners = scenario.owners
    costs = {p.id: srmc(p, scenario.fuels[p.fuel].price(year), 0.0) for p in fleet}
    slices = scenario.base_slices()
    clearings = _clear_year(fleet, costs, slices, scenario.config.market_cap,
                            scenario.config.lost_load_price, owners)
    ledger = settle_year(clearings, slices.duration, {p.id: p for p in fleet}, owners, year)
    return ledger.carbon_intensity


def _forecasts(scenario, genco, year, horizon, slices, carbon, growth):
    w = genco.forecast_window_yr
    t = np.arange(w - 1, w - 1 + horizon)
    fuel = {name: np.maximum(fit_trend(f.history(year, w), "linear").predict(t), 0.0)
            for name, f in scenario.fuels.items()}
    carbon_fc = np.maximum(fit_trend(carbon.history(year, w), "linear").predict(t), 0.0)
    offsets = np.arange(year - w + 1, year + 1) - scenario.config.start_year
    totals = slices.demand.dot(slices.duration) / (1 + growth) ** (year - scenario.config.start_year) \
        * (1 + growth) ** offsets
    trend = fit_trend(totals, "exponential")
    factor = trend.predict(t) / trend.predict(w - 1)
    return Forecasts(slices, fuel, carbon_fc, factor)


def run_simulation(scenario, seed=None, carbon=None, ppdc=None, nuclear_subsidy=None,
                   stochastic=None, invest=None):
    """Simulate ``scenario.config.horizon_yr`` years.

    ``carbon``, ``ppdc``, ``nuclear_subsidy`` and ``stochastic`` replace the
    scenario's own settings (the optimisation harnesses use this). Random
    draws come from streams keyed on ``seed`` so results depend only on the
    seed and the inputs.
    """
    cfg = scenario.config
    seed = cfg.seed if seed is None else int(seed)
    carbon = scenario.carbon if carbon is None else carbon
    curve = scenario.price_curve.curve if ppdc is None else ppdc
    subsidy = cfg.nuclear_subsidy if nuclear_subsidy is None else nuclear_subsidy
    st = scenario.stochastic if stochastic is None else stochastic
    invest = scenario.investment_enabled if invest is None else invest
    growth = cfg.demand_growth_per_yr

    owners = dict(scenario.owners)
    gencos = list(scenario.gencos)
    cash = {g.name: g.cash for g in gencos}

    def sample_vom(plant, *keys):
        if st.variable_om is None:
            return plant
        lo, hi = st.variable_om
        return plant.replace(variable_om=plant.variable_om * float(make_rng(seed, STREAM_VOM, *keys).uniform(lo, hi)))

    plants = {p.id: sample_vom(p, 0, i) for i, p in enumerate(scenario.plants)}
    base = scenario.base_slices()
    horizon = max((c.lifetime_yr for c in scenario.candidates), default=1)

    ledgers, clearing_rows, investments = [], [], []
    for j, year in enumerate(cfg.years):
        slices = base.with_demand(base.demand * (1.0 + growth) ** j)
        demand = slices.demand
        if st.demand_residuals is not None:
            rng = make_rng(seed, STREAM_DEMAND, year)
            demand = np.array([perturb_demand(d, st.demand_residuals, rng) for d in demand])

        fleet = [p for p in plants.values() if p.is_operational(year)]
        fuel_prices = _fuel_price_table(scenario, year, make_rng(seed, STREAM_FUEL, year) if st.fuel_noise else None)
        c_price = carbon.price(year)
        costs = {p.id: srmc(p, fuel_prices[owners[p.id]][p.fuel], c_price) for p in fleet}
        clearings = _clear_year(fleet, costs, slices, cfg.market_cap, cfg.lost_load_price, owners, demand)

        loans = {g.name: 0.0 for g in gencos}
        for inv in investments:
            if inv.plant.commission_year <= year < inv.plant.commission_year + inv.plant.operating_period_yr:
                loans[inv.genco] += inv.loan_payment
        ledger = settle_year(clearings, slices.duration, {p.id: p for p in fleet}, owners, year,
                             subsidy, loans, cash)
        cash = dict(ledger.cash)
        ledgers.append(ledger)
        clearing_rows += [(year, r.step, r.demand, r.clearing_price, r.lost_load) for r in clearings]

        if not invest or not scenario.candidates or j == cfg.horizon_yr - 1:
            continue
        if scenario.price_curve.mode == "endogenous":
            ahead = year + scenario.price_curve.lookahead_yr
            projected = [p for p in plants.values() if p.is_operational(ahead)]
            base_prices = {n: f.price(ahead) for n, f in scenario.fuels.items()}
            sl = slices.with_demand(slices.demand * (1.0 + growth) ** scenario.price_curve.lookahead_yr)
            year_curve = endogenous_price_curve(projected, base_prices, carbon.price(ahead), sl,
                                                cfg.lost_load_price)
            year_curve = type(year_curve)(year_curve.m, year_curve.c, {}, curve.sigma_m, curve.sigma_c)
        else:
            year_curve = curve.for_year(year)
        ppdc_rng = make_rng(seed, STREAM_PPDC, year)
        wacc_rng = make_rng(seed, STREAM_WACC, year)
        for gi, g in enumerate(gencos):
            view = year_curve.perturbed(ppdc_rng)
            z = float(wacc_rng.standard_normal()) if st.wacc else 0.0
            rates = {}
            for tech in Technology:
                mean = scenario.nuclear_wacc if tech is Technology.NUCLEAR else g.wacc_mean
                rates[tech] = max(0.0, mean + g.wacc_std * z)
            fc = _forecasts(scenario, g, year, horizon, slices, carbon, growth)
            chosen = decide_investments(g, scenario.candidates, view, year, fc, rates, subsidy, cash[g.name])
            for k, inv in enumerate(chosen):
                cash[g.name] -= inv.down_payment
                plant = sample_vom(inv.plant, year, gi, k)
                plants[plant.id] = plant
                owners[plant.id] = g.name
                investments.append(inv)

    return SimulationResult(scenario.name, seed, ledgers, clearing_rows, investments,
                            reference_intensity(scenario), plants)


def write_results(result, out_dir):
    """Write mix, clearing, investment, ledger and summary CSVs into ``out_dir``."""
    paths = {}
    mix = []
    for l in result.ledgers:
        shares = l.shares()
        for tech in sorted(l.mwh):
            mix.append((l.year, tech, l.mwh[tech], shares[tech], l.tco2[tech]))
    paths["mix"] = write_csv(f"{out_dir}/mix.csv", ["year", "technology", "mwh", "share", "tco2"], mix)
    paths["clearing"] = write_csv(f"{out_dir}/clearing.csv",
                                  ["year", "step", "demand_mw", "clearing_price", "lost_load_mw"],
                                  result.clearings)
    paths["investments"] = write_investment_log(result.investments, f"{out_dir}/investments.csv")
    rows = []
    for l in result.ledgers:
        for g in sorted(l.cash):
            rows.append((l.year, g, l.income[g], l.subsidy_income[g], l.fixed_costs[g],
                         l.loan_payments[g], l.cash[g], int(l.cash[g] < 0)))
    paths["ledger"] = write_csv(
        f"{out_dir}/ledger.csv",
        ["year", "genco", "income", "subsidy_income", "fixed_costs", "loan_payments", "cash", "negative_cash"],
        rows)
    paths["summary"] = write_csv(
        f"{out_dir}/summary.csv",
        ["year", "average_price", "carbon_intensity", "relative_carbon_intensity", "lost_load_mwh"],
        [(l.year, l.average_price, l.carbon_intensity, result.relative_carbon_intensity(l.year),
          l.lost_load_mwh) for l in result.ledgers])
    return paths
