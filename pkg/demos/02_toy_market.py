"""
A three-year toy market
=======================

Five generation companies own twenty plants. Each year every plant bids
its short-run marginal cost, the market clears in merit order at a
uniform price, companies are settled, and then each company appraises new
plants against its predicted price curve and builds the ones with the best
NPV per MW that it can afford.
"""
from elecmarket.scenario import load_scenario
from elecmarket.simulation import run_simulation

scenario = load_scenario("toy_uk.yaml")
print(f"{scenario.name}: {len(scenario.gencos)} GenCos, {len(scenario.plants)} plants, "
      f"years {scenario.config.years}")

result = run_simulation(scenario, seed=0)
for year in result.years:
    mix = result.mix_shares(year)
    shares = ", ".join(f"{k} {v:4.1f}%" for k, v in mix.items())
    print(f"{year}: price {result.average_price(year):6.2f}/MWh, "
          f"carbon index {result.relative_carbon_intensity(year):6.1f} | {shares}")

print("\nBuilds:")
for inv in result.investments:
    print(f"  {inv.year} {inv.genco:<8} {inv.plant.technology.value:<8} {inv.plant.capacity_mw:6.0f} MW, "
          f"NPV {inv.npv_per_mw:10.0f}/MW, online {inv.commissioning_year}")

# A carbon tax pushes coal down the merit order, but it also makes new
# thermal plants unattractive. The exogenous price curve the companies
# invest against does not see the coming shortage, so nobody builds firm
# capacity and some 2020 demand goes unserved at the lost-load price.
from elecmarket.domain import CarbonTaxSchedule  # noqa: E402

taxed = run_simulation(scenario, seed=0, carbon=CarbonTaxSchedule.per_year(2018, [100.0] * 3))
print(f"\nWith a 100/t carbon tax the final carbon index is {taxed.relative_carbon_intensity():.1f} "
      f"(was {result.relative_carbon_intensity():.1f}).")
for year in taxed.years:
    led = taxed.ledger(year)
    print(f"  {year}: price {led.average_price:7.2f}/MWh, unserved {led.lost_load_mwh:10.0f} MWh")
