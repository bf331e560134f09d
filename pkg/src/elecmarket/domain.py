"""Core market entities: fuels, plants, generation companies, carbon taxes.

Everything here is a plain value type. Simulation state (cash balances,
investment pipelines) lives in :mod:`elecmarket.simulation`.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from elecmarket.errors import InvalidPlantError

NO_FUEL = "none"


class Technology(str, Enum):
    CCGT = "ccgt"
    COAL = "coal"
    NUCLEAR = "nuclear"
    ONSHORE = "onshore"
    OFFSHORE = "offshore"
    PV = "pv"
    RECIP_GAS = "recip_gas"
    HYDRO = "hydro"
    OTHER = "other"

    @property
    def capacity_factor_key(self):
        """Name of the hourly capacity-factor series driving this technology, if any."""
        return _CF_KEYS.get(self)

    @property
    def is_intermittent(self):
        return self in _CF_KEYS


_CF_KEYS = {
    Technology.ONSHORE: "onshore_cf",
    Technology.OFFSHORE: "offshore_cf",
    Technology.PV: "solar_cf",
}

# Configuration defaults, not measured values. Scenario files may override.
DEFAULT_EMISSION_FACTORS = {
    Technology.COAL: 0.9,
    Technology.CCGT: 0.35,
    Technology.RECIP_GAS: 0.5,
}

DEFAULT_LOST_LOAD_PRICE = 6000.0


@dataclass(frozen=True)
class FuelType:
    """A fuel with a yearly purchase price series (£/MWh thermal).

    ``prices`` maps calendar year to price. Years outside the series take the
    value of the nearest year that is present.
    """

    name: str
    prices: Mapping[int, float] = field(default_factory=dict)
    emission_factor: float = 0.0
    price_noise_std: float = 0.0

    def __post_init__(self):
        if self.emission_factor < 0:
            raise ValueError(f"fuel {self.name!r}: emission_factor must be >= 0")
        if self.price_noise_std < 0:
            raise ValueError(f"fuel {self.name!r}: price_noise_std must be >= 0")
        if any(p < 0 for p in self.prices.values()):
            raise ValueError(f"fuel {self.name!r}: negative price")

    def price(self, year):
        if not self.prices:
            return 0.0
        if year in self.prices:
            return float(self.prices[year])
        years = sorted(self.prices)
        if year < years[0]:
            return float(self.prices[years[0]])
        return float(self.prices[max(y for y in years if y <= year)])

    def history(self, year, window):
        """Known prices for the ``window`` years ending at ``year``."""
        return np.array([self.price(y) for y in range(year - window + 1, year + 1)])


@dataclass(frozen=True)
class PowerPlant:
    # Field order is the CSV column order for plant files (emission_factor excluded).
    id: str
    technology: Technology
    capacity_mw: float
    efficiency: float
    operating_period_yr: int
    predev_period_yr: int
    predev_cost: float
    construction_period_yr: int
    construction_cost: float
    infrastructure_cost: float
    fixed_om: float
    variable_om: float
    availability: float
    fuel: str
    commission_year: int
    is_intermittent: bool
    emission_factor: float = 0.0

    def __post_init__(self):
        if not isinstance(self.technology, Technology):
            object.__setattr__(self, "technology", Technology(self.technology))
        if not self.capacity_mw > 0:
            raise InvalidPlantError(f"plant {self.id}: capacity_mw must be > 0")
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidPlantError(f"plant {self.id}: efficiency must lie in [0, 1]")
        if not 0.0 <= self.availability <= 1.0:
            raise InvalidPlantError(f"plant {self.id}: availability must lie in [0, 1]")
        for name in ("predev_cost", "construction_cost", "infrastructure_cost",
                     "fixed_om", "variable_om", "emission_factor"):
            if getattr(self, name) < 0:
                raise InvalidPlantError(f"plant {self.id}: {name} must be >= 0")
        for name in ("operating_period_yr", "predev_period_yr", "construction_period_yr"):
            if getattr(self, name) < 0:
                raise InvalidPlantError(f"plant {self.id}: {name} must be >= 0")
        if self.operating_period_yr < 1:
            raise InvalidPlantError(f"plant {self.id}: operating_period_yr must be >= 1")

    @property
    def burns_fuel(self):
        return self.fuel != NO_FUEL

    @property
    def lead_time_yr(self):
        return self.predev_period_yr + self.construction_period_yr

    @property
    def lifetime_yr(self):
        return self.predev_period_yr + self.construction_period_yr + self.operating_period_yr

    @property
    def capital_cost(self):
        """Total up-front capital: pre-development, construction and connection."""
        return (self.predev_cost + self.construction_cost) * self.capacity_mw + self.infrastructure_cost

    @property
    def fixed_cost(self):
        return self.fixed_om * self.capacity_mw

    def is_operational(self, year):
        return self.commission_year <= year < self.commission_year + self.operating_period_yr

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class GenCo:
    name: str
    cash: float
    plants: tuple = ()
    wacc_mean: float = 0.059
    wacc_std: float = 0.03
    forecast_window_yr: int = 5
    down_payment_fraction: float = 0.25
    strategy: str = "srmc"

    def __post_init__(self):
        self.plants = tuple(self.plants)
        if not 0.0 <= self.down_payment_fraction <= 1.0:
            raise ValueError(f"genco {self.name}: down_payment_fraction must lie in [0, 1]")
        if self.wacc_std < 0:
            raise ValueError(f"genco {self.name}: wacc_std must be >= 0")
        if self.forecast_window_yr < 2:
            raise ValueError(f"genco {self.name}: forecast_window_yr must be >= 2")
        if self.strategy not in ("srmc", "learned"):
            raise ValueError(f"genco {self.name}: unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class CarbonTaxSchedule:
    """Carbon price (£/tCO2) per simulation year."""

    prices: Mapping[int, float]
    bounds: tuple = (0.0, 250.0)

    def __post_init__(self):
        lo, hi = self.bounds
        for year, p in self.prices.items():
            if p < lo or (hi is not None and p > hi):
                raise ValueError(f"carbon price {p} in {year} outside bounds {self.bounds}")

    @classmethod
    def per_year(cls, start_year, genes, bounds=(0.0, 250.0)):
        return cls({start_year + i: float(g) for i, g in enumerate(genes)}, bounds)

    @classmethod
    def linear(cls, start_year, n_years, gradient, intercept):
        """Price ``gradient * t + intercept`` for year offset t = 0, 1, ..., floored at 0."""
        prices = {start_year + t: max(0.0, gradient * t + intercept) for t in range(n_years)}
        return cls(prices, (0.0, None))

    def price(self, year):
        if not self.prices:
            return 0.0
        if year in self.prices:
            return float(self.prices[year])
        years = sorted(self.prices)
        if year < years[0]:
            return float(self.prices[years[0]])
        return float(self.prices[max(y for y in years if y <= year)])

    def history(self, year, window):
        return np.array([self.price(y) for y in range(year - window + 1, year + 1)])


def srmc(plant: PowerPlant, fuel_price: float, carbon_price: float) -> float:
    """Short-run marginal cost in £/MWh.

    Fuel cost per electrical MWh plus carbon cost plus variable O&M. Capital
    and fixed costs are excluded.
    """
    fuel_cost = 0.0
    if plant.burns_fuel:
        if plant.efficiency <= 0:
            raise InvalidPlantError(f"plant {plant.id}: fuel-burning plant with zero efficiency")
        fuel_cost = fuel_price / plant.efficiency
    return fuel_cost + plant.emission_factor * carbon_price + plant.variable_om


def apply_demand_growth(segments: Sequence[float], factor: float) -> list:
    """Scale every demand level by ``1 + factor`` (profile shape unchanged)."""
    if not factor > -1:
        raise ValueError("demand growth factor must be > -1")
    return [s * (1.0 + factor) for s in segments]


def annuity_payment(principal, rate, periods):
    """Level yearly payment that repays ``principal`` over ``periods`` years at ``rate``."""
    if periods <= 0 or principal == 0:
        return 0.0
    if math.isclose(rate, 0.0, abs_tol=1e-12):
        return principal / periods
    return principal * rate / (1.0 - (1.0 + rate) ** -periods)
