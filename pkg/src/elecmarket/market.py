"""Uniform-price merit-order spot market and yearly settlement."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from elecmarket.domain import Technology
from elecmarket.errors import InvalidBidError


@dataclass(frozen=True)
class Bid:
    plant_id: str
    genco_id: str
    price: float
    quantity: float

    def __post_init__(self):
        if self.quantity < 0:
            raise InvalidBidError(f"bid for {self.plant_id}: negative quantity {self.quantity}")


@dataclass(frozen=True)
class ClearingResult:
    step: int
    demand: float
    accepted: tuple  # (plant_id, dispatched MW) pairs, merit order
    clearing_price: float
    lost_load: float

    @property
    def dispatched(self):
        return dict(self.accepted)


def clear_step(bids, demand, lost_load_price, cap=None, step=0):
    """Accept the cheapest bids until demand is met; everyone is paid the marginal price.

    Equal prices are dispatched in plant-id order and the marginal bid may be
    partially accepted. Bid prices above ``cap`` are lowered to the cap at
    submission. Unserved demand is lost load and sets the price to
    ``lost_load_price``.
    """
    if demand < 0:
        raise ValueError("demand must be >= 0")
    offers = []
    for b in bids:
        if b.quantity < 0:
            raise InvalidBidError(f"bid for {b.plant_id}: negative quantity {b.quantity}")
        price = min(b.price, cap) if cap is not None else b.price
        offers.append((price, b.plant_id, b.quantity))
    offers.sort(key=lambda o: (o[0], o[1]))

    remaining = demand
    accepted = []
    marginal = 0.0
    for price, plant_id, qty in offers:
        if remaining <= 0:
            break
        if qty <= 0:
            continue
        take = min(qty, remaining)
        accepted.append((plant_id, take))
        marginal = price
        remaining -= take
    lost = max(remaining, 0.0)
    if lost > 1e-9:
        price = lost_load_price
    else:
        lost = 0.0
        price = marginal if demand > 0 else 0.0
    return ClearingResult(step, float(demand), tuple(accepted), float(price), float(lost))


def available_quantity(plant, cf=None):
    """MW a plant can offer in one step given that step's capacity factors."""
    if plant.is_intermittent:
        key = plant.technology.capacity_factor_key
        if key is None:
            raise ValueError(f"plant {plant.id}: no capacity-factor series for {plant.technology.value}")
        return plant.capacity_mw * float(cf[key])
    return plant.capacity_mw * plant.availability


def available_profile(plant, slices):
    """Vector of available MW for every step of a :class:`TimeSlices` year."""
    if plant.is_intermittent:
        return plant.capacity_mw * np.asarray(slices.cf[plant.technology.capacity_factor_key])
    return np.full(len(slices), plant.capacity_mw * plant.availability)


@dataclass
class YearLedger:
    year: int
    income: dict = field(default_factory=dict)
    fixed_costs: dict = field(default_factory=dict)
    loan_payments: dict = field(default_factory=dict)
    subsidy_income: dict = field(default_factory=dict)
    cash: dict = field(default_factory=dict)
    mwh: dict = field(default_factory=dict)
    tco2: dict = field(default_factory=dict)
    average_price: float = 0.0
    lost_load_mwh: float = 0.0

    def net(self, genco):
        return (self.income.get(genco, 0.0) + self.subsidy_income.get(genco, 0.0)
                - self.fixed_costs.get(genco, 0.0) - self.loan_payments.get(genco, 0.0))

    @property
    def negative_cash(self):
        """GenCos whose balance went below zero this year."""
        return sorted(g for g, c in self.cash.items() if c < 0)

    @property
    def total_mwh(self):
        return sum(self.mwh.values())

    @property
    def carbon_intensity(self):
        total = self.total_mwh
        return sum(self.tco2.values()) / total if total > 0 else 0.0

    def shares(self):
        """Percentage of generation per technology."""
        total = self.total_mwh
        return {t: 100.0 * v / total if total > 0 else 0.0 for t, v in self.mwh.items()}


def demand_weighted_price(prices, demand, duration):
    prices, demand, duration = (np.asarray(a, dtype=float) for a in (prices, demand, duration))
    energy = demand * duration
    return float((prices * energy).sum() / energy.sum()) if energy.sum() > 0 else 0.0


def settle_year(clearings, durations, plants, owners, year=0, nuclear_subsidy=0.0,
                loan_payments=None, opening_cash=None):
    """Pay dispatched energy at the clearing price and charge yearly costs.

    ``plants`` is the operational fleet (id -> PowerPlant); each pays its
    fixed O&M. Nuclear output earns ``nuclear_subsidy`` per MWh on top of the
    market price. Closing cash is reported per GenCo and may go negative.
    """
    loan_payments = loan_payments or {}
    ledger = YearLedger(year)
    income = defaultdict(float)
    subsidy = defaultdict(float)
    mwh = defaultdict(float)
    tco2 = defaultdict(float)
    prices, demands = [], []
    for res, dur in zip(clearings, durations, strict=True):
        prices.append(res.clearing_price)
        demands.append(res.demand)
        ledger.lost_load_mwh += res.lost_load * dur
        for plant_id, mw in res.accepted:
            plant = plants[plant_id]
            energy = mw * dur
            owner = owners[plant_id]
            income[owner] += energy * res.clearing_price
            if plant.technology is Technology.NUCLEAR:
                subsidy[owner] += energy * nuclear_subsidy
            mwh[plant.technology.value] += energy
            tco2[plant.technology.value] += energy * plant.emission_factor
    fixed = defaultdict(float)
    for plant_id, plant in plants.items():
        fixed[owners[plant_id]] += plant.fixed_cost
        mwh.setdefault(plant.technology.value, 0.0)
        tco2.setdefault(plant.technology.value, 0.0)

    gencos = set(owners.values()) | set(loan_payments) | set(opening_cash or {})
    for g in sorted(gencos):
        ledger.income[g] = float(income[g])
        ledger.subsidy_income[g] = float(subsidy[g])
        ledger.fixed_costs[g] = float(fixed[g])
        ledger.loan_payments[g] = float(loan_payments.get(g, 0.0))
        ledger.cash[g] = (opening_cash or {}).get(g, 0.0) + ledger.net(g)
    ledger.mwh = {t: float(v) for t, v in sorted(mwh.items())}
    ledger.tco2 = {t: float(v) for t, v in sorted(tco2.items())}
    ledger.average_price = demand_weighted_price(prices, demands, list(durations))
    return ledger


def relative_carbon_intensity(ledger, base_intensity):
    """Carbon intensity of the year as an index against a base (base = 100)."""
    if not base_intensity > 0:
        raise ValueError("base_intensity must be > 0")
    return 100.0 * ledger.carbon_intensity / base_intensity
