"""Strategic bidding with tabular Q-learning and the market-power experiment.

A group of learner GenCos shares one policy: in every clearing step it picks a
price from a fixed grid between 0 and the market cap and all of its plants
bid that price; every other plant bids its SRMC. The default reward is the
step's clearing price, not the learner's profit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from elecmarket.domain import srmc
from elecmarket.market import Bid, available_profile, clear_step, demand_weighted_price
from elecmarket.outputs import write_csv
from elecmarket.stochastic import make_rng


@dataclass(frozen=True)
class MarketObservation:
    hour: int
    demand: int
    gas: int
    coal: int
    co2: int
    last_price: int

    def key(self):
        return (self.hour, self.demand, self.gas, self.coal, self.co2, self.last_price)


@dataclass
class QTable:
    n_actions: int
    alpha: float = 0.1
    gamma: float = 0.95
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")

    def row(self, state):
        """Q-values of ``state`` (zeros when unvisited; not stored until updated)."""
        row = self.values.get(state)
        return row if row is not None else np.zeros(self.n_actions)

    def __getitem__(self, key):
        state, action = key
        return float(self.row(state)[action])


def q_update(q, state, action, reward, next_state, alpha=None, gamma=None):
    """One temporal-difference step on entry (state, action); returns the TD error."""
    alpha = q.alpha if alpha is None else alpha
    gamma = q.gamma if gamma is None else gamma
    row = q.values.setdefault(state, np.zeros(q.n_actions))
    target = reward + gamma * float(q.row(next_state).max())
    delta = target - row[action]
    row[action] += alpha * delta
    return delta


def select_action(q, state, epsilon, rng):
    """Epsilon-greedy; greedy ties go to the lowest action index (lowest price)."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(q.n_actions))
    return int(np.argmax(q.row(state)))


def epsilon_schedule(episode, episodes, start=0.5, end=0.01, decay_fraction=0.8):
    """Exponential decay from ``start`` to ``end`` over the first ``decay_fraction`` of episodes."""
    span = decay_fraction * episodes
    if span <= 0 or episode >= span:
        return end
    return start * (end / start) ** (episode / span)


def _bucket(value, edges):
    return int(np.searchsorted(edges, value, side="right"))


@dataclass(frozen=True)
class Discretizer:
    """Maps raw market quantities to observation buckets."""

    hour_buckets: int
    demand_edges: tuple
    gas_edges: tuple
    coal_edges: tuple
    co2_edges: tuple
    price_edges: tuple

    @classmethod
    def build(cls, slices, gas, coal, co2, cap, hour_buckets=8, demand_buckets=5, level_buckets=3):
        order = np.argsort(slices.demand, kind="stable")
        cum = np.cumsum(slices.duration[order]) / slices.duration.sum()
        qs = np.arange(1, demand_buckets) / demand_buckets
        demand_edges = tuple(float(slices.demand[order][np.searchsorted(cum, q)]) for q in qs)

        def around(x):
            # low / usual / high against the reference level
            return (0.9 * x, 1.1 * x) if x > 0 else (0.5, 1.5)
        price_edges = tuple(cap * np.arange(1, level_buckets) / level_buckets)
        return cls(hour_buckets, demand_edges, around(gas), around(coal), around(co2), price_edges)

    def observe(self, hour, demand, gas, coal, co2, last_price):
        return MarketObservation(
            min(int(hour) * self.hour_buckets // 24, self.hour_buckets - 1),
            _bucket(demand, self.demand_edges),
            _bucket(gas, self.gas_edges),
            _bucket(coal, self.coal_edges),
            _bucket(co2, self.co2_edges),
            _bucket(last_price, self.price_edges),
        )


@dataclass
class MarketPowerReport:
    cap: float
    learners: tuple
    episodes: list  # (episode, mean_reward, avg_price, baseline_price)
    bid_histogram: dict  # price level -> count of learner bids in the final episode
    baseline_price: float
    q: QTable = field(repr=False, default=None)

    @property
    def final_price(self):
        return self.episodes[-1][2]

    @property
    def price_ratio(self):
        return self.final_price / self.baseline_price

    def bimodal_share(self, decile=0.1):
        """Share of final-episode bids in the bottom or top ``decile`` of the price grid."""
        levels = np.array(sorted(self.bid_histogram))
        counts = np.array([self.bid_histogram[l] for l in levels])
        n = len(levels)
        k = max(1, int(round(decile * n)))
        return float((counts[:k].sum() + counts[n - k:].sum()) / counts.sum())


def _market(scenario, year):
    fleet = [p for p in scenario.plants if p.is_operational(year)]
    owners = scenario.owners
    c = scenario.carbon.price(year)
    costs = {p.id: srmc(p, scenario.fuels[p.fuel].price(year), c) for p in fleet}
    return fleet, owners, costs, c


def run_market_power_experiment(scenario, learner_gencos, cap, episodes, seed=0, price_levels=25,
                                alpha=0.1, gamma=0.95, epsilon_start=0.5, epsilon_end=0.01,
                                decay_fraction=0.8, reward="price"):
    """Train a shared Q-learning policy for ``learner_gencos`` over repeated years.

    Each episode replays the scenario's start year (its clearing steps in
    order). The baseline is the same year with every plant bidding SRMC.
    """
    learners = tuple(sorted(set(learner_gencos)))
    if not learners:
        raise ValueError("learner set is empty")
    roster = {g.name for g in scenario.gencos}
    unknown = set(learners) - roster
    if unknown:
        raise ValueError(f"unknown learner GenCos {sorted(unknown)}")
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if not cap > 0:
        raise ValueError("cap must be > 0")
    if reward not in ("price", "profit"):
        raise ValueError(f"unknown reward {reward!r}")

    year = scenario.config.start_year
    slices = scenario.base_slices()
    fleet, owners, costs, co2 = _market(scenario, year)
    avail = {p.id: available_profile(p, slices) for p in fleet}
    is_learner = {p.id: owners[p.id] in learners for p in fleet}
    lost_load = scenario.config.lost_load_price
    grid = np.linspace(0.0, cap, price_levels)
    fuels = scenario.fuels
    gas = fuels["gas"].price(year) if "gas" in fuels else 0.0
    coal = fuels["coal"].price(year) if "coal" in fuels else 0.0
    disc = Discretizer.build(slices, gas, coal, co2, cap)

    def clear(s, learner_price):
        bids = [Bid(p.id, owners[p.id], learner_price if (learner_price is not None and is_learner[p.id])
                    else costs[p.id], float(avail[p.id][s])) for p in fleet]
        return clear_step(bids, float(slices.demand[s]), lost_load, cap, step=s)

    baseline_prices = [clear(s, None).clearing_price for s in range(len(slices))]
    baseline = demand_weighted_price(baseline_prices, slices.demand, slices.duration)

    q = QTable(price_levels, alpha, gamma)
    rng = make_rng(seed, 6)
    rows = []
    hist = {}
    for e in range(episodes):
        eps = epsilon_schedule(e, episodes, epsilon_start, epsilon_end, decay_fraction)
        last = 0.0
        state = disc.observe(slices.hour[0], slices.demand[0], gas, coal, co2, last).key()
        prices, rewards, actions = [], [], []
        for s in range(len(slices)):
            a = select_action(q, state, eps, rng)
            res = clear(s, float(grid[a]))
            if reward == "price":
                r = res.clearing_price
            else:
                r = sum(mw * (res.clearing_price - costs[pid]) for pid, mw in res.accepted if is_learner[pid])
            last = res.clearing_price
            nxt = s + 1 if s + 1 < len(slices) else 0
            next_state = disc.observe(slices.hour[nxt], slices.demand[nxt], gas, coal, co2, last).key()
            q_update(q, state, a, r, next_state)
            state = next_state
            prices.append(res.clearing_price)
            rewards.append(r)
            actions.append(a)
        avg = demand_weighted_price(prices, slices.demand, slices.duration)
        rows.append((e, float(np.mean(rewards)), avg, baseline))
        if e == episodes - 1:
            counts = np.bincount(actions, minlength=price_levels)
            hist = {float(grid[i]): int(counts[i]) for i in range(price_levels)}
    return MarketPowerReport(float(cap), learners, rows, hist, baseline, q)


def write_market_power_report(report, out_dir):
    a = write_csv(f"{out_dir}/market_power.csv", ["episode", "mean_reward", "avg_price", "baseline_price"],
                  report.episodes)
    b = write_csv(f"{out_dir}/bid_histogram.csv", ["price_bin", "count"], sorted(report.bid_histogram.items()))
    return {"report": a, "histogram": b}
