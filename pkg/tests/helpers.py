"""Small builders shared by the test modules."""
import numpy as np

from elecmarket.domain import PowerPlant, Technology
from elecmarket.temporal import TimeSlices


def make_plant(pid="p", tech=Technology.CCGT, cap=1.0, **kw):
    tech = Technology(tech)
    base = dict(id=pid, technology=tech, capacity_mw=cap, efficiency=0.5, operating_period_yr=1,
                predev_period_yr=0, predev_cost=0.0, construction_period_yr=1, construction_cost=0.0,
                infrastructure_cost=0.0, fixed_om=0.0, variable_om=0.0, availability=1.0, fuel="none",
                commission_year=2000, is_intermittent=tech.is_intermittent, emission_factor=0.0)
    base.update(kw)
    return PowerPlant(**base)


def flat_slices(demand=(100.0,), hours=8760.0):
    d = np.asarray(demand, dtype=float)
    return TimeSlices(d, np.full(d.size, hours / d.size), np.zeros(d.size, dtype=int), {})


def two_regime_scenario(directory, low=3000.0, high=8000.0):
    """Learner 'big' owns 60% of capacity at SRMC 5; rivals cover low demand at SRMC 40.

    Half of every day sits at ``low`` demand (rivals alone can serve it) and
    half at ``high`` (the learner is pivotal).
    """
    from elecmarket.scenario import scenario_from_dict
    from elecmarket.temporal import SERIES_KINDS, DailySeriesMatrix, write_daily_csv

    values = np.zeros((365, len(SERIES_KINDS), 24))
    values[:, 0, :12] = low
    values[:, 0, 12:] = high
    dates = tuple(str(np.datetime64("2018-01-01") + i) for i in range(365))
    path = write_daily_csv(DailySeriesMatrix(values, SERIES_KINDS, dates), f"{directory}/two_regime.csv")
    plant = dict(technology="ccgt", efficiency=1.0, commission_year=2000, operating_period_yr=40)
    raw = {
        "name": "two-regime", "start_year": 2018, "horizon_yr": 1,
        "temporal": {"mode": "ldc20", "data": str(path)},
        "investment": {"enabled": False},
        "plants": [{**plant, "id": f"big-{i}", "capacity_mw": 2000.0, "variable_om": 5.0} for i in range(3)]
        + [{**plant, "id": f"rival-{i}", "capacity_mw": 2000.0, "variable_om": 40.0} for i in range(2)],
        "gencos": [{"name": "big", "plants": ["big-0", "big-1", "big-2"]},
                   {"name": "rival-a", "plants": ["rival-0"]}, {"name": "rival-b", "plants": ["rival-1"]}],
    }
    return scenario_from_dict(raw)
