"""Agent-based wholesale electricity market simulator."""

__version__ = "0.1.0"

from elecmarket.domain import (  # noqa: E402
    CarbonTaxSchedule,
    FuelType,
    GenCo,
    PowerPlant,
    Technology,
    apply_demand_growth,
    srmc,
)
from elecmarket.market import Bid, ClearingResult, clear_step, settle_year  # noqa: E402
from elecmarket.scenario import load_scenario  # noqa: E402
from elecmarket.simulation import run_simulation  # noqa: E402

__all__ = [
    "Bid",
    "CarbonTaxSchedule",
    "ClearingResult",
    "FuelType",
    "GenCo",
    "PowerPlant",
    "Technology",
    "apply_demand_growth",
    "clear_step",
    "load_scenario",
    "run_simulation",
    "settle_year",
    "srmc",
]
