"""Scenario files: loading, validation and overrides.

A scenario is a YAML document. Top-level keys::

    name, start_year, horizon_yr, seed, demand_growth_per_yr,
    lost_load_price, market_cap, nuclear_subsidy
    temporal:       mode (ldc20 | rep_days), k, method, representative,
                    restarts, data, peak_demand_mw
    stochastic:     wacc, variable_om {low, high}, fuel_noise, demand_residuals
    price_curve:    mode (exogenous | endogenous), m, c, sigma_m, sigma_c,
                    per_year {year: [m, c]}, lookahead_yr
    investment:     enabled, nuclear_wacc, candidates [{technology, capacity_mw}]
    emission_factors: {technology: tCO2/MWh}
    fuels:          {name: {prices {year: price}, price_noise_std, emission_factor}}
    carbon_price:   {year: price} or a list starting at start_year
    technologies:   {technology: default plant parameters}
    plants:         [{id, technology, capacity_mw, commission_year, ...overrides}]
    plants_csv:     path to a CSV with one row per plant
    gencos:         [{name, cash, plants [ids], wacc_mean, wacc_std,
                      forecast_window_yr, down_payment_fraction, strategy}]

Relative paths resolve against the scenario file's directory, then against
the packaged data directory.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from elecmarket.domain import (
    DEFAULT_EMISSION_FACTORS,
    DEFAULT_LOST_LOAD_PRICE,
    NO_FUEL,
    CarbonTaxSchedule,
    FuelType,
    GenCo,
    PowerPlant,
    Technology,
)
from elecmarket.errors import InvalidPlantError, ScenarioError
from elecmarket.investment import PredictedPriceDurationCurve
from elecmarket.stochastic import ResidualDistribution
from elecmarket.temporal import (
    ldc_slices,
    load_daily_csv,
    representative_slices,
    representative_year,
)

DATA_DIR = Path(__file__).parent / "data"

PLANT_CSV_COLUMNS = [f.name for f in dataclasses.fields(PowerPlant) if f.name != "emission_factor"]

OVERRIDE_ALIASES = {"demand_growth": "demand_growth_per_yr", "horizon": "horizon_yr"}

_TECH_DEFAULTS = {
    "efficiency": 1.0,
    "operating_period_yr": 25,
    "predev_period_yr": 0,
    "predev_cost": 0.0,
    "construction_period_yr": 1,
    "construction_cost": 0.0,
    "infrastructure_cost": 0.0,
    "fixed_om": 0.0,
    "variable_om": 0.0,
    "availability": 1.0,
    "fuel": NO_FUEL,
}


@dataclass(frozen=True)
class ScenarioConfig:
    start_year: int
    horizon_yr: int
    demand_growth_per_yr: float = 0.0
    temporal_mode: str = "ldc20"
    k: int = 8
    cluster_method: str = "kmeans"
    representative: str = "medoid"
    restarts: int = 10
    nuclear_subsidy: float = 0.0
    lost_load_price: float = DEFAULT_LOST_LOAD_PRICE
    market_cap: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.horizon_yr < 1:
            raise ScenarioError("horizon_yr", "must be >= 1")
        if not self.demand_growth_per_yr > -1:
            raise ScenarioError("demand_growth_per_yr", "must be > -1")
        if self.temporal_mode not in ("ldc20", "rep_days"):
            raise ScenarioError("temporal.mode", f"unknown mode {self.temporal_mode!r}")
        if self.market_cap is not None and not self.market_cap > 0:
            raise ScenarioError("market_cap", "must be > 0")
        if self.market_cap is not None and self.lost_load_price <= self.market_cap:
            raise ScenarioError("lost_load_price", "must exceed the market cap")

    @property
    def years(self):
        return list(range(self.start_year, self.start_year + self.horizon_yr))


@dataclass(frozen=True)
class StochasticSettings:
    wacc: bool = False
    variable_om: tuple | None = None  # (low, high) multipliers
    fuel_noise: bool = False
    demand_residuals: ResidualDistribution | None = None

    @classmethod
    def disabled(cls):
        return cls()

    @property
    def any_enabled(self):
        return self.wacc or self.variable_om is not None or self.fuel_noise or self.demand_residuals is not None


@dataclass(frozen=True)
class PriceCurveSettings:
    mode: str = "exogenous"
    curve: PredictedPriceDurationCurve = PredictedPriceDurationCurve(0.0, 50.0)
    lookahead_yr: int = 10


@dataclass
class Scenario:
    name: str
    config: ScenarioConfig
    fuels: dict
    carbon: CarbonTaxSchedule
    plants: list
    gencos: list
    candidates: list
    stochastic: StochasticSettings
    price_curve: PriceCurveSettings
    investment_enabled: bool = True
    nuclear_wacc: float = 0.10
    temporal_data: Path | None = None
    peak_demand_mw: float | None = None
    raw: dict = field(default_factory=dict, repr=False)
    _slices: object = field(default=None, repr=False)

    @property
    def owners(self):
        return {pid: g.name for g in self.gencos for pid in g.plants}

    def genco(self, name):
        for g in self.gencos:
            if g.name == name:
                return g
        raise KeyError(name)

    def config_hash(self):
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def base_slices(self):
        """Clearing steps of the start year (cached)."""
        if self._slices is None:
            data = load_daily_csv(self.temporal_data)
            if self.peak_demand_mw:
                data = data.scaled("demand_mw", self.peak_demand_mw / data.values[:, 0].max())
            cfg = self.config
            if cfg.temporal_mode == "ldc20":
                self._slices = ldc_slices(data, 20)
            else:
                rep = representative_year(data, cfg.k, cfg.cluster_method, cfg.representative,
                                          cfg.restarts, seed=cfg.seed)
                self._slices = representative_slices(rep)
        return self._slices

    def with_changes(self, **changes):
        new = dataclasses.replace(self, **changes)
        if "config" in changes or "temporal_data" in changes or "peak_demand_mw" in changes:
            new._slices = None
        return new


def _resolve_path(value, base_dir):
    p = Path(value)
    if p.is_absolute():
        return p
    for root in (base_dir, DATA_DIR):
        if root is not None and (Path(root) / p).exists():
            return Path(root) / p
    raise ScenarioError("path", f"file {value!r} not found")


def apply_overrides(raw, overrides):
    """Set dotted-path keys (``a.b.c=value``); values are parsed as YAML scalars."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if isinstance(item, str):
            if "=" not in item:
                raise ScenarioError(item, "override must look like KEY=VALUE")
            key, value = item.split("=", 1)
            value = yaml.safe_load(value)
        else:
            key, value = item
        parts = key.strip().split(".")
        parts[0] = OVERRIDE_ALIASES.get(parts[0], parts[0])
        node = raw
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return raw


def _year_map(field_name, value, start_year):
    if value is None:
        return {}
    if isinstance(value, (int, float)):
        return {start_year: float(value)}
    if isinstance(value, list):
        return {start_year + i: float(v) for i, v in enumerate(value)}
    if isinstance(value, dict):
        try:
            return {int(k): float(v) for k, v in value.items()}
        except (TypeError, ValueError) as exc:
            raise ScenarioError(field_name, f"bad year series: {exc}") from None
    raise ScenarioError(field_name, "expected a number, list or {year: value} mapping")


def _technology(field_name, value):
    try:
        return Technology(value)
    except ValueError:
        raise ScenarioError(field_name, f"unknown technology {value!r}") from None


def _make_plant(field_name, spec, templates, emission_factors, fuels):
    tech = _technology(f"{field_name}.technology", spec.get("technology"))
    params = dict(_TECH_DEFAULTS)
    params.update(templates.get(tech, {}))
    params.update({k: v for k, v in spec.items() if k != "technology"})
    pid = params.get("id", "?")
    fuel = params.get("fuel", NO_FUEL)
    if fuel not in fuels:
        raise ScenarioError(f"{field_name}.fuel", f"plant {pid!r} references unknown fuel {fuel!r}")
    params.setdefault("is_intermittent", tech.is_intermittent)
    if "emission_factor" not in params:
        params["emission_factor"] = emission_factors.get(tech, fuels[fuel].emission_factor)
    missing = [c for c in ("id", "capacity_mw", "commission_year") if c not in params]
    if missing:
        raise ScenarioError(field_name, f"plant {pid!r} missing {', '.join(missing)}")
    unknown = set(params) - set(PLANT_CSV_COLUMNS) - {"emission_factor"}
    if unknown:
        raise ScenarioError(field_name, f"plant {pid!r} has unknown keys {sorted(unknown)}")
    try:
        return PowerPlant(
            id=str(params["id"]), technology=tech,
            capacity_mw=float(params["capacity_mw"]), efficiency=float(params["efficiency"]),
            operating_period_yr=int(params["operating_period_yr"]),
            predev_period_yr=int(params["predev_period_yr"]), predev_cost=float(params["predev_cost"]),
            construction_period_yr=int(params["construction_period_yr"]),
            construction_cost=float(params["construction_cost"]),
            infrastructure_cost=float(params["infrastructure_cost"]),
            fixed_om=float(params["fixed_om"]), variable_om=float(params["variable_om"]),
            availability=float(params["availability"]), fuel=str(fuel),
            commission_year=int(params["commission_year"]),
            is_intermittent=bool(params["is_intermittent"]),
            emission_factor=float(params["emission_factor"]),
        )
    except InvalidPlantError as exc:
        raise ScenarioError(field_name, str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(field_name, f"plant {pid!r}: {exc}") from None


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_plants_csv(path, fuels=None, emission_factors=None):
    """Plants from a CSV whose columns are exactly the PowerPlant fields in order."""
    emission_factors = DEFAULT_EMISSION_FACTORS if emission_factors is None else emission_factors
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != PLANT_CSV_COLUMNS:
            raise ScenarioError("plants_csv", f"columns must be {PLANT_CSV_COLUMNS}, got {header}")
        specs = []
        for row in reader:
            if not row:
                continue
            spec = dict(zip(header, row))
            spec["is_intermittent"] = _parse_bool(spec["is_intermittent"])
            specs.append(spec)
    fuels = fuels if fuels is not None else {s["fuel"]: FuelType(s["fuel"]) for s in specs}
    return [_make_plant(f"plants_csv[{i}]", s, {}, emission_factors, fuels) for i, s in enumerate(specs)]


def write_plants_csv(plants, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PLANT_CSV_COLUMNS)
        for p in plants:
            row = []
            for c in PLANT_CSV_COLUMNS:
                v = getattr(p, c)
                row.append(v.value if isinstance(v, Technology) else repr(v) if isinstance(v, float) else v)
            w.writerow(row)


def scenario_from_dict(raw, base_dir=None):
    raw = copy.deepcopy(raw)
    try:
        start = int(raw["start_year"])
        horizon = int(raw.get("horizon_yr", 1))
    except KeyError as exc:
        raise ScenarioError(exc.args[0], "required") from None
    temporal = raw.get("temporal", {}) or {}
    market_cap = raw.get("market_cap")
    config = ScenarioConfig(
        start_year=start,
        horizon_yr=horizon,
        demand_growth_per_yr=float(raw.get("demand_growth_per_yr", 0.0)),
        temporal_mode=temporal.get("mode", "ldc20"),
        k=int(temporal.get("k", 8)),
        cluster_method=temporal.get("method", "kmeans"),
        representative=temporal.get("representative", "medoid"),
        restarts=int(temporal.get("restarts", 10)),
        nuclear_subsidy=float(raw.get("nuclear_subsidy", 0.0)),
        lost_load_price=float(raw.get("lost_load_price", DEFAULT_LOST_LOAD_PRICE)),
        market_cap=None if market_cap is None else float(market_cap),
        seed=int(raw.get("seed", 0)),
    )

    fuels = {NO_FUEL: FuelType(NO_FUEL)}
    for name, spec in (raw.get("fuels") or {}).items():
        spec = spec or {}
        try:
            fuels[name] = FuelType(name, _year_map(f"fuels.{name}.prices", spec.get("prices"), start),
                                   float(spec.get("emission_factor", 0.0)),
                                   float(spec.get("price_noise_std", 0.0)))
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"fuels.{name}", str(exc)) from None

    try:
        carbon = CarbonTaxSchedule(_year_map("carbon_price", raw.get("carbon_price", 0.0), start), (0.0, None))
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("carbon_price", str(exc)) from None

    emission_factors = dict(DEFAULT_EMISSION_FACTORS)
    for k, v in (raw.get("emission_factors") or {}).items():
        emission_factors[_technology(f"emission_factors.{k}", k)] = float(v)

    templates = {}
    for k, v in (raw.get("technologies") or {}).items():
        templates[_technology(f"technologies.{k}", k)] = dict(v or {})

    plants = [_make_plant(f"plants[{i}]", spec, templates, emission_factors, fuels)
              for i, spec in enumerate(raw.get("plants") or [])]
    if raw.get("plants_csv"):
        plants += read_plants_csv(_resolve_path(raw["plants_csv"], base_dir), fuels, emission_factors)
    ids = [p.id for p in plants]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ScenarioError("plants", f"duplicate plant ids {dupes}")

    gencos = []
    owned = {}
    for i, spec in enumerate(raw.get("gencos") or []):
        spec = dict(spec)
        fname = f"gencos[{i}]"
        if "name" not in spec:
            raise ScenarioError(fname, "name required")
        for pid in spec.get("plants", []):
            if pid not in ids:
                raise ScenarioError(f"{fname}.plants", f"unknown plant {pid!r}")
            if pid in owned:
                raise ScenarioError(f"{fname}.plants", f"plant {pid!r} already owned by {owned[pid]!r}")
            owned[pid] = spec["name"]
        try:
            gencos.append(GenCo(name=str(spec["name"]), cash=float(spec.get("cash", 0.0)),
                                plants=tuple(spec.get("plants", [])),
                                wacc_mean=float(spec.get("wacc_mean", 0.059)),
                                wacc_std=float(spec.get("wacc_std", 0.03)),
                                forecast_window_yr=int(spec.get("forecast_window_yr", 5)),
                                down_payment_fraction=float(spec.get("down_payment_fraction", 0.25)),
                                strategy=spec.get("strategy", "srmc")))
        except ValueError as exc:
            raise ScenarioError(fname, str(exc)) from None
    orphans = [pid for pid in ids if pid not in owned]
    if orphans:
        raise ScenarioError("gencos", f"plants without an owner: {orphans}")

    inv = raw.get("investment") or {}
    candidates = []
    for i, spec in enumerate(inv.get("candidates") or []):
        spec = dict(spec)
        spec.setdefault("id", f"candidate-{i}")
        spec.setdefault("commission_year", start)
        cand = _make_plant(f"investment.candidates[{i}]", spec, templates, emission_factors, fuels)
        if cand.lead_time_yr < 1:
            raise ScenarioError(f"investment.candidates[{i}]",
                                "predev_period_yr + construction_period_yr must be >= 1")
        candidates.append(cand)

    st = raw.get("stochastic") or {}
    vom = st.get("variable_om")
    if vom is True:
        vom = (0.3, 2.0)
    elif isinstance(vom, dict):
        vom = (float(vom.get("low", 0.3)), float(vom.get("high", 2.0)))
    elif not vom:
        vom = None
    resid = st.get("demand_residuals")
    if resid:
        resid = ResidualDistribution(resid["family"], tuple(float(p) for p in resid["params"]))
    stochastic = StochasticSettings(bool(st.get("wacc", False)), vom, bool(st.get("fuel_noise", False)),
                                    resid or None)

    pc = raw.get("price_curve") or {}
    if pc.get("mode", "exogenous") not in ("exogenous", "endogenous"):
        raise ScenarioError("price_curve.mode", f"unknown mode {pc.get('mode')!r}")
    curve = PredictedPriceDurationCurve(
        float(pc.get("m", 0.0)), float(pc.get("c", 50.0)),
        {int(y): (float(v[0]), float(v[1])) for y, v in (pc.get("per_year") or {}).items()},
        float(pc.get("sigma_m", 0.0)), float(pc.get("sigma_c", 0.0)),
    )
    price_curve = PriceCurveSettings(pc.get("mode", "exogenous"), curve, int(pc.get("lookahead_yr", 10)))

    data = temporal.get("data", "synthetic_365.csv")
    return Scenario(
        name=str(raw.get("name", "scenario")),
        config=config,
        fuels=fuels,
        carbon=carbon,
        plants=plants,
        gencos=gencos,
        candidates=candidates,
        stochastic=stochastic,
        price_curve=price_curve,
        investment_enabled=bool(inv.get("enabled", True)),
        nuclear_wacc=float(inv.get("nuclear_wacc", 0.10)),
        temporal_data=_resolve_path(data, base_dir),
        peak_demand_mw=temporal.get("peak_demand_mw"),
        raw=raw,
    )


def load_scenario(path, overrides=None):
    path = Path(path)
    if not path.exists():
        path = _resolve_path(path, None)
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(str(path), "scenario file must contain a mapping")
    return scenario_from_dict(apply_overrides(raw, overrides), base_dir=path.parent)
