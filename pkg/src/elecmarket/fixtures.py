"""Synthetic hourly data used by the shipped fixtures and the tests.

``synthetic_year`` gives a UK-flavoured year (seasonal demand, weather-regime
wind, seasonal solar). ``archetype_year`` plants a known number of day
shapes, each repeated with small noise, so clustering quality is checkable.
"""
import numpy as np

from elecmarket.temporal import HOURS, SERIES_KINDS, DailySeriesMatrix


def _dates(n_days):
    start = np.datetime64("2018-01-01")
    return tuple(str(start + np.timedelta64(i, "D")) for i in range(n_days))


def _solar_shape(day_len):
    h = np.arange(HOURS) + 0.5
    rise, set_ = 12 - day_len / 2, 12 + day_len / 2
    return np.clip(np.sin(np.pi * (h - rise) / (set_ - rise)), 0, None) * ((h > rise) & (h < set_))


def synthetic_year(n_days=365, seed=2018):
    rng = np.random.default_rng(seed)
    d = np.arange(n_days)
    winter = np.cos(2 * np.pi * (d - 15) / 365.0)
    h = np.arange(HOURS)
    daily = 0.5 * (1 - np.cos(2 * np.pi * (h - 4) / 24.0)) + 0.25 * np.exp(-0.5 * ((h - 18) / 1.5) ** 2)

    # persistent weather regime drives both wind series
    regime = np.zeros(n_days)
    for i in range(1, n_days):
        regime[i] = 0.75 * regime[i - 1] + rng.normal(0, 0.5)

    values = np.empty((n_days, len(SERIES_KINDS), HOURS))
    for i in range(n_days):
        weekend = 0.92 if i % 7 in (5, 6) else 1.0
        base = 27000 + 5000 * winter[i]
        values[i, 0] = weekend * (base + 9000 * daily) + rng.normal(0, 600, HOURS)
        wind = 0.3 + 0.08 * winter[i] + 0.16 * regime[i]
        drift = np.cumsum(rng.normal(0, 0.02, HOURS))
        values[i, 1] = np.clip(wind + drift, 0.01, 0.99)
        values[i, 2] = np.clip(wind + 0.12 + 0.9 * drift + rng.normal(0, 0.02, HOURS), 0.01, 0.99)
        day_len = 12 - 4 * winter[i]
        cloud = rng.uniform(0.3, 1.0)
        values[i, 3] = np.clip(0.75 * cloud * (0.7 - 0.25 * winter[i]) * _solar_shape(day_len)
                               + np.abs(rng.normal(0, 0.005, HOURS)), 0, 1)
    return DailySeriesMatrix(values, SERIES_KINDS, _dates(n_days))


ARCHETYPES = {
    # (demand base, demand swing, onshore, offshore, solar peak, day length)
    "winter_windy": (36000, 9000, 0.65, 0.75, 0.10, 8),
    "winter_calm": (38000, 10000, 0.08, 0.12, 0.12, 8),
    "summer_sunny": (24000, 6000, 0.20, 0.30, 0.75, 16),
    "summer_overcast": (26000, 7000, 0.40, 0.50, 0.25, 16),
}


def archetype_year(n_days=365, seed=7, noise=0.03):
    """Days drawn from four planted archetypes with multiplicative noise."""
    rng = np.random.default_rng(seed)
    h = np.arange(HOURS)
    daily = 0.5 * (1 - np.cos(2 * np.pi * (h - 4) / 24.0))
    shapes = []
    for base, swing, on, off, sun, day_len in ARCHETYPES.values():
        wind_shape = 1 + 0.3 * np.sin(2 * np.pi * (h + rng.uniform(0, 24)) / 24.0)
        shapes.append(np.stack([
            base + swing * daily,
            np.clip(on * wind_shape, 0.01, 0.99),
            np.clip(off * wind_shape, 0.01, 0.99),
            sun * _solar_shape(day_len),
        ]))
    shapes = np.array(shapes)
    labels = rng.integers(len(shapes), size=n_days)
    values = shapes[labels] * rng.normal(1.0, noise, (n_days, len(SERIES_KINDS), HOURS))
    values[:, 1:] = np.clip(values[:, 1:], 0.0, 1.0)
    return DailySeriesMatrix(values, SERIES_KINDS, _dates(n_days)), labels
