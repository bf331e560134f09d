"""
Representative days
===================

A year of hourly demand and renewable output is too long to clear hour by
hour inside an optimisation loop. Clustering the 365 days into k groups and
keeping one weighted day per group gives a short year that still reproduces
the duration curves. This script shows how the approximation error falls as
k grows.
"""
import numpy as np

from elecmarket.scenario import DATA_DIR
from elecmarket.temporal import approximation_metrics, load_daily_csv, representative_year

data = load_daily_csv(DATA_DIR / "archetypes_365.csv")
print(f"{data.n_days} days, series: {', '.join(data.kinds)}")

# Every representative year covers exactly 8760 hours, whatever k is.
print(f"\n{'k':>4} {'hours':>7} {'REE':>8} {'NRMSE':>8} {'CE':>8}")
for k in (1, 2, 4, 8, 16):
    rep = representative_year(data, k, seed=0)
    m = approximation_metrics(data, rep)
    print(f"{k:>4} {rep.total_hours:>7.0f} {m['ree_av']:>8.4f} {m['nrmse_av']:>8.4f} {m['ce_av']:>8.4f}")

# Weights are cluster sizes over the year: a day standing for 40 days counts 40 times.
rep = representative_year(data, 4, seed=0)
print("\nk=4 day weights x 365:", np.round(rep.weights * data.n_days).astype(int).tolist())
