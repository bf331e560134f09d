"""Time axis of the simulation: load-duration segments and representative days.

A year is reduced either to a 20-segment load-duration curve or to ``k``
weighted representative days selected by clustering. Three metrics measure
how well the reduced year reproduces the observed hourly data: relative
energy error, duration-curve NRMSE and pairwise correlation error.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from elecmarket.errors import MetricUndefinedError
from elecmarket.outputs import write_csv

SERIES_KINDS = ("demand_mw", "onshore_cf", "offshore_cf", "solar_cf")
CF_KINDS = SERIES_KINDS[1:]
HOURS = 24


@dataclass(frozen=True)
class DailySeriesMatrix:
    """Hourly observations grouped by day: ``values[day, kind, hour]``."""

    values: np.ndarray
    kinds: tuple = SERIES_KINDS
    dates: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3 or values.shape[2] != HOURS:
            raise ValueError("values must have shape (days, kinds, 24)")
        if values.shape[1] != len(self.kinds):
            raise ValueError("kinds do not match values")
        for j, kind in enumerate(self.kinds):
            if kind.endswith("_cf") and (values[:, j].min() < 0 or values[:, j].max() > 1):
                raise ValueError(f"{kind} must lie in [0, 1]")
            if kind == "demand_mw" and values[:, j].min() <= 0:
                raise ValueError("demand must be positive")
        object.__setattr__(self, "values", values)
        if not self.dates:
            object.__setattr__(self, "dates", tuple(str(i) for i in range(values.shape[0])))

    @property
    def n_days(self):
        return self.values.shape[0]

    def series(self, kind):
        """Chronological hourly series of one kind (length 24 * days)."""
        return self.values[:, self.kinds.index(kind), :].reshape(-1)

    def features(self):
        """Per-day feature vectors, each kind min-max scaled over the dataset."""
        v = self.values.copy()
        for j in range(v.shape[1]):
            lo, hi = v[:, j].min(), v[:, j].max()
            v[:, j] = (v[:, j] - lo) / (hi - lo) if hi > lo else 0.0
        return v.reshape(v.shape[0], -1)

    def scaled(self, kind, factor):
        v = self.values.copy()
        v[:, self.kinds.index(kind)] *= factor
        return DailySeriesMatrix(v, self.kinds, self.dates)


def load_daily_csv(path):
    """Read hourly data with columns date, hour, demand_mw, onshore_cf, offshore_cf, solar_cf."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            hour = int(row["hour"])
            if not 0 <= hour < HOURS:
                raise ValueError(f"hour {hour} out of range in {path}")
            day = rows.setdefault(row["date"], {})
            day[hour] = [float(row[k]) for k in SERIES_KINDS]
    dates = sorted(rows)
    values = np.empty((len(dates), len(SERIES_KINDS), HOURS))
    for i, d in enumerate(dates):
        if len(rows[d]) != HOURS:
            raise ValueError(f"day {d} has {len(rows[d])} hours, expected 24")
        for h in range(HOURS):
            values[i, :, h] = rows[d][h]
    return DailySeriesMatrix(values, SERIES_KINDS, tuple(dates))


def write_daily_csv(data, path):
    rows = ((d, h, *map(float, data.values[i, :, h])) for i, d in enumerate(data.dates) for h in range(HOURS))
    return write_csv(path, ["date", "hour", *data.kinds], rows)


# -- clustering ---------------------------------------------------------------

def _kmeans_pp_init(x, k, rng):
    n = x.shape[0]
    centres = [x[rng.integers(n)]]
    d2 = ((x - centres[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centres.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centres)


def _lloyd(x, k, rng, max_iter=300):
    centres = _kmeans_pp_init(x, k, rng)
    labels = None
    for _ in range(max_iter):
        dist = ((x[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        new = dist.argmin(axis=1)
        # keep every cluster populated: move the worst-served point into an empty one
        for j in range(k):
            if not np.any(new == j):
                worst = dist[np.arange(len(x)), new].argmax()
                new[worst] = j
                dist[worst, :] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centres = np.array([x[labels == j].mean(axis=0) for j in range(k)])
    sse = float(sum(((x[labels == j] - centres[j]) ** 2).sum() for j in range(k)))
    return labels, sse


def _canonical(labels):
    """Renumber clusters in order of first appearance."""
    mapping = {}
    for lab in labels:
        mapping.setdefault(int(lab), len(mapping))
    return np.array([mapping[int(lab)] for lab in labels])


def cluster_days(data, k, method="kmeans", restarts=10, seed=0):
    """Assign each day to one of ``k`` non-empty clusters.

    k-means keeps the restart with the lowest within-cluster squared error;
    ties go to the lower restart index. Ward's method is deterministic and
    ignores ``restarts`` and ``seed``.
    """
    x = data.features() if isinstance(data, DailySeriesMatrix) else np.asarray(data, dtype=float)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if k == n:
        return np.arange(n)
    if k == 1:
        return np.zeros(n, dtype=int)
    if method == "ward":
        labels = fcluster(linkage(x, method="ward"), k, criterion="maxclust") - 1
        return _canonical(labels)
    if method != "kmeans":
        raise ValueError(f"unknown clustering method {method!r}")
    seeds = np.random.SeedSequence(seed).spawn(max(1, restarts))
    best = None
    for idx, ss in enumerate(seeds):
        labels, sse = _lloyd(x, k, np.random.default_rng(ss))
        if best is None or (sse, idx) < best[:2]:
            best = (sse, idx, labels)
    return _canonical(best[2])


def select_representative(members, mode="medoid", features=None):
    """Representative day of one cluster.

    ``members`` holds the member days (any trailing shape). The medoid is the
    member with the smallest summed Euclidean distance to the others,
    measured on ``features`` when given; the centroid is the element-wise mean.
    """
    members = np.asarray(members, dtype=float)
    if members.shape[0] == 0:
        raise ValueError("empty cluster")
    if mode == "centroid":
        return members.mean(axis=0)
    if mode != "medoid":
        raise ValueError(f"unknown representative mode {mode!r}")
    f = members.reshape(members.shape[0], -1) if features is None else np.asarray(features)
    dist = np.sqrt(((f[:, None, :] - f[None, :, :]) ** 2).sum(axis=2))
    return members[int(dist.sum(axis=1).argmin())]


def cluster_weights(assignment):
    """Fraction of days in each cluster, indexed by cluster label."""
    assignment = np.asarray(assignment)
    counts = np.bincount(assignment)
    return counts / assignment.size


@dataclass(frozen=True)
class RepresentativeYear:
    """Weighted representative days; ``days[i, kind, hour]``."""

    days: np.ndarray
    weights: np.ndarray
    source_day_count: int
    kinds: tuple = SERIES_KINDS

    @property
    def k(self):
        return self.days.shape[0]

    @property
    def day_durations(self):
        """Hours represented by each hour slot of each representative day."""
        d = np.asarray(self.weights) * self.source_day_count
        rounded = np.round(d)
        # rational weights n_i / N give integer day counts; remove float noise
        if np.allclose(d, rounded, rtol=0, atol=1e-9):
            return rounded
        return d

    @property
    def hour_durations(self):
        return np.repeat(self.day_durations, HOURS)

    @property
    def total_hours(self):
        return float(self.hour_durations.sum())

    def series(self, kind):
        return self.days[:, self.kinds.index(kind), :].reshape(-1)


def assemble_representative_year(reps, weights, source_day_count, kinds=SERIES_KINDS):
    reps = np.asarray(reps, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if reps.shape[0] != weights.shape[0]:
        raise ValueError(f"{reps.shape[0]} representative days but {weights.shape[0]} weights")
    return RepresentativeYear(reps, weights, int(source_day_count), tuple(kinds))


def representative_year(data, k=8, method="kmeans", mode="medoid", restarts=10, seed=0):
    """Cluster ``data`` and build the weighted representative year."""
    labels = cluster_days(data, k, method=method, restarts=restarts, seed=seed)
    feats = data.features()
    reps = []
    for j in range(labels.max() + 1):
        idx = np.flatnonzero(labels == j)
        reps.append(select_representative(data.values[idx], mode, features=feats[idx]))
    return assemble_representative_year(reps, cluster_weights(labels), data.n_days, data.kinds)


def write_representative_year_csv(rep, path):
    rows = ((i, float(rep.weights[i]), h, *map(float, rep.days[i, :, h])) for i in range(rep.k) for h in range(HOURS))
    return write_csv(path, ["rep_day_index", "weight", "hour", *rep.kinds], rows)


def read_representative_year_csv(path, source_day_count=365):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        kinds = tuple(c for c in reader.fieldnames if c not in ("rep_day_index", "weight", "hour"))
        rows = list(reader)
    k = max(int(r["rep_day_index"]) for r in rows) + 1
    days = np.zeros((k, len(kinds), HOURS))
    weights = np.zeros(k)
    for r in rows:
        i, h = int(r["rep_day_index"]), int(r["hour"])
        weights[i] = float(r["weight"])
        days[i, :, h] = [float(r[c]) for c in kinds]
    return RepresentativeYear(days, weights, source_day_count, kinds)


# -- duration curves and approximation metrics ----------------------------------

@dataclass(frozen=True)
class DurationCurve:
    values: np.ndarray
    hour_weights: np.ndarray

    @property
    def total_duration(self):
        return float(self.hour_weights.sum())

    @property
    def energy(self):
        return float((self.values * self.hour_weights).sum())

    def resample(self, n=1000):
        """Curve value at ``n`` evenly spaced duration quantiles (bin midpoints)."""
        edges = np.cumsum(self.hour_weights) / self.total_duration
        q = (np.arange(n) + 0.5) / n
        idx = np.searchsorted(edges, q, side="right")
        return self.values[np.minimum(idx, len(self.values) - 1)]


def duration_curve(values, durations=None):
    """Sort values high to low, carrying durations; equal values are merged."""
    values = np.asarray(values, dtype=float)
    durations = np.ones_like(values) if durations is None else np.asarray(durations, dtype=float)
    if np.any(durations <= 0):
        raise ValueError("durations must be positive")
    order = np.argsort(-values, kind="stable")
    v, d = values[order], durations[order]
    uniq, start = np.unique(-v, return_index=True)
    merged = np.add.reduceat(d, start)
    return DurationCurve(-uniq, merged)


def ree_av(observed, approx):
    """Mean relative energy error across series."""
    errs = []
    for obs, app in zip(observed, approx, strict=True):
        total = obs.energy
        if total == 0:
            raise ZeroDivisionError("observed series has zero total")
        errs.append(abs(total - app.energy) / total)
    return float(np.mean(errs))


def nrmse_av(observed, approx, grid=1000):
    """Mean range-normalised RMSE between duration curves on a common quantile grid."""
    errs = []
    for obs, app in zip(observed, approx, strict=True):
        span = obs.values.max() - obs.values.min()
        if span == 0:
            raise ZeroDivisionError("observed duration curve is constant")
        a, b = obs.resample(grid), app.resample(grid)
        errs.append(np.sqrt(np.mean((a - b) ** 2)) / span)
    return float(np.mean(errs))


def pearson(p1, p2, weights=None):
    """Pearson correlation; ``weights`` act as repeat counts for each sample."""
    p1, p2 = np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)
    w = np.ones_like(p1) if weights is None else np.asarray(weights, dtype=float)
    m1 = (w * p1).sum() / w.sum()
    m2 = (w * p2).sum() / w.sum()
    d1, d2 = p1 - m1, p2 - m2
    denom = np.sqrt((w * d1 * d1).sum() * (w * d2 * d2).sum())
    if denom == 0:
        raise MetricUndefinedError("correlation undefined for a constant series")
    return float(np.clip((w * d1 * d2).sum() / denom, -1.0, 1.0))


def ce_av(observed, approx, observed_weights=None, approx_weights=None):
    """Mean absolute change in pairwise correlation between series."""
    n = len(observed)
    if n < 2 or len(approx) != n:
        raise ValueError("ce_av needs at least two matching series")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            c_obs = pearson(observed[i], observed[j], observed_weights)
            c_app = pearson(approx[i], approx[j], approx_weights)
            total += abs(c_obs - c_app)
    return 2.0 / (n * (n - 1)) * total


def approximation_metrics(data, rep):
    """REE, NRMSE and CE of a representative year against the full data."""
    obs_dc, app_dc, obs_s, app_s = [], [], [], []
    hours = rep.hour_durations
    for kind in data.kinds:
        o, a = data.series(kind), rep.series(kind)
        obs_dc.append(duration_curve(o))
        app_dc.append(duration_curve(a, hours))
        obs_s.append(o)
        app_s.append(a)
    return {
        "ree_av": ree_av(obs_dc, app_dc),
        "nrmse_av": nrmse_av(obs_dc, app_dc),
        "ce_av": ce_av(obs_s, app_s, approx_weights=hours),
    }


def write_metrics_csv(rows, path):
    return write_csv(path, ["k", "method", "ree_av", "nrmse_av", "ce_av"],
                     [(r["k"], r["method"], float(r["ree_av"]), float(r["nrmse_av"]), float(r["ce_av"])) for r in rows])


# -- simulation time slices -------------------------------------------------------

@dataclass(frozen=True)
class TimeSlices:
    """Clearing steps of one simulated year.

    Each step has a demand level, the hours it stands for, an hour-of-day
    label and the capacity factors of the intermittent resources.
    """

    demand: np.ndarray
    duration: np.ndarray
    hour: np.ndarray
    cf: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.demand)

    @property
    def total_hours(self):
        return float(self.duration.sum())

    def with_demand(self, demand):
        return TimeSlices(np.asarray(demand, dtype=float), self.duration, self.hour, self.cf)


def ldc_slices(data, n_segments=20):
    """Load-duration-curve segments: hours sorted by demand, split into equal-duration blocks.

    Each segment carries the mean demand and mean capacity factors of its
    hours, so the demand/renewable correlation survives the reduction.
    """
    demand = data.series("demand_mw")
    order = np.argsort(-demand, kind="stable")
    blocks = np.array_split(order, n_segments)
    cf = {k: np.array([data.series(k)[b].mean() for b in blocks]) for k in data.kinds if k.endswith("_cf")}
    return TimeSlices(
        demand=np.array([demand[b].mean() for b in blocks]),
        duration=np.array([float(len(b)) for b in blocks]),
        hour=np.arange(n_segments) % HOURS,
        cf=cf,
    )


def representative_slices(rep):
    return TimeSlices(
        demand=rep.series("demand_mw").copy(),
        duration=rep.hour_durations.astype(float),
        hour=np.tile(np.arange(HOURS), rep.k),
        cf={k: rep.series(k).copy() for k in rep.kinds if k.endswith("_cf")},
    )


def default_data_path(name):
    return Path(__file__).parent / "data" / name
