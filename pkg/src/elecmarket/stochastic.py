"""Seeded sampling and residual-distribution fitting.

Every random draw in a simulation run comes from a ``numpy.random.Generator``
(PCG64) derived from the master seed and a tuple of integer keys, so a run is
reproducible regardless of how runs are scheduled.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats

from elecmarket.errors import DegenerateDataError
from elecmarket.outputs import write_csv


def make_rng(seed, *keys):
    """Independent generator for ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


@dataclass(frozen=True)
class SamplerSpec:
    """How one uncertain quantity is drawn.

    ``gaussian`` draws Normal(mean, std); ``uniform-multiplier`` draws
    mean * Uniform(low, high); ``none`` returns the mean.
    """

    family: str = "none"
    mean: float = 0.0
    std: float = 0.0
    low: float = 0.3
    high: float = 2.0

    def __post_init__(self):
        if self.family not in ("gaussian", "uniform-multiplier", "none"):
            raise ValueError(f"unknown sampler family {self.family!r}")
        if self.std < 0:
            raise ValueError("std must be >= 0")
        if self.low > self.high:
            raise ValueError("low must not exceed high")

    def with_mean(self, mean):
        return SamplerSpec(self.family, mean, self.std, self.low, self.high)


def draw(spec, rng):
    if spec.family == "none":
        return spec.mean
    if spec.family == "gaussian":
        return float(rng.normal(spec.mean, spec.std))
    return float(spec.mean * rng.uniform(spec.low, spec.high))


_SCIPY = {
    "normal": stats.norm,
    "lognormal": stats.lognorm,
    "gamma": stats.gamma,
    "uniform": stats.uniform,
}
FAMILIES = tuple(_SCIPY)


@dataclass(frozen=True)
class ResidualDistribution:
    family: str
    params: tuple
    sse_fit_score: float = 0.0
    scores: dict = field(default_factory=dict, compare=False)

    @classmethod
    def point_mass(cls, value=0.0):
        return cls("normal", (float(value), 0.0))

    @cached_property
    def _frozen(self):
        return _SCIPY[self.family](*self.params)

    def sample(self, rng, size=None):
        if self.family == "normal":
            mu, sigma = self.params
            if sigma == 0:
                return mu if size is None else np.full(size, mu)
            return rng.normal(mu, sigma, size)
        return self._frozen.rvs(size=size, random_state=rng)

    def pdf(self, x):
        return self._frozen.pdf(x)

    @property
    def mean(self):
        if self.family == "normal":
            return self.params[0]
        return float(self._frozen.mean())


def _fit(family, x):
    if family == "normal":
        return (float(x.mean()), float(x.std()))
    if family == "uniform":
        return (float(x.min()), float(x.max() - x.min()))
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        return tuple(float(p) for p in _SCIPY[family].fit(x))


def fit_residual_distribution(residuals, families=FAMILIES, bins=50, tie_tol=0.02):
    """Fit each candidate family and keep the one with the lowest histogram SSE.

    The SSE compares the empirical density on ``bins`` equal-width bins over
    the observed range with each fitted density at the bin centres. Scores
    within ``tie_tol`` (relative) of the best count as ties and go to the
    family listed first, so an extra shape parameter does not win on noise.
    """
    x = np.asarray(residuals, dtype=float)
    if x.size == 0 or np.all(x == x[0]):
        raise DegenerateDataError("residuals are all equal")
    if x.size < 30:
        raise ValueError("at least 30 residuals are needed")
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValueError(f"unsupported families: {sorted(unknown)}")
    density, edges = np.histogram(x, bins=bins, density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    fitted = []
    for fam in families:
        try:
            params = _fit(fam, x)
            with np.errstate(all="ignore"):
                pdf = _SCIPY[fam](*params).pdf(centres)
            sse = float(((density - pdf) ** 2).sum())
        except (ValueError, RuntimeError, FloatingPointError):
            continue
        if np.isfinite(sse):
            fitted.append((fam, params, sse))
    if not fitted:
        raise DegenerateDataError("no candidate family could be fitted")
    best_sse = min(s for _, _, s in fitted)
    scores = {f: s for f, _, s in fitted}
    for fam, params, sse in fitted:
        if sse <= best_sse * (1 + tie_tol):
            return ResidualDistribution(fam, params, sse, scores)
    raise AssertionError("unreachable")


def perturb_demand(demand, dist, rng):
    """Demand plus one residual draw, floored at zero."""
    return max(0.0, float(demand) + float(dist.sample(rng)))


def read_residuals_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    return np.array([float(r[0]) for r in rows])


def write_fit_report_csv(dist, path):
    rows = [(fam, " ".join(repr(p) for p in dist.params) if fam == dist.family else "", float(sse),
             int(fam == dist.family)) for fam, sse in dist.scores.items()]
    return write_csv(path, ["family", "params", "sse", "selected"], rows)
