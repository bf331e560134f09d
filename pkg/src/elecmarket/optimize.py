"""Genetic search: NSGA-II for multi-objective problems, an elitist GA for one objective.

Both work on real-valued genomes inside box bounds, use simulated binary
crossover and polynomial mutation, and draw generation ``g``'s randomness
from ``make_rng(seed, g)`` so a run resumed from its archive continues
exactly as the uninterrupted run would.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from elecmarket.domain import CarbonTaxSchedule
from elecmarket.errors import InvalidStateError, InvalidTargetError
from elecmarket.investment import PredictedPriceDurationCurve
from elecmarket.outputs import read_csv, write_csv
from elecmarket.simulation import MIX_GROUPS, run_simulation
from elecmarket.stochastic import make_rng

log = logging.getLogger(__name__)

ETA_CROSSOVER = 15.0
ETA_MUTATION = 20.0


@dataclass
class Individual:
    genome: np.ndarray
    objectives: np.ndarray | None = None

    @property
    def evaluated(self):
        return self.objectives is not None


@dataclass
class RankedIndividual:
    individual: Individual
    rank: int
    distance: float
    index: int

    @property
    def genome(self):
        return self.individual.genome

    @property
    def objectives(self):
        return self.individual.objectives


def dominates(a, b):
    """True when ``a`` is no worse than ``b`` everywhere and better somewhere (minimisation)."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def _objective_matrix(population):
    rows = []
    for ind in population:
        obj = ind.objectives if isinstance(ind, (Individual, RankedIndividual)) else ind
        if obj is None:
            raise InvalidStateError("cannot rank an unevaluated individual")
        rows.append(np.asarray(obj, dtype=float))
    return np.array(rows, dtype=float).reshape(len(rows), -1)


def fast_non_dominated_sort(population):
    """Fronts of population indices; front 0 is the non-dominated set.

    Accepts individuals or raw objective vectors.
    """
    f = _objective_matrix(population)
    n = len(f)
    if n == 0:
        return []
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    done = np.zeros(n, dtype=bool)
    fronts = []
    while not done.all():
        current = np.flatnonzero((count == 0) & ~done)
        fronts.append(current.tolist())
        done[current] = True
        count = count - dom[current].sum(axis=0)
    return fronts


def crowding_distance(front_objectives):
    """Crowding distance of each point of one front (boundaries are infinite)."""
    f = np.asarray(front_objectives, dtype=float)
    n = len(f)
    if n == 0:
        raise ValueError("front is empty")
    f = f.reshape(n, -1)
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for m in range(f.shape[1]):
        order = np.argsort(f[:, m], kind="stable")
        lo, hi = f[order[0], m], f[order[-1], m]
        d[order[0]] = d[order[-1]] = np.inf
        with np.errstate(invalid="ignore"):
            span = hi - lo
        if not np.isfinite(span) or span <= 0:
            continue
        d[order[1:-1]] += (f[order[2:], m] - f[order[:-2], m]) / span
    return d


def crowded_compare(a, b):
    """-1 if ``a`` is preferred, 1 if ``b`` is, 0 only when a and b are the same entry.

    Lower rank wins, then larger crowding distance, then lower index.
    """
    ka = (a.rank, -a.distance, a.index)
    kb = (b.rank, -b.distance, b.index)
    return -1 if ka < kb else (1 if ka > kb else 0)


def rank_population(population):
    """RankedIndividual wrappers (rank starts at 1) in population order."""
    objs = _objective_matrix(population)
    ranked = [None] * len(population)
    for r, front in enumerate(fast_non_dominated_sort(objs), start=1):
        dist = crowding_distance(objs[front])
        for i, d in zip(front, dist):
            ind = population[i].individual if isinstance(population[i], RankedIndividual) else population[i]
            ranked[i] = RankedIndividual(ind, r, float(d), i)
    return ranked


def sbx_crossover(x1, x2, lower, upper, rng, eta=ETA_CROSSOVER):
    """Bounded simulated binary crossover; each gene crosses with probability 1/2."""
    c1, c2 = np.array(x1, dtype=float), np.array(x2, dtype=float)
    for i in range(len(c1)):
        lo, hi = lower[i], upper[i]
        if rng.random() > 0.5 or hi <= lo or abs(c1[i] - c2[i]) <= 1e-14:
            continue
        y1, y2 = min(c1[i], c2[i]), max(c1[i], c2[i])
        u = rng.random()
        children = []
        for beta in (1.0 + 2.0 * (y1 - lo) / (y2 - y1), 1.0 + 2.0 * (hi - y2) / (y2 - y1)):
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                bq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                bq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            children.append(bq)
        a = min(max(0.5 * (y1 + y2 - children[0] * (y2 - y1)), lo), hi)
        b = min(max(0.5 * (y1 + y2 + children[1] * (y2 - y1)), lo), hi)
        if rng.random() <= 0.5:
            a, b = b, a
        c1[i], c2[i] = a, b
    return c1, c2


def polynomial_mutation(x, lower, upper, rng, eta=ETA_MUTATION, gene_prob=None):
    """Bounded polynomial mutation; each gene mutates with ``gene_prob`` (default 1/len)."""
    y = np.array(x, dtype=float)
    gene_prob = 1.0 / len(y) if gene_prob is None else gene_prob
    for i in range(len(y)):
        lo, hi = lower[i], upper[i]
        if rng.random() > gene_prob or hi <= lo:
            continue
        d1, d2 = (y[i] - lo) / (hi - lo), (hi - y[i]) / (hi - lo)
        u = rng.random()
        power = 1.0 / (eta + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            dq = val ** power - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - val ** power
        y[i] = min(max(y[i] + dq * (hi - lo), lo), hi)
    return y


def _bounds(bounds):
    b = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if np.any(b[:, 0] > b[:, 1]):
        raise ValueError("lower bound above upper bound")
    return b[:, 0], b[:, 1]


def _random_genomes(n, lower, upper, rng):
    return lower + (upper - lower) * rng.random((n, len(lower)))


def _safe_call(args):
    evaluator, genome = args
    try:
        return np.atleast_1d(np.asarray(evaluator(genome), dtype=float)), None
    except Exception as exc:  # noqa: BLE001 - any evaluator failure is recorded, not fatal
        return None, f"{type(exc).__name__}: {exc}"


class _Evaluator:
    """Evaluates genomes in order, optionally on a process pool."""

    def __init__(self, fn, workers=None, n_objectives=None):
        self.fn = fn
        self.n_objectives = n_objectives
        self.pool = ProcessPoolExecutor(max_workers=workers) if workers and workers > 1 else None

    def __call__(self, genomes):
        jobs = [(self.fn, g) for g in genomes]
        results = list(self.pool.map(_safe_call, jobs)) if self.pool else [_safe_call(j) for j in jobs]
        for obj, _ in results:
            if obj is not None and self.n_objectives is None:
                self.n_objectives = len(obj)
        out = []
        for g, (obj, err) in zip(genomes, results):
            if obj is None:
                log.warning("evaluation failed for genome %s: %s", list(map(float, g)), err)
                obj = np.full(self.n_objectives or 1, np.inf)
            out.append(Individual(np.array(g, dtype=float), obj))
        return out

    def close(self):
        if self.pool:
            self.pool.shutdown()


def _archive_path(archive_dir, generation):
    return Path(archive_dir) / f"generation_{generation:04d}.csv"


def write_generation(archive_dir, generation, population):
    n_genes = len(population[0].genome)
    n_obj = len(population[0].objectives)
    header = ["generation", "index", *(f"gene_{i}" for i in range(n_genes)), *(f"obj_{i}" for i in range(n_obj))]
    rows = [(generation, i, *map(float, ind.genome), *map(float, ind.objectives))
            for i, ind in enumerate(population)]
    return write_csv(_archive_path(archive_dir, generation), header, rows)


def read_generation(path):
    header, rows = read_csv(path)
    n_genes = sum(h.startswith("gene_") for h in header)
    pop = [Individual(np.array([float(v) for v in r[2:2 + n_genes]]),
                      np.array([float(v) for v in r[2 + n_genes:]])) for r in rows]
    return int(rows[0][0]), pop


def latest_generation(archive_dir):
    files = sorted(Path(archive_dir).glob("generation_*.csv"))
    return read_generation(files[-1]) if files else None


@dataclass
class NSGA2Result:
    population: list  # RankedIndividual
    archive: list = field(default_factory=list)  # (generation, genomes, objectives)

    @property
    def pareto_front(self):
        return [r for r in self.population if r.rank == 1]


def _environmental_selection(pool, n):
    objs = _objective_matrix(pool)
    chosen = []
    for front in fast_non_dominated_sort(objs):
        if len(chosen) + len(front) <= n:
            chosen += front
            continue
        dist = crowding_distance(objs[front])
        order = sorted(range(len(front)), key=lambda i: (-dist[i], front[i]))
        chosen += [front[i] for i in order[:n - len(chosen)]]
        break
    return [pool[i] for i in sorted(chosen)]


def _tournament(ranked, n, rng):
    picks = []
    for _ in range(n):
        a, b = rng.integers(len(ranked), size=2)
        picks.append(ranked[a] if crowded_compare(ranked[a], ranked[b]) <= 0 else ranked[b])
    return picks


def _vary(parents, lower, upper, cx_prob, mut_prob, rng):
    children = [np.array(p, dtype=float) for p in parents]
    for i in range(0, len(children) - 1, 2):
        if rng.random() < cx_prob:
            children[i], children[i + 1] = sbx_crossover(children[i], children[i + 1], lower, upper, rng)
    for i in range(len(children)):
        if rng.random() < mut_prob:
            children[i] = polynomial_mutation(children[i], lower, upper, rng)
    fixed = lower == upper
    for c in children:
        c[fixed] = lower[fixed]
    return children


def evolve_nsga2(evaluator, bounds, pop_size, generations, cx_prob=0.9, mut_prob=0.05, seed=0,
                 workers=None, archive_dir=None, resume=False, on_generation=None):
    """NSGA-II with binary crowded tournament, SBX, polynomial mutation and elitist truncation.

    Returns the final ranked population and the per-generation archive.
    Generation 0 is the evaluated random initial population.
    """
    if pop_size < 2 or pop_size % 2:
        raise ValueError("pop_size must be an even number >= 2")
    if generations < 0:
        raise ValueError("generations must be >= 0")
    lower, upper = _bounds(bounds)
    run = _Evaluator(evaluator, workers)
    archive = []
    try:
        start = 0
        state = latest_generation(archive_dir) if (resume and archive_dir) else None
        if state is not None:
            start, pop = state
            run.n_objectives = len(pop[0].objectives)
        else:
            pop = run(list(_random_genomes(pop_size, lower, upper, make_rng(seed, 0))))
        ranked = rank_population(pop)
        archive.append((start, np.array([p.genome for p in pop]), _objective_matrix(pop)))
        if archive_dir and state is None:
            write_generation(archive_dir, 0, pop)
        if on_generation:
            on_generation(start, ranked)
        for g in range(start + 1, generations + 1):
            rng = make_rng(seed, g)
            parents = _tournament(ranked, pop_size, rng)
            children = run(_vary([p.genome for p in parents], lower, upper, cx_prob, mut_prob, rng))
            pop = _environmental_selection([r.individual for r in ranked] + children, pop_size)
            ranked = rank_population(pop)
            archive.append((g, np.array([p.genome for p in pop]), _objective_matrix(pop)))
            if archive_dir:
                write_generation(archive_dir, g, pop)
            if on_generation:
                on_generation(g, ranked)
    finally:
        run.close()
    return NSGA2Result(ranked, archive)


@dataclass
class GAResult:
    best: Individual
    history: list  # best objective per generation
    population: list


def evolve_ga(evaluator, bounds, pop_size, cx_prob=0.5, mut_prob=0.2, generations=40, seed=0,
              workers=None, archive_dir=None, resume=False, on_generation=None):
    """Single-objective GA: roulette selection on ``max(f) - f`` plus (mu + lambda) elitism."""
    if pop_size < 2:
        raise ValueError("pop_size must be >= 2")
    lower, upper = _bounds(bounds)
    run = _Evaluator(evaluator, workers, n_objectives=1)

    def fitness(p):
        return np.array([float(i.objectives[0]) for i in p])

    def best_first(p):
        order = np.argsort(fitness(p), kind="stable")
        return [p[i] for i in order]

    history = []
    try:
        start = 0
        state = latest_generation(archive_dir) if (resume and archive_dir) else None
        if state is not None:
            start, pop = state
        else:
            pop = best_first(run(list(_random_genomes(pop_size, lower, upper, make_rng(seed, 0)))))
            if archive_dir:
                write_generation(archive_dir, 0, pop)
        history.append(float(pop[0].objectives[0]))
        if on_generation:
            on_generation(start, pop)
        for g in range(start + 1, generations + 1):
            rng = make_rng(seed, g)
            f = fitness(pop)
            finite = np.isfinite(f)
            w = np.where(finite, (f[finite].max() if finite.any() else 0.0) - f, 0.0)
            p = w / w.sum() if w.sum() > 0 else np.full(len(pop), 1.0 / len(pop))
            parents = [pop[i].genome for i in rng.choice(len(pop), size=pop_size, p=p)]
            children = run(_vary(parents, lower, upper, cx_prob, mut_prob, rng))
            pop = best_first(pop + children)[:pop_size]
            history.append(float(pop[0].objectives[0]))
            if archive_dir:
                write_generation(archive_dir, g, pop)
            if on_generation:
                on_generation(g, pop)
    finally:
        run.close()
    return GAResult(pop[0], history, pop)


def hypervolume_2d(points, reference):
    """Area dominated by ``points`` and bounded by ``reference`` (minimisation)."""
    r1, r2 = map(float, reference)
    pts = sorted((float(a), float(b)) for a, b in np.asarray(points, dtype=float).reshape(-1, 2)
                 if a < r1 and b < r2)
    hv, prev = 0.0, r2
    for a, b in pts:
        if b < prev:
            hv += (r1 - a) * (prev - b)
            prev = b
    return hv


# --- objectives -----------------------------------------------------------

def _check_target(target):
    keys = set(target)
    if keys != set(MIX_GROUPS):
        missing, extra = sorted(set(MIX_GROUPS) - keys), sorted(keys - set(MIX_GROUPS))
        raise InvalidTargetError(f"target must cover {sorted(MIX_GROUPS)}; missing {missing}, unknown {extra}")


def mix_error(simulated, target):
    """Mean absolute difference of percentage shares over the technology groups."""
    _check_target(target)
    return sum(abs(simulated[t] - target[t]) for t in MIX_GROUPS) / len(MIX_GROUPS)


def objective_mix_error(result, target, mode="final_year"):
    """Calibration error of a simulated mix against a target mix.

    ``final_year``: ``target`` maps technology group to share (%), compared
    with the last simulated year. ``summed``: ``target`` maps year to such a
    mapping and the per-year errors are added up.
    """
    if mode == "final_year":
        return mix_error(result.mix_shares(), target)
    if mode == "summed":
        return sum(mix_error(result.mix_shares(year), t) for year, t in sorted(target.items()))
    raise ValueError(f"unknown mode {mode!r}")


def objective_carbon(result):
    """(average price, relative carbon intensity) of the final simulated year."""
    return (result.average_price(), result.relative_carbon_intensity())


# --- genomes --------------------------------------------------------------

class CarbonPolicyGenome:
    """Carbon-tax encodings: one price per year, or a linear trend ``a1 * t + a2``."""

    PER_YEAR_BOUNDS = (0.0, 250.0)
    LINEAR_BOUNDS = ((-14.0, 14.0), (0.0, 250.0))

    def __init__(self, encoding="per-year", n_genes=18):
        if encoding not in ("per-year", "linear"):
            raise ValueError(f"unknown encoding {encoding!r}")
        self.encoding = encoding
        self.n_genes = n_genes if encoding == "per-year" else 2

    @property
    def bounds(self):
        if self.encoding == "linear":
            return list(self.LINEAR_BOUNDS)
        return [self.PER_YEAR_BOUNDS] * self.n_genes

    def schedule(self, genome, start_year, n_years):
        if self.encoding == "linear":
            return CarbonTaxSchedule.linear(start_year, n_years, float(genome[0]), float(genome[1]))
        return CarbonTaxSchedule.per_year(start_year, [float(g) for g in genome], self.PER_YEAR_BOUNDS)


class CalibrationGenome:
    """PPDC encodings: a single ``(m, c)``, or per-year pairs plus sigma_m, sigma_c and S_n."""

    SINGLE_BOUNDS = ((0.0, 0.004), (-30.0, 100.0))
    YEAR_BOUNDS = ((0.0, 0.003), (-30.0, 50.0))
    SIGMA_BOUNDS = (0.0, 0.001)
    SUBSIDY_BOUNDS = (0.0, 250.0)

    def __init__(self, mode="single", n_years=17):
        if mode not in ("single", "long-term"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.n_years = n_years

    @property
    def bounds(self):
        if self.mode == "single":
            return list(self.SINGLE_BOUNDS)
        return [*self.YEAR_BOUNDS * self.n_years, self.SIGMA_BOUNDS, self.SIGMA_BOUNDS, self.SUBSIDY_BOUNDS]

    def decode(self, genome, start_year):
        """(PredictedPriceDurationCurve, nuclear subsidy or None)."""
        g = [float(v) for v in genome]
        if self.mode == "single":
            return PredictedPriceDurationCurve(g[0], g[1]), None
        pairs = {start_year + i: (g[2 * i], g[2 * i + 1]) for i in range(self.n_years)}
        last = pairs[start_year + self.n_years - 1]
        sigma_m, sigma_c, subsidy = g[2 * self.n_years:]
        return PredictedPriceDurationCurve(last[0], last[1], pairs, sigma_m, sigma_c), subsidy


class CarbonEvaluator:
    """Genome -> (final-year average price, relative carbon intensity)."""

    def __init__(self, scenario, encoding="per-year", seed=0, n_genes=None):
        self.scenario = scenario
        self.seed = seed
        self.genome = CarbonPolicyGenome(encoding, n_genes or scenario.config.horizon_yr)

    def __call__(self, genome):
        cfg = self.scenario.config
        carbon = self.genome.schedule(genome, cfg.start_year, cfg.horizon_yr)
        return objective_carbon(run_simulation(self.scenario, self.seed, carbon=carbon))


class CalibrationEvaluator:
    """Genome -> mix error of the simulation driven by the decoded PPDC."""

    def __init__(self, scenario, target, mode="final_year", seed=0, genome=None):
        self.scenario = scenario
        self.target = target
        self.mode = mode
        self.seed = seed
        self.genome = genome or CalibrationGenome("single")

    def __call__(self, genome):
        ppdc, subsidy = self.genome.decode(genome, self.scenario.config.start_year)
        result = run_simulation(self.scenario, self.seed, ppdc=ppdc, nuclear_subsidy=subsidy)
        return objective_mix_error(result, self.target, self.mode)
