import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elecmarket.errors import InvalidStateError, InvalidTargetError
from elecmarket.optimize import (
    CalibrationGenome,
    CarbonPolicyGenome,
    Individual,
    RankedIndividual,
    crowded_compare,
    crowding_distance,
    dominates,
    evolve_ga,
    evolve_nsga2,
    fast_non_dominated_sort,
    hypervolume_2d,
    latest_generation,
    mix_error,
    objective_carbon,
    objective_mix_error,
    polynomial_mutation,
    rank_population,
    sbx_crossover,
)
from elecmarket.stochastic import make_rng
from oracles import brute_force_fronts


def schaffer(x):
    return (x[0] ** 2, (x[0] - 2) ** 2)


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def constant(x):
    return 1.0


def fails_on_negative(x):
    if x[0] < 0:
        raise RuntimeError("boom")
    return (x[0], 1 - x[0])


def test_sort_examples():
    assert fast_non_dominated_sort([(1, 1), (2, 2)]) == [[0], [1]]
    assert fast_non_dominated_sort([(1, 2), (2, 1)]) == [[0, 1]]
    with pytest.raises(InvalidStateError):
        fast_non_dominated_sort([Individual(np.zeros(1))])


@pytest.mark.parametrize("m", [2, 3])
def test_sort_matches_brute_force(m):
    rng = make_rng(0, m)
    for _ in range(5):
        f = rng.integers(0, 8, size=(80, m)).astype(float)  # many ties and duplicates
        assert fast_non_dominated_sort(f) == brute_force_fronts(f)


def test_crowding_examples():
    assert np.all(np.isinf(crowding_distance([(0, 1), (1, 0)])))
    d = crowding_distance([(0, 2), (1, 1), (2, 0)])
    assert d[1] == 2.0 and np.isinf(d[0]) and np.isinf(d[2])
    # each duplicate sees its twin at zero gap on one side
    d = crowding_distance([(0, 2), (1, 1), (1, 1), (2, 0)])
    assert d[1] == d[2] == 1.0


def _r(rank, dist, idx):
    return RankedIndividual(Individual(np.zeros(1), np.zeros(1)), rank, dist, idx)


def test_crowded_compare_examples():
    assert crowded_compare(_r(1, 0.0, 5), _r(2, np.inf, 0)) == -1
    assert crowded_compare(_r(1, np.inf, 5), _r(1, 2.0, 0)) == -1
    assert crowded_compare(_r(1, 2.0, 0), _r(1, 2.0, 3)) == -1
    assert crowded_compare(_r(1, 2.0, 3), _r(1, 2.0, 3)) == 0


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)), min_size=3, max_size=12))
def test_domination_is_strict_partial_order(points):
    for a in points:
        assert not dominates(a, a)
        for b in points:
            if dominates(a, b):
                assert not dominates(b, a)
                for c in points:
                    if dominates(b, c):
                        assert dominates(a, c)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 1))
def test_affine_invariance(seed, scale, shift, axis):
    f = make_rng(seed).random((20, 2))
    g = f.copy()
    g[:, axis] = scale * g[:, axis] + shift
    key = lambda r: (r.rank, -r.distance, r.index)  # noqa: E731
    a = [Individual(np.zeros(1), row) for row in f]
    b = [Individual(np.zeros(1), row) for row in g]
    ra, rb = rank_population(a), rank_population(b)
    assert [r.rank for r in ra] == [r.rank for r in rb]
    np.testing.assert_allclose([r.distance for r in ra], [r.distance for r in rb], rtol=1e-9)
    assert min(ra, key=key).index == min(rb, key=key).index


@given(st.integers(0, 10_000))
def test_operators_respect_bounds(seed):
    rng = make_rng(seed)
    lo, hi = np.array([-1.0, 0.0, 5.0]), np.array([1.0, 0.0, 6.0])
    x1, x2 = lo + (hi - lo) * rng.random(3), lo + (hi - lo) * rng.random(3)
    for c in (*sbx_crossover(x1, x2, lo, hi, rng), polynomial_mutation(x1, lo, hi, rng, gene_prob=1.0)):
        assert np.all(c >= lo) and np.all(c <= hi)


def test_zero_generations_returns_initial():
    res = evolve_nsga2(schaffer, [(-5, 5)], 10, 0, seed=1)
    assert len(res.archive) == 1
    init = make_rng(1, 0).random((10, 1)) * 10 - 5
    np.testing.assert_array_equal(np.array([r.genome for r in res.population]), init)


def test_schaffer_front_and_elitism():
    fronts = []
    res = evolve_nsga2(schaffer, [(-5, 5)], 40, 40, cx_prob=0.5, mut_prob=0.2, seed=2,
                       on_generation=lambda g, r: fronts.append([x.objectives for x in r if x.rank == 1]))
    x = np.array([r.genome[0] for r in res.pareto_front])
    assert np.all((x > -0.05) & (x < 2.05))
    for prev, nxt in zip(fronts, fronts[1:]):
        for b in nxt:
            assert not any(dominates(a, b) for a in prev)


def test_hypervolume_examples():
    assert hypervolume_2d([(1, 1)], (2, 2)) == 1.0
    assert hypervolume_2d([(0, 1), (1, 0)], (2, 2)) == 3.0
    assert hypervolume_2d([(3, 3)], (2, 2)) == 0.0
    assert hypervolume_2d([(0, 1), (1, 0), (1, 1)], (2, 2)) == 3.0


def test_resume_matches_uninterrupted(tmp_path):
    full = evolve_nsga2(schaffer, [(-5, 5)], 12, 6, seed=4, archive_dir=tmp_path / "a")
    evolve_nsga2(schaffer, [(-5, 5)], 12, 3, seed=4, archive_dir=tmp_path / "b")
    resumed = evolve_nsga2(schaffer, [(-5, 5)], 12, 6, seed=4, archive_dir=tmp_path / "b", resume=True)
    for a, b in zip(full.population, resumed.population):
        np.testing.assert_array_equal(a.genome, b.genome)
    for g in range(7):
        assert (tmp_path / "a" / f"generation_{g:04d}.csv").read_bytes() == \
               (tmp_path / "b" / f"generation_{g:04d}.csv").read_bytes()
    gen, pop = latest_generation(tmp_path / "a")
    assert gen == 6 and len(pop) == 12


def test_parallel_matches_serial():
    a = evolve_nsga2(schaffer, [(-5, 5)], 8, 2, seed=5)
    b = evolve_nsga2(schaffer, [(-5, 5)], 8, 2, seed=5, workers=2)
    for x, y in zip(a.population, b.population):
        np.testing.assert_array_equal(x.genome, y.genome)


def test_evaluator_failure_gets_worst(caplog):
    res = evolve_nsga2(fails_on_negative, [(-1, 1)], 10, 1, seed=0)
    _, _, objs = res.archive[0]
    genomes = res.archive[0][1]
    assert np.all(np.isinf(objs[genomes[:, 0] < 0]))
    assert "evaluation failed" in caplog.text


def test_nsga_validation():
    with pytest.raises(ValueError):
        evolve_nsga2(schaffer, [(-5, 5)], 7, 1)
    with pytest.raises(ValueError):
        evolve_nsga2(schaffer, [(5, -5)], 8, 1)


def test_ga_sphere():
    res = evolve_ga(sphere, [(-5, 5)] * 3, 60, generations=200, seed=0)
    assert res.best.objectives[0] < 1e-2
    assert all(b >= a for a, b in zip(res.history[1:], res.history))


def test_ga_constant_and_collapsed():
    res = evolve_ga(constant, [(-1, 1)], 6, generations=3, seed=0)
    init = make_rng(0, 0).random((6, 1)) * 2 - 1
    assert any(np.array_equal(res.best.genome, g) for g in init)
    res = evolve_ga(sphere, [(2.5, 2.5), (-1, 1)], 6, generations=5, seed=0)
    assert all(ind.genome[0] == 2.5 for ind in res.population)


def test_single_objective_nsga_orders_like_ga():
    res = evolve_nsga2(sphere, [(-5, 5)], 10, 5, seed=0)
    ranks = sorted((r.rank, float(r.objectives[0])) for r in res.population)
    assert [o for _, o in ranks] == sorted(o for _, o in ranks)


def test_mix_error_examples():
    target = {"wind": 20.0, "nuclear": 20.0, "solar": 20.0, "ccgt": 20.0, "coal": 20.0}
    assert mix_error(target, target) == 0
    assert mix_error({**target, "coal": 30.0}, target) == 2.0
    with pytest.raises(InvalidTargetError):
        mix_error(target, {"wind": 100.0})


class _FakeResult:
    def __init__(self, shares):
        self.shares = shares

    def mix_shares(self, year=None):
        return self.shares[max(self.shares) if year is None else year]


def test_summed_mode():
    t = {"wind": 20.0, "nuclear": 20.0, "solar": 20.0, "ccgt": 20.0, "coal": 20.0}
    res = _FakeResult({1: {**t, "coal": 30.0}, 2: {**t, "coal": 40.0}})
    assert objective_mix_error(res, {1: t, 2: t}, "summed") == 6.0
    assert objective_mix_error(res, t) == 4.0


def test_genomes():
    g = CarbonPolicyGenome("linear")
    s = g.schedule([10.0, 5.0], 2020, 3)
    assert [s.price(y) for y in (2020, 2021, 2022)] == [5.0, 15.0, 25.0]
    assert len(CarbonPolicyGenome("per-year", 3).bounds) == 3
    c = CalibrationGenome("long-term", n_years=2)
    curve, subsidy = c.decode([0.001, 5, 0.002, 6, 0.0, 0.0, 70.0], 2018)
    assert curve.for_year(2018).c == 5 and curve.for_year(2019).m == 0.002 and subsidy == 70.0
    assert len(c.bounds) == 7


def test_objective_carbon_on_toy(toy):
    from elecmarket.simulation import run_simulation
    r = run_simulation(toy, seed=0)
    price, intensity = objective_carbon(r)
    assert price == r.average_price() and intensity == r.relative_carbon_intensity()
