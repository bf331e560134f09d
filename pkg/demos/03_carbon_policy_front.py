"""
Searching carbon tax schedules
==============================

NSGA-II searches yearly carbon prices that trade off the final-year
electricity price against the carbon intensity. Each genome is one tax per
simulated year; each evaluation is a full simulation of the toy market.
The printed front is the set of schedules no other schedule beats on both.
"""
import numpy as np

from elecmarket.optimize import CarbonEvaluator, evolve_nsga2, hypervolume_2d
from elecmarket.scenario import load_scenario

scenario = load_scenario("toy_uk.yaml")
evaluator = CarbonEvaluator(scenario, "per-year", seed=0)
result = evolve_nsga2(evaluator, evaluator.genome.bounds, pop_size=24, generations=10, seed=0)

reference = result.archive[0][2].max(axis=0)
for g, _, objs in result.archive:
    print(f"generation {g:2d}: hypervolume {hypervolume_2d(objs, reference):9.1f}")

print("\nPareto front (price, carbon index) <- yearly tax:")
for r in sorted(result.pareto_front, key=lambda r: tuple(r.objectives)):
    print(f"  {r.objectives[0]:6.2f} {r.objectives[1]:6.1f} <- {np.round(r.genome).astype(int).tolist()}")
