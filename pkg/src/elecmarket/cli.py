"""Command-line entry point.

Subcommands: simulate, cluster-days, calibrate, optimize-carbon,
market-power, metrics. Each writes CSVs plus a ``manifest.json`` (config
hash, seed, version) into ``--out`` (default ``$ELECMARKET_OUT`` or
``./elecmarket-out``).
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from elecmarket import __version__
from elecmarket.bidding import run_market_power_experiment, write_market_power_report
from elecmarket.errors import ScenarioError
from elecmarket.metrics import ForecastEvalSeries, mape, mase, rmse
from elecmarket.optimize import (
    CalibrationEvaluator,
    CalibrationGenome,
    CarbonEvaluator,
    evolve_ga,
    evolve_nsga2,
    hypervolume_2d,
)
from elecmarket.outputs import read_csv, write_csv, write_json
from elecmarket.scenario import DATA_DIR, load_scenario
from elecmarket.simulation import run_simulation, write_results
from elecmarket.stochastic import fit_residual_distribution, read_residuals_csv, write_fit_report_csv
from elecmarket.temporal import (
    approximation_metrics,
    load_daily_csv,
    representative_year,
    write_metrics_csv,
    write_representative_year_csv,
)

log = logging.getLogger("elecmarket")


def _file_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolve(path):
    p = Path(path)
    if p.exists():
        return p
    if (DATA_DIR / p).exists():
        return DATA_DIR / p
    raise FileNotFoundError(path)


def _manifest(args, out, extra=None, scenario=None):
    info = {
        "command": args.command,
        "version": __version__,
        "seed": args.seed,
        "seed_generated": args.seed_generated,
        "overrides": list(getattr(args, "override", None) or []),
    }
    if scenario is not None:
        info["config"] = str(args.config)
        info["config_hash"] = scenario.config_hash()
    elif getattr(args, "config", None):
        info["config"] = str(args.config)
        info["config_hash"] = _file_hash(_resolve(args.config))
    info.update(extra or {})
    write_json(out / "manifest.json", info)


def _run_seed(seed, i):
    """Seed of Monte-Carlo repetition ``i``."""
    return int(np.random.SeedSequence([seed, i]).generate_state(2, np.uint32).view(np.uint64)[0] >> 1)


def _simulate_one(job):
    scenario, seed, out = job
    result = run_simulation(scenario, seed)
    write_results(result, out)
    return [(y, result.average_price(y), result.relative_carbon_intensity(y)) for y in result.years]


def cmd_simulate(args, out):
    scenario = load_scenario(_resolve(args.config), args.override)
    if args.runs == 1:
        jobs = [(scenario, args.seed, out)]
    else:
        jobs = [(scenario, _run_seed(args.seed, i), out / f"run_{i:03d}") for i in range(args.runs)]
    if args.resume:
        jobs = [j for j in jobs if not (Path(j[2]) / "summary.csv").exists()]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            list(pool.map(_simulate_one, jobs))
    else:
        for j in jobs:
            _simulate_one(j)
    if args.runs > 1:
        rows = []
        for i in range(args.runs):
            _, summary = read_csv(out / f"run_{i:03d}" / "summary.csv")
            rows += [(i, _run_seed(args.seed, i), int(r[0]), float(r[1]), float(r[3])) for r in summary]
        write_csv(out / "monte_carlo.csv", ["run", "seed", "year", "average_price", "relative_carbon_intensity"],
                  rows)
    _manifest(args, out, {"runs": args.runs}, scenario)


def cmd_cluster_days(args, out):
    data = load_daily_csv(_resolve(args.data))
    rows = []
    for k in args.k:
        rep = representative_year(data, k, args.method, args.representative, args.restarts, seed=args.seed)
        write_representative_year_csv(rep, out / f"representative_year_k{k}.csv")
        rows.append({"k": k, "method": args.method, **approximation_metrics(data, rep)})
    write_metrics_csv(rows, out / "metrics.csv")
    _manifest(args, out, {"data": str(args.data), "data_hash": _file_hash(_resolve(args.data))})


def _load_target(args, scenario):
    if args.target_ppdc:
        m, c = (float(v) for v in args.target_ppdc.split(","))
        ppdc, _ = CalibrationGenome("single").decode([m, c], scenario.config.start_year)
        result = run_simulation(scenario, args.seed, ppdc=ppdc)
        if args.mode == "summed":
            return {y: result.mix_shares(y) for y in result.years}
        return result.mix_shares()
    with open(_resolve(args.target), encoding="utf-8") as fh:
        target = yaml.safe_load(fh)
    if args.mode == "summed":
        return {int(y): {k: float(v) for k, v in t.items()} for y, t in target.items()}
    return {k: float(v) for k, v in target.items()}


def cmd_calibrate(args, out):
    if not (args.target or args.target_ppdc):
        raise SystemExit("calibrate: give --target FILE or --target-ppdc M,C")
    scenario = load_scenario(_resolve(args.config), args.override)
    target = _load_target(args, scenario)
    genome = CalibrationGenome("single")
    evaluator = CalibrationEvaluator(scenario, target, args.mode, args.seed, genome)
    result = evolve_ga(evaluator, genome.bounds, args.pop, args.cx, args.mut, args.generations, args.seed,
                       workers=args.workers, archive_dir=out / "archive", resume=args.resume)
    write_csv(out / "ga_history.csv", ["generation", "best_error"], list(enumerate(result.history)))
    write_csv(out / "best.csv", ["m", "c", "error"],
              [(*map(float, result.best.genome), float(result.best.objectives[0]))])
    _manifest(args, out, {"target": target if not args.target else str(args.target)}, scenario)


def cmd_optimize_carbon(args, out):
    scenario = load_scenario(_resolve(args.config), args.override)
    evaluator = CarbonEvaluator(scenario, args.encoding, args.seed, args.genes)
    result = evolve_nsga2(evaluator, evaluator.genome.bounds, args.pop, args.generations, args.cx, args.mut,
                          args.seed, workers=args.workers, archive_dir=out / "archive", resume=args.resume)
    front = sorted(result.pareto_front, key=lambda r: tuple(r.objectives))
    n = len(front[0].genome)
    write_csv(out / "pareto.csv", [*(f"gene_{i}" for i in range(n)), "average_price", "relative_carbon_intensity"],
              [(*map(float, r.genome), *map(float, r.objectives)) for r in front])
    ref = result.archive[0][2].max(axis=0)
    write_csv(out / "hypervolume.csv", ["generation", "hypervolume"],
              [(g, hypervolume_2d(objs, ref)) for g, _, objs in result.archive])
    _manifest(args, out, {"encoding": args.encoding}, scenario)


def cmd_market_power(args, out):
    scenario = load_scenario(_resolve(args.config), args.override)
    learners = args.learner or [scenario.gencos[0].name]
    report = run_market_power_experiment(scenario, learners, args.cap, args.episodes, args.seed,
                                         reward=args.reward)
    write_market_power_report(report, out)
    _manifest(args, out, {"cap": args.cap, "learners": sorted(learners), "episodes": args.episodes,
                          "final_price": report.final_price, "baseline_price": report.baseline_price},
              scenario)


def _column(path, name=None):
    header, rows = read_csv(path)
    idx = header.index(name) if name in header else 0
    return np.array([float(r[idx]) for r in rows if r])


def cmd_metrics(args, out):
    rows = []
    if args.forecast:
        s = ForecastEvalSeries(_column(args.forecast, "actual"), _column(args.forecast, "predicted"),
                               read_residuals_csv(args.history) if args.history else None)
        rows += [("mape", mape(s)), ("rmse", rmse(s))]
        if s.history is not None:
            rows.append(("mase", mase(s)))
        write_csv(out / "forecast_metrics.csv", ["metric", "value"], rows)
    if args.residuals:
        dist = fit_residual_distribution(read_residuals_csv(args.residuals))
        write_fit_report_csv(dist, out / "residual_fit.csv")
    if not (args.forecast or args.residuals):
        raise SystemExit("metrics: give --forecast FILE and/or --residuals FILE")
    _manifest(args, out)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (generated and recorded if absent)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for independent evaluations")
    common.add_argument("--out", default=os.environ.get("ELECMARKET_OUT", "elecmarket-out"),
                        help="output directory (default $ELECMARKET_OUT)")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="scenario override, dotted key path; repeatable")
    common.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="elecmarket", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run a scenario")
    s.add_argument("--config", default="toy_uk.yaml")
    s.add_argument("--runs", type=int, default=1, help="Monte-Carlo repetitions")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("cluster-days", parents=[common], help="build representative days and metrics")
    s.add_argument("--data", default="synthetic_365.csv")
    s.add_argument("--k", type=int, action="append", help="number of representative days; repeatable")
    s.add_argument("--method", choices=["kmeans", "ward"], default="kmeans")
    s.add_argument("--representative", choices=["medoid", "centroid"], default="medoid")
    s.add_argument("--restarts", type=int, default=10)
    s.set_defaults(func=cmd_cluster_days)

    s = sub.add_parser("calibrate", parents=[common], help="GA calibration of the predicted price curve")
    s.add_argument("--config", default="toy_uk.yaml")
    s.add_argument("--target", help="YAML target mix (percent per technology group)")
    s.add_argument("--target-ppdc", help="generate the target from a known curve 'M,C'")
    s.add_argument("--mode", choices=["final_year", "summed"], default="final_year")
    s.add_argument("--pop", type=int, default=30)
    s.add_argument("--generations", type=int, default=40)
    s.add_argument("--cx", type=float, default=0.5)
    s.add_argument("--mut", type=float, default=0.2)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("optimize-carbon", parents=[common], help="NSGA-II carbon tax search")
    s.add_argument("--config", default="toy_uk.yaml")
    s.add_argument("--encoding", choices=["per-year", "linear"], default="per-year")
    s.add_argument("--genes", type=int, default=None, help="per-year genes (default: horizon years)")
    s.add_argument("--pop", type=int, default=24)
    s.add_argument("--generations", type=int, default=20)
    s.add_argument("--cx", type=float, default=0.9)
    s.add_argument("--mut", type=float, default=0.05)
    s.set_defaults(func=cmd_optimize_carbon)

    s = sub.add_parser("market-power", parents=[common], help="Q-learning market power experiment")
    s.add_argument("--config", default="market_power_desk.yaml")
    s.add_argument("--cap", type=float, default=600.0)
    s.add_argument("--learner", action="append", help="learner GenCo name; repeatable")
    s.add_argument("--episodes", type=int, default=300)
    s.add_argument("--reward", choices=["price", "profit"], default="price")
    s.set_defaults(func=cmd_market_power)

    s = sub.add_parser("metrics", parents=[common], help="forecast-error metrics and residual fitting")
    s.add_argument("--forecast", help="CSV with columns actual,predicted")
    s.add_argument("--history", help="single-column CSV of training history (for MASE)")
    s.add_argument("--residuals", help="single-column CSV of residuals to fit")
    s.set_defaults(func=cmd_metrics)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.seed_generated = args.seed is None
    if args.seed is None:
        args.seed = random.SystemRandom().randrange(2 ** 63)
    if getattr(args, "k", "absent") is None:
        args.k = [8]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        args.func(args, out)
    except ScenarioError as exc:
        print(f"elecmarket: invalid scenario: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"elecmarket: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
