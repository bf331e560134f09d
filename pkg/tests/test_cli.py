import json

import pytest
import yaml

from elecmarket.cli import main
from elecmarket.outputs import read_csv
from elecmarket.scenario import DATA_DIR


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def test_simulate_outputs_and_manifest(tmp_path):
    code, out = run(tmp_path, "a", "simulate", "--seed", "7")
    assert code == 0
    for f in ("mix.csv", "clearing.csv", "investments.csv", "ledger.csv", "summary.csv", "manifest.json"):
        assert (out / f).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7 and not manifest["seed_generated"]
    assert len(manifest["config_hash"]) == 64


def test_generated_seed_is_recorded_and_replayable(tmp_path):
    _, a = run(tmp_path, "a", "simulate")
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seed_generated"]
    _, b = run(tmp_path, "b", "simulate", "--seed", str(manifest["seed"]))
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()


def test_horizon_override(tmp_path):
    code, out = run(tmp_path, "a", "simulate", "--seed", "1", "--override", "horizon=18")
    assert code == 0
    _, rows = read_csv(out / "summary.csv")
    assert [int(r[0]) for r in rows] == list(range(2018, 2036))


def test_missing_fuel_exits_2(tmp_path, capsys):
    raw = yaml.safe_load((DATA_DIR / "toy_uk.yaml").read_text())
    raw["plants"][0]["fuel"] = "unobtainium"
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(raw))
    code, _ = run(tmp_path, "a", "simulate", "--config", str(path), "--seed", "1")
    assert code == 2
    err = capsys.readouterr().err
    assert "plants[0].fuel" in err and "unobtainium" in err


def test_missing_file_exits_1(tmp_path):
    code, _ = run(tmp_path, "a", "cluster-days", "--data", "nope.csv", "--seed", "1")
    assert code == 1


def test_monte_carlo_runs_and_resume(tmp_path):
    code, out = run(tmp_path, "mc", "simulate", "--seed", "3", "--runs", "3",
                    "--override", "stochastic.wacc=true", "--override", "stochastic.variable_om=true")
    assert code == 0
    first = (out / "monte_carlo.csv").read_bytes()
    (out / "run_001" / "summary.csv").unlink()
    code, _ = run(tmp_path, "mc", "simulate", "--seed", "3", "--runs", "3", "--resume",
                  "--override", "stochastic.wacc=true", "--override", "stochastic.variable_om=true")
    assert code == 0 and (out / "monte_carlo.csv").read_bytes() == first
    _, rows = read_csv(out / "monte_carlo.csv")
    assert len({r[3] for r in rows}) > 1


def test_cluster_days(tmp_path):
    code, out = run(tmp_path, "c", "cluster-days", "--seed", "0", "--k", "1", "--k", "4", "--restarts", "2")
    assert code == 0
    header, rows = read_csv(out / "metrics.csv")
    assert [r[0] for r in rows] == ["1", "4"]
    assert (out / "representative_year_k4.csv").exists()


def test_metrics(tmp_path):
    fc = tmp_path / "fc.csv"
    fc.write_text("actual,predicted\n100.0,110.0\n")
    hist = tmp_path / "hist.csv"
    hist.write_text("value\n90.0\n100.0\n")
    code, out = run(tmp_path, "m", "metrics", "--seed", "0", "--forecast", str(fc), "--history", str(hist))
    assert code == 0
    _, rows = read_csv(out / "forecast_metrics.csv")
    assert {r[0]: float(r[1]) for r in rows} == {"mape": 10.0, "rmse": 10.0, "mase": 1.0}


@pytest.mark.slow
def test_small_optimisers_resume(tmp_path):
    args = ["optimize-carbon", "--seed", "2", "--pop", "4", "--generations", "2"]
    code, a = run(tmp_path, "a", *args)
    assert code == 0
    code, b = run(tmp_path, "b", *args[:-1], "1")
    code, b = run(tmp_path, "b", *args, "--resume")
    assert (a / "pareto.csv").read_bytes() == (b / "pareto.csv").read_bytes()
    code, c = run(tmp_path, "c", "calibrate", "--seed", "2", "--target-ppdc", "0.0015,10", "--pop", "4",
                  "--generations", "1")
    assert code == 0
    header, rows = read_csv(c / "best.csv")
    assert header == ["m", "c", "error"] and len(rows) == 1
